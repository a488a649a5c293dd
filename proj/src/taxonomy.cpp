#include "mframe/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace mframe {

namespace {

constexpr std::array<MoralFoundation, kNumRoles> kRoleFoundation = {
    MoralFoundation::CareHarm,           MoralFoundation::CareHarm,
    MoralFoundation::CareHarm,           MoralFoundation::FairnessCheating,
    MoralFoundation::FairnessCheating,   MoralFoundation::FairnessCheating,
    MoralFoundation::LoyaltyBetrayal,    MoralFoundation::LoyaltyBetrayal,
    MoralFoundation::LoyaltyBetrayal,    MoralFoundation::AuthoritySubversion,
    MoralFoundation::AuthoritySubversion, MoralFoundation::AuthoritySubversion,
    MoralFoundation::AuthoritySubversion, MoralFoundation::PurityDegradation,
    MoralFoundation::PurityDegradation,  MoralFoundation::PurityDegradation};

constexpr std::array<std::string_view, kNumFoundations> kFoundationNames = {
    "CareHarm", "FairnessCheating", "LoyaltyBetrayal", "AuthoritySubversion", "PurityDegradation"};

constexpr std::array<std::string_view, kNumRoles> kRoleNames = {
    "TargetOfCareHarm",        "EntityCausingHarm",      "EntityProvidingCare",
    "TargetOfFairnessCheating", "EntityEnsuringFairness", "EntityDoingCheating",
    "TargetOfLoyaltyBetrayal", "EntityBeingLoyal",       "EntityDoingBetrayal",
    "JustifiedAuthority",      "JustifiedAuthorityOver", "FailingAuthority",
    "FailingAuthorityOver",    "TargetOfPurityDegradation", "EntityPreservingPurity",
    "EntityCausingDegradation"};

// Roles are laid out contiguously per foundation.
constexpr std::array<std::size_t, kNumFoundations + 1> kRoleOffsets = {0, 3, 6, 9, 13, 16};

// Lowercase, keep alphanumerics only: "Entity causing harm" -> "entitycausingharm".
std::string squash(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

}  // namespace

MoralFoundation role_to_mf(MoralRole role) { return kRoleFoundation[index_of(role)]; }

Polarity role_polarity(MoralRole role) {
  switch (role) {
    case MoralRole::EntityCausingHarm:
    case MoralRole::EntityDoingCheating:
    case MoralRole::EntityDoingBetrayal:
    case MoralRole::FailingAuthority:
    case MoralRole::EntityCausingDegradation:
      return Polarity::Negative;
    default:
      return Polarity::Positive;
  }
}

std::span<const MoralRole> roles_of(MoralFoundation f) {
  const auto i = index_of(f);
  return std::span<const MoralRole>(kAllRoles).subspan(kRoleOffsets[i],
                                                        kRoleOffsets[i + 1] - kRoleOffsets[i]);
}

bool is_target_role(MoralRole role) {
  switch (role) {
    case MoralRole::TargetOfCareHarm:
    case MoralRole::TargetOfFairnessCheating:
    case MoralRole::TargetOfLoyaltyBetrayal:
    case MoralRole::TargetOfPurityDegradation:
    case MoralRole::JustifiedAuthorityOver:
    case MoralRole::FailingAuthorityOver:
      return true;
    default:
      return false;
  }
}

std::string_view name_of(MoralFoundation f) { return kFoundationNames[index_of(f)]; }
std::string_view name_of(MoralRole r) { return kRoleNames[index_of(r)]; }
std::string_view name_of(Polarity p) { return p == Polarity::Positive ? "Positive" : "Negative"; }

std::optional<MoralFoundation> parse_foundation(std::string_view text) {
  const std::string key = squash(text);
  if (key.empty()) return std::nullopt;
  static const std::array<std::array<std::string_view, 3>, kNumFoundations> aliases = {{
      {"care", "harm", "careharm"},
      {"fairness", "cheating", "fairnesscheating"},
      {"loyalty", "betrayal", "loyaltybetrayal"},
      {"authority", "subversion", "authoritysubversion"},
      {"purity", "degradation", "puritydegradation"},
  }};
  for (std::size_t i = 0; i < kNumFoundations; ++i) {
    for (auto alias : aliases[i]) {
      if (key == alias) return kAllFoundations[i];
    }
  }
  return std::nullopt;
}

std::optional<MoralRole> parse_role(std::string_view text) {
  const std::string key = squash(text);
  for (std::size_t i = 0; i < kNumRoles; ++i) {
    if (key == squash(kRoleNames[i])) return kAllRoles[i];
  }
  // Table spellings that differ from the identifiers.
  if (key == "targetofcare" || key == "targetofharm") return MoralRole::TargetOfCareHarm;
  if (key == "targetoffairness" || key == "targetofcheating") return MoralRole::TargetOfFairnessCheating;
  if (key == "targetofloyalty" || key == "targetofbetrayal") return MoralRole::TargetOfLoyaltyBetrayal;
  if (key == "targetofpurity" || key == "targetofdegradation") return MoralRole::TargetOfPurityDegradation;
  return std::nullopt;
}

}  // namespace mframe
