#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace mframe {

// Declaration order is the fixed total order used for tie-breaking.
enum class MoralFoundation : std::uint8_t {
  CareHarm,
  FairnessCheating,
  LoyaltyBetrayal,
  AuthoritySubversion,
  PurityDegradation,
};

enum class MoralRole : std::uint8_t {
  TargetOfCareHarm,
  EntityCausingHarm,
  EntityProvidingCare,
  TargetOfFairnessCheating,
  EntityEnsuringFairness,
  EntityDoingCheating,
  TargetOfLoyaltyBetrayal,
  EntityBeingLoyal,
  EntityDoingBetrayal,
  JustifiedAuthority,
  JustifiedAuthorityOver,
  FailingAuthority,
  FailingAuthorityOver,
  TargetOfPurityDegradation,
  EntityPreservingPurity,
  EntityCausingDegradation,
};

enum class Polarity : std::uint8_t { Positive, Negative };

inline constexpr std::size_t kNumFoundations = 5;
inline constexpr std::size_t kNumRoles = 16;

inline constexpr std::array<MoralFoundation, kNumFoundations> kAllFoundations = {
    MoralFoundation::CareHarm, MoralFoundation::FairnessCheating, MoralFoundation::LoyaltyBetrayal,
    MoralFoundation::AuthoritySubversion, MoralFoundation::PurityDegradation};

inline constexpr std::array<MoralRole, kNumRoles> kAllRoles = {
    MoralRole::TargetOfCareHarm,         MoralRole::EntityCausingHarm,
    MoralRole::EntityProvidingCare,      MoralRole::TargetOfFairnessCheating,
    MoralRole::EntityEnsuringFairness,   MoralRole::EntityDoingCheating,
    MoralRole::TargetOfLoyaltyBetrayal,  MoralRole::EntityBeingLoyal,
    MoralRole::EntityDoingBetrayal,      MoralRole::JustifiedAuthority,
    MoralRole::JustifiedAuthorityOver,   MoralRole::FailingAuthority,
    MoralRole::FailingAuthorityOver,     MoralRole::TargetOfPurityDegradation,
    MoralRole::EntityPreservingPurity,   MoralRole::EntityCausingDegradation};

constexpr std::size_t index_of(MoralFoundation f) { return static_cast<std::size_t>(f); }
constexpr std::size_t index_of(MoralRole r) { return static_cast<std::size_t>(r); }

MoralFoundation role_to_mf(MoralRole role);
Polarity role_polarity(MoralRole role);

// Roles owned by a foundation, in declaration order.
std::span<const MoralRole> roles_of(MoralFoundation f);

// "Target of ..." roles plus the two "authority over" roles.
bool is_target_role(MoralRole role);

std::string_view name_of(MoralFoundation f);
std::string_view name_of(MoralRole r);
std::string_view name_of(Polarity p);

// Accepts canonical names and common spellings ("care/harm", "care", "harm",
// "Entity causing harm", "entity_causing_harm"). Case-insensitive.
std::optional<MoralFoundation> parse_foundation(std::string_view text);
std::optional<MoralRole> parse_role(std::string_view text);

}  // namespace mframe
