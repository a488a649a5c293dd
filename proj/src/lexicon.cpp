#include "mframe/lexicon.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "mframe/error.hpp"
#include "mframe/text.hpp"

namespace mframe {

std::string_view name_of(Provenance p) {
  switch (p) {
    case Provenance::PMI: return "pmi";
    case Provenance::MFD: return "mfd";
    case Provenance::Merged: return "merged";
  }
  return "?";
}

namespace {

Provenance parse_provenance(std::string_view s) {
  if (s == "pmi") return Provenance::PMI;
  if (s == "mfd") return Provenance::MFD;
  if (s == "merged") return Provenance::Merged;
  throw DataError("unknown lexicon provenance '" + std::string(s) + "'");
}

int ngram_length(const std::string& ngram) {
  return static_cast<int>(std::count(ngram.begin(), ngram.end(), ' ')) + 1;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void Lexicon::add(const std::string& label, LexiconEntry entry) {
  if (!(entry.weight > 0.0) || !std::isfinite(entry.weight))
    throw DataError("lexicon weight for '" + entry.ngram + "' must be positive");
  if (entry.provenance != Provenance::PMI && entry.weight != 1.0)
    throw DataError("dictionary entry '" + entry.ngram + "' must carry weight 1");
  auto& idx = index_[label];
  auto& list = entries_[label];
  if (idx.contains(entry.ngram)) throw DataError("duplicate lexicon entry '" + entry.ngram + "' for " + label);
  n_max_ = std::max(n_max_, ngram_length(entry.ngram));
  idx.emplace(entry.ngram, list.size());
  list.push_back(std::move(entry));
}

void Lexicon::sort() {
  for (auto& [label, list] : entries_) {
    std::sort(list.begin(), list.end(), [](const LexiconEntry& a, const LexiconEntry& b) {
      return a.weight != b.weight ? a.weight > b.weight : a.ngram < b.ngram;
    });
    auto& idx = index_[label];
    idx.clear();
    for (std::size_t i = 0; i < list.size(); ++i) idx.emplace(list[i].ngram, i);
  }
}

const std::vector<LexiconEntry>* Lexicon::entries(const std::string& label) const {
  auto it = entries_.find(label);
  return it == entries_.end() ? nullptr : &it->second;
}

const LexiconEntry* Lexicon::find(const std::string& label, const std::string& ngram) const {
  auto it = index_.find(label);
  if (it == index_.end()) return nullptr;
  auto jt = it->second.find(ngram);
  return jt == it->second.end() ? nullptr : &entries_.at(label)[jt->second];
}

std::size_t Lexicon::size() const {
  std::size_t n = 0;
  for (const auto& [_, list] : entries_) n += list.size();
  return n;
}

bool Lexicon::has_prefix_entries(const std::string& label) const {
  const auto& list = entries_.at(label);
  return std::any_of(list.begin(), list.end(), [](const LexiconEntry& e) { return e.ngram.ends_with('*'); });
}

std::map<std::string, double> Lexicon::score_tokens(const std::vector<std::string>& tokens) const {
  std::map<std::string, double> out;
  for (const auto& [label, list] : entries_) {
    const bool prefixes = has_prefix_entries(label);
    double total = 0.0;
    std::size_t i = 0;
    while (i < tokens.size()) {
      const LexiconEntry* hit = nullptr;
      std::size_t len = 0;
      const std::size_t longest = std::min<std::size_t>(static_cast<std::size_t>(n_max_), tokens.size() - i);
      std::string gram;
      std::vector<std::string> grams;
      for (std::size_t n = 1; n <= longest; ++n) {
        gram += (n > 1 ? " " : "") + tokens[i + n - 1];
        grams.push_back(gram);
      }
      for (std::size_t n = longest; n >= 1 && !hit; --n) {
        if ((hit = find(label, grams[n - 1]))) len = n;
      }
      if (!hit && prefixes) {
        // Longest stem that prefixes the token.
        for (const auto& e : list) {
          if (!e.ngram.ends_with('*')) continue;
          const std::string_view stem(e.ngram.data(), e.ngram.size() - 1);
          if (tokens[i].starts_with(stem) && (!hit || stem.size() + 1 > hit->ngram.size())) hit = &e;
        }
        if (hit) len = 1;
      }
      if (hit) {
        total += hit->weight;
        i += len;
      } else {
        ++i;
      }
    }
    out[label] = total;
  }
  return out;
}

std::map<std::string, double> Lexicon::score_text(std::string_view text) const { return score_tokens(tokenize(text)); }

void Lexicon::write_tsv(std::ostream& out) const {
  char buf[64];
  for (const auto& [label, list] : entries_) {
    for (const auto& e : list) {
      auto r = std::to_chars(buf, buf + sizeof buf, e.weight);
      out << label << '\t' << e.ngram << '\t' << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf)) << '\t'
          << name_of(e.provenance) << '\n';
    }
  }
}

Lexicon Lexicon::read_tsv(std::istream& in) {
  Lexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, '\t');) cols.push_back(c);
    if (cols.size() != 4) throw DataError("lexicon line " + std::to_string(lineno) + ": expected 4 tab-separated columns");
    LexiconEntry e;
    e.ngram = cols[1];
    const auto r = std::from_chars(cols[2].data(), cols[2].data() + cols[2].size(), e.weight);
    if (r.ec != std::errc{} || r.ptr != cols[2].data() + cols[2].size())
      throw DataError("lexicon line " + std::to_string(lineno) + ": bad weight '" + cols[2] + "'");
    e.provenance = parse_provenance(cols[3]);
    lex.add(cols[0], std::move(e));
  }
  lex.sort();
  return lex;
}

Lexicon Lexicon::load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon " + path.string());
  return read_tsv(in);
}

std::vector<LabeledDocument> labeled_documents(const Corpus& corpus, LabelField field) {
  std::vector<LabeledDocument> docs;
  for (const auto& t : corpus.tweets) {
    LabeledDocument d;
    switch (field) {
      case LabelField::MoralFoundation:
        if (!t.gold_mf) continue;
        d.label = std::string(name_of(*t.gold_mf));
        break;
      case LabelField::Ideology: d.label = std::string(name_of(t.ideology)); break;
      case LabelField::Topic: d.label = t.topic; break;
    }
    d.tokens = t.tokens.empty() ? tokenize(t.text) : t.tokens;
    docs.push_back(std::move(d));
  }
  return docs;
}

PmiTable pmi_table(const std::vector<LabeledDocument>& docs, const PmiConfig& cfg,
                   const std::vector<std::string>& labels) {
  if (cfg.n_max < 1) throw ConfigError("pmi: n_max must be at least 1");
  if (cfg.min_count < 1) throw ConfigError("pmi: min_count must be at least 1");
  if (docs.empty()) throw DataError("pmi: empty corpus");

  PmiTable table;
  for (const auto& l : labels) table.label_tokens[l] = 0;
  std::map<std::string, std::size_t> total;
  std::map<std::string, std::size_t> docs_per_label;
  for (const auto& d : docs) {
    ++docs_per_label[d.label];
    table.total_tokens += d.tokens.size();
    table.label_tokens[d.label] += d.tokens.size();
    auto& label_stats = table.stats[d.label];
    for (std::size_t i = 0; i < d.tokens.size(); ++i) {
      std::string gram;
      for (std::size_t n = 1; n <= static_cast<std::size_t>(cfg.n_max) && i + n <= d.tokens.size(); ++n) {
        gram += (n > 1 ? " " : "") + d.tokens[i + n - 1];
        ++label_stats[gram].count_in_label;
        ++total[gram];
      }
    }
  }
  for (const auto& l : labels)
    if (!docs_per_label.contains(l)) throw DataError("pmi: label '" + l + "' has no documents");
  if (table.total_tokens == 0) throw DataError("pmi: corpus has no tokens");

  for (auto& [label, grams] : table.stats) {
    const auto n_l = table.label_tokens[label];
    for (auto& [gram, s] : grams) {
      s.count = total[gram];
      // Exact integer products keep equal proportions at exactly log(1) = 0.
      const double num = static_cast<double>(s.count_in_label) * static_cast<double>(table.total_tokens);
      const double den = static_cast<double>(n_l) * static_cast<double>(s.count);
      s.pmi = num == den ? 0.0 : std::log(num / std::max(den, cfg.epsilon));
    }
  }
  return table;
}

Lexicon build_pmi_lexicon(const std::vector<LabeledDocument>& docs, const PmiConfig& cfg,
                          const std::vector<std::string>& labels) {
  const auto table = pmi_table(docs, cfg, labels);
  Lexicon lex(cfg.n_max);
  for (const auto& [label, grams] : table.stats) {
    std::vector<std::pair<std::string, double>> kept;
    for (const auto& [gram, s] : grams)
      if (s.pmi > 0.0 && s.count_in_label >= cfg.min_count) kept.emplace_back(gram, s.pmi);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (cfg.top_k > 0 && kept.size() > cfg.top_k) kept.resize(cfg.top_k);
    if (kept.empty()) continue;
    const double top = kept.front().second;
    for (const auto& [gram, pmi] : kept) lex.add(label, {gram, pmi / top, Provenance::PMI});
  }
  lex.sort();
  return lex;
}

Lexicon build_pmi_lexicon(const Corpus& corpus, LabelField field, const PmiConfig& cfg) {
  std::vector<std::string> labels;
  if (field == LabelField::MoralFoundation)
    for (auto f : kAllFoundations) labels.emplace_back(name_of(f));
  return build_pmi_lexicon(labeled_documents(corpus, field), cfg, labels);
}

Lexicon parse_mfd(std::istream& in) {
  Lexicon lex;
  std::string line;
  std::string label;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw DataError("mfd line " + std::to_string(lineno) + ": unterminated section header");
      const auto f = parse_foundation(trim(std::string_view(t).substr(1, t.size() - 2)));
      if (!f) throw DataError("mfd line " + std::to_string(lineno) + ": unknown foundation '" + t + "'");
      label = std::string(name_of(*f));
      continue;
    }
    if (label.empty()) throw DataError("mfd line " + std::to_string(lineno) + ": entry before any [foundation] header");
    std::string stem = case_fold(t);
    if (lex.find(label, stem)) continue;
    lex.add(label, {stem, 1.0, Provenance::MFD});
  }
  lex.sort();
  return lex;
}

Lexicon load_mfd(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open MFD " + path.string());
  return parse_mfd(in);
}

Lexicon merge_lexicons(const Lexicon& pmi, const Lexicon& mfd) {
  Lexicon out(std::max(pmi.n_max(), mfd.n_max()));
  for (const auto& [label, list] : pmi.labels()) {
    for (const auto& e : list) {
      if (mfd.find(label, e.ngram))
        out.add(label, {e.ngram, 1.0, Provenance::Merged});
      else
        out.add(label, e);
    }
  }
  for (const auto& [label, list] : mfd.labels())
    for (const auto& e : list)
      if (!pmi.find(label, e.ngram)) out.add(label, {e.ngram, 1.0, Provenance::MFD});
  out.sort();
  return out;
}

BaselineResult lexicon_baseline_predict(const Lexicon& lexicon, const std::vector<TweetInstance>& tweets,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BaselineResult res;
  for (const auto& t : tweets) {
    const auto scores = lexicon.score_tokens(t.tokens.empty() ? tokenize(t.text) : t.tokens);
    std::array<double, kNumFoundations> s{};
    for (auto f : kAllFoundations) {
      auto it = scores.find(std::string(name_of(f)));
      s[index_of(f)] = it == scores.end() ? 0.0 : it->second;
    }
    const double best = *std::max_element(s.begin(), s.end());
    std::vector<MoralFoundation> top;
    for (auto f : kAllFoundations)
      if (s[index_of(f)] == best) top.push_back(f);
    if (best <= 0.0) {
      ++res.random_fallbacks;
      top.assign(kAllFoundations.begin(), kAllFoundations.end());
    } else if (top.size() > 1) {
      ++res.ties;
    }
    if (top.size() == 1) {
      res.labels.push_back(top.front());
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, top.size() - 1);
      res.labels.push_back(top[pick(rng)]);
    }
  }
  return res;
}

}  // namespace mframe
