#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mframe/corpus.hpp"

namespace mframe {

enum class Provenance : std::uint8_t { PMI, MFD, Merged };

std::string_view name_of(Provenance p);

struct LexiconEntry {
  std::string ngram;  // space-joined tokens; a trailing '*' marks a prefix stem
  double weight = 0.0;
  Provenance provenance = Provenance::PMI;
};

// Per label, entries sorted by weight (descending) then ngram.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(int n_max) : n_max_(n_max) {}

  void add(const std::string& label, LexiconEntry entry);
  void sort();

  const std::map<std::string, std::vector<LexiconEntry>>& labels() const { return entries_; }
  const std::vector<LexiconEntry>* entries(const std::string& label) const;
  const LexiconEntry* find(const std::string& label, const std::string& ngram) const;
  int n_max() const { return n_max_; }
  std::size_t size() const;

  // Sum of matched weights per label: longest match first, matches within one
  // label never overlap. Labels without a match score 0.
  std::map<std::string, double> score_tokens(const std::vector<std::string>& tokens) const;
  std::map<std::string, double> score_text(std::string_view text) const;

  // `label \t ngram \t weight \t provenance`, one entry per line.
  void write_tsv(std::ostream& out) const;
  static Lexicon read_tsv(std::istream& in);
  static Lexicon load_tsv(const std::filesystem::path& path);

 private:
  int n_max_ = 1;
  std::map<std::string, std::vector<LexiconEntry>> entries_;
  std::map<std::string, std::map<std::string, std::size_t>> index_;

  bool has_prefix_entries(const std::string& label) const;
};

enum class LabelField : std::uint8_t { MoralFoundation, Ideology, Topic };

struct LabeledDocument {
  std::string label;
  std::vector<std::string> tokens;
};

// Documents without a value for the field are skipped.
std::vector<LabeledDocument> labeled_documents(const Corpus& corpus, LabelField field);

struct PmiConfig {
  int n_max = 5;
  std::size_t min_count = 2;  // occurrences of the ngram within the label
  std::size_t top_k = 0;      // per label; 0 keeps every positive entry
  double epsilon = 1e-12;     // guards the logarithm only
};

// Raw statistics of one (label, ngram) pair.
struct PmiStat {
  std::size_t count_in_label = 0;
  std::size_t count = 0;
  double pmi = 0.0;
};

struct PmiTable {
  std::size_t total_tokens = 0;
  std::map<std::string, std::size_t> label_tokens;
  std::map<std::string, std::map<std::string, PmiStat>> stats;  // label -> ngram -> stat
};

// I(w,l) = log(P(w|l) / P(w)), with P(w|l) = count_l(w) / tokens_l and
// P(w) = count(w) / tokens. `labels` lists every label that must be present.
PmiTable pmi_table(const std::vector<LabeledDocument>& docs, const PmiConfig& cfg,
                   const std::vector<std::string>& labels = {});

// Entries with I > 0 and enough support, weighted I / max_l I within the label.
Lexicon build_pmi_lexicon(const std::vector<LabeledDocument>& docs, const PmiConfig& cfg,
                          const std::vector<std::string>& labels = {});
Lexicon build_pmi_lexicon(const Corpus& corpus, LabelField field, const PmiConfig& cfg);

// One stem per line under `[foundation]` headers; '#' starts a comment.
Lexicon parse_mfd(std::istream& in);
Lexicon load_mfd(const std::filesystem::path& path);

// Union of both; MFD entries keep weight 1 and shared ngrams become Merged.
Lexicon merge_lexicons(const Lexicon& pmi, const Lexicon& mfd);

struct BaselineResult {
  std::vector<MoralFoundation> labels;
  std::size_t random_fallbacks = 0;  // tweets without any lexicon match
  std::size_t ties = 0;              // tweets whose top score is shared

  double fallback_fraction() const {
    return labels.empty() ? 0.0 : static_cast<double>(random_fallbacks) / static_cast<double>(labels.size());
  }
};

// Highest-scoring foundation per tweet; ties and zero scores are drawn
// uniformly (from the tied labels, or from all five) with the given seed.
BaselineResult lexicon_baseline_predict(const Lexicon& lexicon, const std::vector<TweetInstance>& tweets,
                                        std::uint64_t seed);

}  // namespace mframe
