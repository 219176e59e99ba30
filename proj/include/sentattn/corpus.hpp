#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentattn/partition.hpp"
#include "sentattn/rng.hpp"

namespace sentattn::corpus {

// Whitespace/lowercase vocabulary. Ids are dense starting at 0 with the four
// reserved ids first. The sentence-terminal marker "." is tracked when
// present (synthetic vocabularies always carry it at id 4).
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumReserved = 4;
  static constexpr const char* kMarkerToken = ".";

  Vocab();

  int add(const std::string& token);  // returns existing id if already present
  int id_of(const std::string& token) const;  // kUnk when absent
  const std::string& token_of(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  int marker_id() const { return marker_id_; }  // -1 when "." not in vocab

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  int marker_id_ = -1;
};

struct SummaryExample {
  std::vector<std::string> sentences;  // pre-split document text
  std::string summary;
  std::vector<int> salient;  // 0-based sentence indices; empty when unknown

  // derived, filled by prepare()
  std::vector<int> doc_tokens;
  SentencePartition partition;
  std::vector<int> summary_tokens;  // length M

  bool operator==(const SummaryExample& o) const {
    return sentences == o.sentences && summary == o.summary && salient == o.salient;
  }
};

struct DatasetSpec {
  int num_examples = 0;
  int n1_min = 1, n1_max = 1;  // sentences per document
  int j_min = 1, j_max = 1;    // tokens per sentence, terminal marker included
  int salient_count = 1;       // k
  int vocab_size = 64;         // reserved + marker + word tokens
  double noise_rate = 0.0;
  std::uint64_t seed = 0;
};

// Splits after '.', '!' or '?' followed by whitespace; trailing text without
// terminal punctuation forms a final sentence. Deliberately naive about
// abbreviations ("Dr. Smith" splits).
std::vector<std::string> split_sentences(const std::string& text);

// Lowercased whitespace tokens mapped to ids; unknown tokens map to UNK.
std::vector<int> tokenize(const std::string& sentence, const Vocab& vocab);

std::vector<std::string> whitespace_tokens(const std::string& text);

// Most frequent tokens kept up to max_size (ties broken lexicographically).
Vocab build_vocab(const std::vector<std::string>& documents, int max_size);

// Vocabulary used by synthetic data: reserved + "." + w0..w{n-1}.
Vocab synthetic_vocab(int vocab_size);

std::vector<SummaryExample> generate_synthetic_dataset(const DatasetSpec& spec);

// Fills doc_tokens/partition/summary_tokens and validates the record.
// `line` is used in error messages (1-based; 0 = unknown).
void prepare(SummaryExample& ex, const Vocab& vocab, int line = 0);
void prepare_all(std::vector<SummaryExample>& data, const Vocab& vocab);

// JSON Lines: one object per example, UTF-8, LF line endings.
//   {"sentences": [...], "summary": "...", "salient": [1-based ints]}
void save_dataset(const std::vector<SummaryExample>& data, const std::string& path);
std::vector<SummaryExample> load_dataset(const std::string& path);

struct DatasetStats {
  double mean_tokens = 0;     // N
  double mean_sentences = 0;  // N1
  double mean_summary = 0;    // M
  double compression = 0;     // N/M
};
DatasetStats dataset_stats(const std::vector<SummaryExample>& data);

}  // namespace sentattn::corpus
