#include "sentattn/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sentattn::corpus {

using nlohmann::json;

Vocab::Vocab() {
  add("<pad>");
  add("<bos>");
  add("<eos>");
  add("<unk>");
}

int Vocab::add(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  ids_.emplace(token, id);
  if (token == kMarkerToken) marker_id_ = id;
  return id;
}

int Vocab::id_of(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocab::token_of(int id) const {
  return tokens_.at(static_cast<std::size_t>(id));
}

std::vector<std::string> split_sentences(const std::string& text) {
  auto is_ws = [](char c) { return std::isspace(static_cast<unsigned char>(c)); };
  std::size_t b = 0, e = text.size();
  while (b < e && is_ws(text[b])) ++b;
  while (e > b && is_ws(text[e - 1])) --e;
  if (b == e) throw std::invalid_argument("empty document");

  std::vector<std::string> out;
  std::size_t start = b;
  for (std::size_t i = b; i < e; ++i) {
    char c = text[i];
    if ((c == '.' || c == '!' || c == '?') && i + 1 < e && is_ws(text[i + 1])) {
      out.push_back(text.substr(start, i + 1 - start));
      start = i + 1;
      while (start < e && is_ws(text[start])) ++start;
      i = start - 1;
    }
  }
  if (start < e) out.push_back(text.substr(start, e - start));
  return out;
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<int> tokenize(const std::string& sentence, const Vocab& vocab) {
  std::vector<int> ids;
  for (const auto& tok : whitespace_tokens(sentence)) ids.push_back(vocab.id_of(tok));
  return ids;
}

Vocab build_vocab(const std::vector<std::string>& documents, int max_size) {
  if (documents.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  if (max_size < Vocab::kNumReserved + 1)
    throw std::invalid_argument("build_vocab: max_size too small, reserved ids do not fit");

  // std::map gives the lexicographic order needed for tie-breaking
  std::map<std::string, long> freq;
  for (const auto& doc : documents)
    for (const auto& tok : whitespace_tokens(doc)) ++freq[tok];

  std::vector<std::pair<std::string, long>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocab v;
  int room = max_size - Vocab::kNumReserved;
  for (const auto& [tok, n] : items) {
    if (room == 0) break;
    v.add(tok);
    --room;
  }
  return v;
}

Vocab synthetic_vocab(int vocab_size) {
  Vocab v;
  v.add(Vocab::kMarkerToken);
  for (int i = Vocab::kNumReserved + 1; i < vocab_size; ++i)
    v.add("w" + std::to_string(i - Vocab::kNumReserved - 1));
  return v;
}

std::vector<SummaryExample> generate_synthetic_dataset(const DatasetSpec& spec) {
  if (spec.num_examples < 1) throw std::invalid_argument("gen: num_examples < 1");
  if (spec.n1_min < 1 || spec.n1_max < spec.n1_min)
    throw std::invalid_argument("gen: bad sentence-count range");
  if (spec.j_min < 2 || spec.j_max < spec.j_min)
    throw std::invalid_argument("gen: sentence length must allow a word plus the terminal marker");
  if (spec.salient_count < 1 || spec.salient_count > spec.n1_min)
    throw std::invalid_argument("gen: salient_count must be within [1, min sentence count]");
  int words = spec.vocab_size - Vocab::kNumReserved - 1;
  if (words < 1) throw std::invalid_argument("gen: vocab_size too small");
  if (spec.noise_rate < 0.0 || spec.noise_rate > 1.0)
    throw std::invalid_argument("gen: noise_rate outside [0,1]");

  Rng root(spec.seed);
  std::vector<SummaryExample> data(static_cast<std::size_t>(spec.num_examples));
  for (int e = 0; e < spec.num_examples; ++e) {
    // per-example sub-generator: result independent of generation order
    Rng rng = root.fork(static_cast<std::uint64_t>(e));
    SummaryExample& ex = data[static_cast<std::size_t>(e)];

    int n1 = rng.next_int(spec.n1_min, spec.n1_max);
    ex.sentences.reserve(static_cast<std::size_t>(n1));
    for (int i = 0; i < n1; ++i) {
      int j = rng.next_int(spec.j_min, spec.j_max);
      std::string s;
      for (int t = 0; t + 1 < j; ++t) {
        if (!s.empty()) s += ' ';
        s += "w" + std::to_string(rng.next_below(static_cast<std::uint64_t>(words)));
      }
      s += " .";
      ex.sentences.push_back(s);
    }

    // choose k distinct salient sentences, kept in document order
    std::vector<int> all(static_cast<std::size_t>(n1));
    for (int i = 0; i < n1; ++i) all[static_cast<std::size_t>(i)] = i;
    rng.shuffle(all);
    ex.salient.assign(all.begin(), all.begin() + spec.salient_count);
    std::sort(ex.salient.begin(), ex.salient.end());

    std::string summary;
    for (int idx : ex.salient) {
      if (!summary.empty()) summary += ' ';
      summary += ex.sentences[static_cast<std::size_t>(idx)];
    }
    if (spec.noise_rate > 0.0) {
      auto toks = whitespace_tokens(summary);
      for (auto& t : toks)
        if (rng.next_double() < spec.noise_rate)
          t = "w" + std::to_string(rng.next_below(static_cast<std::uint64_t>(words)));
      summary.clear();
      for (const auto& t : toks) {
        if (!summary.empty()) summary += ' ';
        summary += t;
      }
    }
    ex.summary = summary;
  }
  return data;
}

void prepare(SummaryExample& ex, const Vocab& vocab, int line) {
  auto where = [line]() -> std::string {
    return line > 0 ? " at line " + std::to_string(line) : "";
  };
  if (ex.sentences.empty())
    throw std::runtime_error("dataset record has no sentences" + where());

  std::vector<int> lengths;
  ex.doc_tokens.clear();
  for (const auto& s : ex.sentences) {
    auto ids = tokenize(s, vocab);
    if (ids.empty())
      throw std::runtime_error("partition lengths inconsistent with token count" + where());
    lengths.push_back(static_cast<int>(ids.size()));
    ex.doc_tokens.insert(ex.doc_tokens.end(), ids.begin(), ids.end());
  }
  ex.partition = SentencePartition(lengths);

  ex.summary_tokens = tokenize(ex.summary, vocab);
  if (ex.summary_tokens.empty())
    throw std::runtime_error("dataset record has empty summary" + where());

  std::vector<int> seen;
  for (int s : ex.salient) {
    if (s < 0 || s >= ex.partition.sentences())
      throw std::runtime_error("salient index out of range" + where());
    if (std::find(seen.begin(), seen.end(), s) != seen.end())
      throw std::runtime_error("duplicate salient index" + where());
    seen.push_back(s);
  }
}

void prepare_all(std::vector<SummaryExample>& data, const Vocab& vocab) {
  int line = 1;
  for (auto& ex : data) prepare(ex, vocab, line++);
}

void save_dataset(const std::vector<SummaryExample>& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& ex : data) {
    json j;
    j["sentences"] = ex.sentences;
    j["summary"] = ex.summary;
    if (!ex.salient.empty()) {
      std::vector<int> one_based;
      for (int s : ex.salient) one_based.push_back(s + 1);
      j["salient"] = one_based;
    }
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<SummaryExample> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<SummaryExample> data;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("malformed JSON at line " + std::to_string(lineno) + ": " +
                               e.what());
    }
    if (!j.contains("sentences") || !j["sentences"].is_array())
      throw std::runtime_error("record missing \"sentences\" at line " + std::to_string(lineno));
    if (!j.contains("summary") || !j["summary"].is_string())
      throw std::runtime_error("record missing \"summary\" at line " + std::to_string(lineno));
    SummaryExample ex;
    for (const auto& s : j["sentences"]) {
      if (!s.is_string())
        throw std::runtime_error("non-string sentence at line " + std::to_string(lineno));
      ex.sentences.push_back(s.get<std::string>());
    }
    ex.summary = j["summary"].get<std::string>();
    if (j.contains("salient")) {
      for (const auto& v : j["salient"]) {
        if (!v.is_number_integer())
          throw std::runtime_error("non-integer salient index at line " + std::to_string(lineno));
        ex.salient.push_back(v.get<int>() - 1);
      }
    }
    data.push_back(std::move(ex));
  }
  return data;
}

DatasetStats dataset_stats(const std::vector<SummaryExample>& data) {
  DatasetStats st;
  if (data.empty()) return st;
  double n = 0, n1 = 0, m = 0;
  for (const auto& ex : data) {
    n += ex.partition.tokens();
    n1 += ex.partition.sentences();
    m += static_cast<double>(ex.summary_tokens.size());
  }
  double cnt = static_cast<double>(data.size());
  st.mean_tokens = n / cnt;
  st.mean_sentences = n1 / cnt;
  st.mean_summary = m / cnt;
  st.compression = m > 0 ? n / m : 0.0;
  return st;
}

}  // namespace sentattn::corpus
