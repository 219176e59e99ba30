#include "sentattn/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sentattn/kernels.hpp"

namespace sentattn::attn {

double AttentionConfig::scale() const { return 1.0 / std::sqrt(static_cast<double>(head_dim())); }

void AttentionConfig::validate() const {
  if (heads < 1 || model_dim < heads || model_dim % heads != 0)
    throw std::invalid_argument("attention config: need H >= 1 and H dividing D");
}

const char* to_string(SelectionSource s) {
  switch (s) {
    case SelectionSource::Ideal: return "ideal";
    case SelectionSource::Approx: return "approx";
    case SelectionSource::ModelFree: return "modelfree";
    case SelectionSource::Random: return "random";
    case SelectionSource::All: return "all";
  }
  return "?";
}

SelectionPlan SelectionPlan::all(int n1, int m_steps) {
  SelectionPlan p;
  p.budget = n1;
  p.source = SelectionSource::All;
  std::vector<int> everything(static_cast<std::size_t>(n1));
  std::iota(everything.begin(), everything.end(), 0);
  p.steps.assign(static_cast<std::size_t>(m_steps), everything);
  return p;
}

void SelectionPlan::validate(int n1) const {
  if (budget < 1) throw std::invalid_argument("selection plan: r < 1");
  int want = std::min(budget, n1);
  for (const auto& step : steps) {
    if (static_cast<int>(step.size()) != want)
      throw std::invalid_argument("selection plan: wrong subset size");
    for (std::size_t i = 0; i < step.size(); ++i) {
      if (step[i] < 0 || step[i] >= n1)
        throw std::invalid_argument("selection plan: index out of range");
      if (i > 0 && step[i] <= step[i - 1])
        throw std::invalid_argument("selection plan: indices not strictly ascending");
    }
  }
}

static void check_qkv(const Tensor& Q, const Tensor& K, const Tensor& V,
                      const AttentionConfig& cfg) {
  cfg.validate();
  if (Q.dim() != 2 || K.dim() != 2 || V.dim() != 2)
    throw std::invalid_argument("attention: Q/K/V must be matrices");
  if (Q.shape(1) != cfg.model_dim || K.shape(1) != cfg.model_dim ||
      V.shape(1) != cfg.model_dim)
    throw std::invalid_argument("attention: width mismatch with config");
  if (K.shape(0) != V.shape(0))
    throw std::invalid_argument("attention: K/V row mismatch");
}

Tensor full_cross_attention_weights(const Tensor& Q, const Tensor& K,
                                    const AttentionConfig& cfg, OpCounter* counter) {
  cfg.validate();
  int m = Q.shape(0), n = K.shape(0);
  int h = cfg.heads, hd = cfg.head_dim();
  double sc = cfg.scale();

  Tensor W(std::vector<int>{h, m, n});
  for (int hh = 0; hh < h; ++hh) {
    for (int i = 0; i < m; ++i) {
      const double* q = Q.row_ptr(i) + hh * hd;
      double* out = &W.at(hh, i, 0);
      for (int j = 0; j < n; ++j) {
        const double* k = K.row_ptr(j) + hh * hd;
        double s = 0.0;
        for (int d = 0; d < hd; ++d) s += q[d] * k[d];
        out[j] = sc * s;
      }
    }
  }
  kernels::softmax_rows(W.data(), h * m, n);
  if (counter) {
    counter->word_score_macs += static_cast<std::uint64_t>(h) * m * n * hd;
    counter->word_softmax_elems += static_cast<std::uint64_t>(h) * m * n;
  }
  return W;
}

Tensor full_cross_attention(const Tensor& Q, const Tensor& K, const Tensor& V,
                            const AttentionConfig& cfg, OpCounter* counter) {
  check_qkv(Q, K, V, cfg);
  int m = Q.shape(0), n = K.shape(0);
  int h = cfg.heads, hd = cfg.head_dim();

  Tensor W = full_cross_attention_weights(Q, K, cfg, counter);
  Tensor A(m, cfg.model_dim);
  for (int hh = 0; hh < h; ++hh) {
    for (int i = 0; i < m; ++i) {
      const double* w = &W.at(hh, i, 0);
      double* out = A.row_ptr(i) + hh * hd;
      for (int j = 0; j < n; ++j) {
        const double* v = V.row_ptr(j) + hh * hd;
        double wv = w[j];
        for (int d = 0; d < hd; ++d) out[d] += wv * v[d];
      }
    }
  }
  if (counter) counter->word_mix_macs += static_cast<std::uint64_t>(h) * m * n * hd;
  return A;
}

Tensor sentence_saliency(const double* q, const Tensor& K, const SentencePartition& part,
                         const AttentionConfig& cfg, OpCounter* counter) {
  cfg.validate();
  if (K.shape(0) != part.tokens())
    throw std::invalid_argument("saliency: partition inconsistent with K");
  int n = K.shape(0), n1 = part.sentences();
  int h = cfg.heads, hd = cfg.head_dim();
  double sc = cfg.scale();

  Tensor out(h, n1);
  std::vector<double> logits(static_cast<std::size_t>(n));
  for (int hh = 0; hh < h; ++hh) {
    const double* qh = q + hh * hd;
    double mx = -1e300;
    for (int j = 0; j < n; ++j) {
      const double* k = K.row_ptr(j) + hh * hd;
      double s = 0.0;
      for (int d = 0; d < hd; ++d) s += qh[d] * k[d];
      s *= sc;
      logits[static_cast<std::size_t>(j)] = s;
      if (s > mx) mx = s;
    }
    // stabilized: Z never materialized as a raw exponent sum
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      logits[static_cast<std::size_t>(j)] = std::exp(logits[static_cast<std::size_t>(j)] - mx);
      z += logits[static_cast<std::size_t>(j)];
    }
    double inv = 1.0 / z;
    for (int i = 0; i < n1; ++i) {
      double s = 0.0;
      int off = part.offset(i);
      for (int j = 0; j < part.length(i); ++j) s += logits[static_cast<std::size_t>(off + j)];
      out.at(hh, i) = s * inv;
    }
  }
  if (counter) {
    counter->selection_macs += static_cast<std::uint64_t>(h) * n * hd;
    counter->selection_softmax_elems += static_cast<std::uint64_t>(h) * n;
  }
  return out;
}

SaliencyDistribution saliency_all(const Tensor& Q, const Tensor& K,
                                  const SentencePartition& part, const AttentionConfig& cfg,
                                  OpCounter* counter) {
  int m = Q.shape(0), n1 = part.sentences(), h = cfg.heads;
  SaliencyDistribution sal;
  sal.per_head = Tensor(std::vector<int>{m, h, n1});
  sal.head_avg = Tensor(m, n1);
  for (int i = 0; i < m; ++i) {
    Tensor row = sentence_saliency(Q.row_ptr(i), K, part, cfg, counter);
    for (int hh = 0; hh < h; ++hh) {
      for (int s = 0; s < n1; ++s) {
        double v = row.at(hh, s);
        sal.per_head.at(i, hh, s) = v;
        sal.head_avg.at(i, s) += v / h;
      }
    }
  }
  return sal;
}

std::vector<int> top_r_select(const double* avg_row, int n1, int r) {
  if (r < 1) throw std::invalid_argument("top_r_select: r < 1");
  int want = std::min(r, n1);
  std::vector<int> idx(static_cast<std::size_t>(n1));
  std::iota(idx.begin(), idx.end(), 0);
  // stable partial sort on value descending; equal values keep lowest index
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return avg_row[a] > avg_row[b]; });
  idx.resize(static_cast<std::size_t>(want));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<int> top_r_select(const std::vector<double>& avg_row, int r) {
  return top_r_select(avg_row.data(), static_cast<int>(avg_row.size()), r);
}

std::vector<int> random_select(int n1, int r, Rng& rng) {
  int want = std::min(r, n1);
  std::vector<int> idx(static_cast<std::size_t>(n1));
  std::iota(idx.begin(), idx.end(), 0);
  // partial Fisher-Yates: first `want` slots are a uniform sample
  for (int i = 0; i < want; ++i) {
    int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n1 - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(want));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Tensor subset_cross_attention(const Tensor& Q, const Tensor& K, const Tensor& V,
                              const SelectionPlan& plan, const SentencePartition& part,
                              const AttentionConfig& cfg, OpCounter* counter) {
  check_qkv(Q, K, V, cfg);
  if (K.shape(0) != part.tokens())
    throw std::invalid_argument("subset attention: partition inconsistent with K");
  int m = Q.shape(0);
  if (static_cast<int>(plan.steps.size()) != m)
    throw std::invalid_argument("subset attention: plan step count != M");
  plan.validate(part.sentences());

  int h = cfg.heads, hd = cfg.head_dim();
  double sc = cfg.scale();
  Tensor A(m, cfg.model_dim);
  std::vector<int> toks;
  std::vector<double> logits;

  for (int i = 0; i < m; ++i) {
    const auto& sel = plan.steps[static_cast<std::size_t>(i)];
    if (sel.empty()) throw std::invalid_argument("subset attention: empty selection");
    toks.clear();
    for (int s : sel) {
      int off = part.offset(s);
      for (int j = 0; j < part.length(s); ++j) toks.push_back(off + j);
    }
    int nt = static_cast<int>(toks.size());
    logits.resize(static_cast<std::size_t>(nt));

    for (int hh = 0; hh < h; ++hh) {
      const double* q = Q.row_ptr(i) + hh * hd;
      double mx = -1e300;
      for (int t = 0; t < nt; ++t) {
        const double* k = K.row_ptr(toks[static_cast<std::size_t>(t)]) + hh * hd;
        double s = 0.0;
        for (int d = 0; d < hd; ++d) s += q[d] * k[d];
        s *= sc;
        logits[static_cast<std::size_t>(t)] = s;
        if (s > mx) mx = s;
      }
      double z = 0.0;
      for (int t = 0; t < nt; ++t) {
        double e = std::exp(logits[static_cast<std::size_t>(t)] - mx);
        logits[static_cast<std::size_t>(t)] = e;
        z += e;
      }
      double inv = 1.0 / z;
      double* out = A.row_ptr(i) + hh * hd;
      for (int t = 0; t < nt; ++t) {
        const double* v = V.row_ptr(toks[static_cast<std::size_t>(t)]) + hh * hd;
        double w = logits[static_cast<std::size_t>(t)] * inv;
        for (int d = 0; d < hd; ++d) out[d] += w * v[d];
      }
    }
    if (counter) {
      counter->word_score_macs += static_cast<std::uint64_t>(h) * nt * hd;
      counter->word_mix_macs += static_cast<std::uint64_t>(h) * nt * hd;
      counter->word_softmax_elems += static_cast<std::uint64_t>(h) * nt;
    }
  }
  return A;
}

double retained_weight(const double* avg_row, int n1, const std::vector<int>& selected) {
  double s = 0.0;
  for (int i : selected) {
    if (i < 0 || i >= n1) throw std::invalid_argument("retained_weight: index out of range");
    s += avg_row[i];
  }
  return s;
}

double retained_weight(const std::vector<double>& avg_row, const std::vector<int>& selected) {
  return retained_weight(avg_row.data(), static_cast<int>(avg_row.size()), selected);
}

CostReport count_macs_report(const OpCounter& counter, const CostDims& dims) {
  CostReport rep;
  double m = dims.steps, n1 = dims.sentences, n2 = dims.mean_len;
  double r = std::min<double>(dims.budget, dims.sentences);
  double d = dims.model_dim, h = dims.heads;

  rep.predicted_macs = static_cast<std::uint64_t>(std::llround(m * n1 * d + 2.0 * m * r * n2 * d));
  rep.predicted_softmax = static_cast<std::uint64_t>(std::llround(h * m * n1 + h * m * r * n2));
  rep.measured_macs =
      counter.sent_score_macs + counter.word_score_macs + counter.word_mix_macs;
  rep.measured_softmax = counter.sent_softmax_elems + counter.word_softmax_elems;
  rep.k_w = (2.0 * d + 1.0) / (d + 1.0);
  rep.k_e_measured = n1 * n2 > 0 ? static_cast<double>(counter.encoder_side_macs) / (n1 * n2) : 0.0;
  return rep;
}

std::string CostReport::to_json() const {
  std::ostringstream os;
  os.precision(10);
  os << "{\"predicted_macs\": " << predicted_macs << ", \"measured_macs\": " << measured_macs
     << ", \"predicted_softmax\": " << predicted_softmax
     << ", \"measured_softmax\": " << measured_softmax << ", \"k_w\": " << k_w
     << ", \"k_e_measured\": " << k_e_measured << "}";
  return os.str();
}

}  // namespace sentattn::attn
