#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentattn/opcount.hpp"
#include "sentattn/partition.hpp"
#include "sentattn/rng.hpp"
#include "sentattn/tensor.hpp"

namespace sentattn::attn {

struct AttentionConfig {
  int model_dim = 64;  // D
  int heads = 4;       // H

  int head_dim() const { return model_dim / heads; }
  double scale() const;
  void validate() const;  // H >= 1, D >= H, H divides D
};

// Per-step, per-head distribution over sentences, plus the head-averaged
// view used by selection and by the retained-weight diagnostics.
struct SaliencyDistribution {
  Tensor per_head;  // [M, H, N1]
  Tensor head_avg;  // [M, N1]

  int steps() const { return per_head.empty() ? 0 : per_head.shape(0); }
  int heads() const { return per_head.empty() ? 0 : per_head.shape(1); }
  int sentences() const { return per_head.empty() ? 0 : per_head.shape(2); }
};

enum class SelectionSource { Ideal, Approx, ModelFree, Random, All };
const char* to_string(SelectionSource s);

// For each decoding step, the sentence subset the cross-attention is
// restricted to. Shared across heads; one plan per decoder layer.
struct SelectionPlan {
  int budget = 0;  // r
  SelectionSource source = SelectionSource::All;
  std::vector<std::vector<int>> steps;  // ascending 0-based sentence ids

  static SelectionPlan all(int n1, int m_steps);
  void validate(int n1) const;  // distinct, ascending, size min(r, n1)
};

// Eq-2-style multi-head attention: per head softmax(scale * Q K^T) V, heads
// concatenated. Q is [M, D]; K, V are [N, D].
Tensor full_cross_attention(const Tensor& Q, const Tensor& K, const Tensor& V,
                            const AttentionConfig& cfg, OpCounter* counter = nullptr);

// Full attention that also returns the softmax weights per head ([H, M, N]).
Tensor full_cross_attention_weights(const Tensor& Q, const Tensor& K,
                                    const AttentionConfig& cfg,
                                    OpCounter* counter = nullptr);

// Saliency of each sentence at one decoding step: word-level softmax mass
// group-summed per sentence, one row per head. q is [D]; result [H, N1].
// MACs land in the selection_* categories (this is the ideal path's scan).
Tensor sentence_saliency(const double* q, const Tensor& K, const SentencePartition& part,
                         const AttentionConfig& cfg, OpCounter* counter = nullptr);

// All decoding steps at once; also fills the head-averaged view.
SaliencyDistribution saliency_all(const Tensor& Q, const Tensor& K,
                                  const SentencePartition& part, const AttentionConfig& cfg,
                                  OpCounter* counter = nullptr);

// Indices of the min(r, N1) largest entries; ties broken by lowest index;
// result ascending.
std::vector<int> top_r_select(const double* avg_row, int n1, int r);
std::vector<int> top_r_select(const std::vector<double>& avg_row, int r);

// Uniform sample of min(r, N1) distinct sentences, sorted.
std::vector<int> random_select(int n1, int r, Rng& rng);

// Eq-3 subset attention: per step m, softmax restricted to the tokens of the
// selected sentences, renormalized over the subset.
Tensor subset_cross_attention(const Tensor& Q, const Tensor& K, const Tensor& V,
                              const SelectionPlan& plan, const SentencePartition& part,
                              const AttentionConfig& cfg, OpCounter* counter = nullptr);

// Fraction of head-averaged attention mass covered by the selected sentences.
double retained_weight(const double* avg_row, int n1, const std::vector<int>& selected);
double retained_weight(const std::vector<double>& avg_row, const std::vector<int>& selected);

// Closed-form cost predictions vs counter measurements for the modified
// attention (sentence-level + word-level decomposition).
struct CostDims {
  int steps = 0;      // M
  int sentences = 0;  // N1
  double mean_len = 0;  // N2
  int budget = 0;     // r
  int model_dim = 0;  // D
  int heads = 1;      // H
};

struct CostReport {
  std::uint64_t predicted_macs = 0;
  std::uint64_t measured_macs = 0;
  std::uint64_t predicted_softmax = 0;
  std::uint64_t measured_softmax = 0;
  double k_w = 0;           // (2pD + q) / (pD + q) with p = q = 1
  double k_e_measured = 0;  // encoder-side MACs / (N1 * N2)
  std::string to_json() const;
};

// Predictions: sentence-level M*N1*D MACs + H*M*N1 softmax elements,
// word-level 2*M*r*N2*D MACs + H*M*r*N2 softmax elements. Measured values
// come from the counter (sent_score + word_score + word_mix).
CostReport count_macs_report(const OpCounter& counter, const CostDims& dims);

}  // namespace sentattn::attn
