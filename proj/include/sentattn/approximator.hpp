#pragma once

#include <string>
#include <vector>

#include "sentattn/attention.hpp"
#include "sentattn/autodiff.hpp"
#include "sentattn/binding.hpp"
#include "sentattn/checkpoint.hpp"
#include "sentattn/opcount.hpp"
#include "sentattn/partition.hpp"
#include "sentattn/rng.hpp"
#include "sentattn/tensor.hpp"

namespace sentattn::approx {

// Saliency approximator (theta tilde): a shared bidirectional GRU sentence
// encoder plus per-decoder-layer query/key mappings. The GRU cell follows
//   z = sigmoid(x Wxz + h Whz + bz)
//   r = sigmoid(x Wxr + h Whr + br)
//   n = tanh  (x Wxn + r * (h Whn) + bn)
//   h' = (1 - z) * n + z * h
// A sentence representation y_i is the projection of the concatenated final
// forward/backward states of the last layer (the `pooling` config field
// records this choice).
struct ApproxConfig {
  int model_dim = 64;  // D
  int hidden = 64;     // D_s
  int layers = 2;      // L_enc
  int dec_layers = 2;  // one W^Q/W^K pair per decoder layer
  int heads = 4;
  // Diagnostic: use the token states directly as sentence representations.
  // Only valid when every sentence has exactly one token.
  bool bypass_sentence_encoder = false;
  std::string pooling = "final_concat";

  double scale() const;
  int head_dim() const { return model_dim / heads; }
};

// Adds all approx.* tensors (zero-valued) and returns the scalar parameter
// count, which is a pure function of (D, D_s, L_enc, dec_layers).
std::size_t add_params(ParamStore& params, const ApproxConfig& cfg);
void init_params(ParamStore& params, const ApproxConfig& cfg, Rng& rng);
// Copies each decoder layer's word-level cross-attention query/key mapping
// (weights and biases) into the corresponding sentence-level mapping.
void init_from_word_level(ParamStore& params, const ApproxConfig& cfg);

// ---- inference path (plain tensors) ----

// Sentence representations Y [N1, D] from encoder token states [N, D].
// Work is tallied as encoder-side one-off cost.
Tensor encode_sentences(const Tensor& token_states, const SentencePartition& part,
                        const ParamStore& params, const ApproxConfig& cfg,
                        OpCounter* counter = nullptr);

// Per-document key mapping for one decoder layer: Y W^K + b [N1, D].
Tensor map_keys(const Tensor& Y, const ParamStore& params, int layer,
                const ApproxConfig& cfg, OpCounter* counter = nullptr);

// Per-step sentence attention for one decoder layer. `h_state` is the
// decoder hidden row the word-level query projection consumes ([D]);
// `mapped_keys` comes from map_keys. Returns per-head rows [H, N1].
Tensor approx_saliency(const double* h_state, const Tensor& mapped_keys,
                       const ParamStore& params, int layer, const ApproxConfig& cfg,
                       OpCounter* counter = nullptr);

// ---- graph path (training) ----

ad::Var encode_sentences_graph(ad::Tape& tape, ad::Var token_states,
                               const SentencePartition& part, const Bound& b,
                               const ApproxConfig& cfg);
ad::Var map_keys_graph(ad::Tape& tape, ad::Var Y, const Bound& b, int layer,
                       const ApproxConfig& cfg);
// x_norm [M, D] -> per-head sentence attention [H, M, N1]
ad::Var approx_saliency_graph(ad::Tape& tape, ad::Var x_norm, ad::Var mapped_keys,
                              const Bound& b, int layer, const ApproxConfig& cfg);

// ---- model-free approximator ----

enum class FeatureMap { EluPlusOne, Relu, Exp };
FeatureMap feature_map_from_string(const std::string& s);
const char* to_string(FeatureMap phi);
double apply_phi(FeatureMap phi, double x);

// F [N1, D] with F_i = sum_j phi(k_{i,j}); per-head blocks are the column
// slices. One-off per document.
Tensor model_free_features(const Tensor& K, const SentencePartition& part, FeatureMap phi,
                           OpCounter* counter = nullptr);

// Unnormalized ranking scores s_i = phi(scale * q) . F_i (summed over all
// head blocks). Only the ranking is meaningful; the normalizer is dropped.
std::vector<double> model_free_scores(const double* q, const Tensor& F, FeatureMap phi,
                                      double scale, OpCounter* counter = nullptr);

// Analysis helpers for the derivation chain (exact product form and the
// sum-of-exponentials intermediate); not part of the production path.
std::vector<double> unnormalized_saliency_exact(const double* q, const Tensor& K,
                                                const SentencePartition& part, double scale);
std::vector<double> unnormalized_saliency_sum_exp(const double* q, const Tensor& K,
                                                  const SentencePartition& part, double scale);

}  // namespace sentattn::approx
