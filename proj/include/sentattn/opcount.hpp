#pragma once

#include <cstdint>

namespace sentattn {

// Exact tally of multiply-accumulate and softmax work performed by the
// attention paths. One counter per forward pass; concurrent passes keep
// their own counter and merge afterwards. Categories separate the actual
// word-level attention from selection overhead so the cost decomposition
// (sentence-level vs word-level vs encoder-side) can be audited exactly.
struct OpCounter {
  // word-level attention over (selected) tokens
  std::uint64_t word_score_macs = 0;  // q . k dot products
  std::uint64_t word_mix_macs = 0;    // attention weights x V
  std::uint64_t word_softmax_elems = 0;

  // sentence-level attention (approximators)
  std::uint64_t sent_score_macs = 0;  // f1(q) . f2(sentence) dot products
  std::uint64_t sent_softmax_elems = 0;

  // ideal selection's word-level saliency scan (upper-bound path overhead)
  std::uint64_t selection_macs = 0;
  std::uint64_t selection_softmax_elems = 0;

  // per-step query mappings of the approximator (W^Q)
  std::uint64_t approx_proj_macs = 0;

  // one-off per-document work: sentence encoder, W^K mapping, feature maps
  std::uint64_t encoder_side_macs = 0;

  std::uint64_t mac_count() const {
    return word_score_macs + word_mix_macs + sent_score_macs + selection_macs +
           approx_proj_macs + encoder_side_macs;
  }
  std::uint64_t softmax_elem_count() const {
    return word_softmax_elems + sent_softmax_elems + selection_softmax_elems;
  }

  void reset() { *this = OpCounter{}; }

  OpCounter& operator+=(const OpCounter& o) {
    word_score_macs += o.word_score_macs;
    word_mix_macs += o.word_mix_macs;
    word_softmax_elems += o.word_softmax_elems;
    sent_score_macs += o.sent_score_macs;
    sent_softmax_elems += o.sent_softmax_elems;
    selection_macs += o.selection_macs;
    selection_softmax_elems += o.selection_softmax_elems;
    approx_proj_macs += o.approx_proj_macs;
    encoder_side_macs += o.encoder_side_macs;
    return *this;
  }
};

}  // namespace sentattn
