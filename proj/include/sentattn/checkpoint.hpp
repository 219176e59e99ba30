#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentattn/tensor.hpp"

namespace sentattn {

// Named parameter tensors with deterministic iteration order (insertion
// order). Name prefixes partition the sets the training regimes update:
//   embed.*   shared embedding / tied output projection
//   enc.*     encoder stack
//   dec.*     decoder stack (theta_dec)
//   approx.*  saliency approximator (theta tilde) — disjoint storage
class ParamStore {
 public:
  Tensor& add(const std::string& name, std::vector<int> shape);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<std::string>& names() const { return names_; }
  std::size_t count() const { return names_.size(); }
  std::size_t scalar_count() const;  // total number of scalar parameters

  template <typename Fn>
  void for_each(Fn&& fn) {
    for (const auto& n : names_) fn(n, tensors_[index_.at(n)]);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& n : names_) fn(n, tensors_[index_.at(n)]);
  }

  // FNV-1a over names, shapes and raw value bytes; used by the
  // frozen-parameter audits.
  std::uint64_t checksum(const std::string& prefix = "") const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Binary container, versioned with a format tag; exact float64 round trip.
void save_checkpoint(const ParamStore& params, const std::string& path);
void load_checkpoint(ParamStore& params, const std::string& path);  // into existing names
ParamStore load_checkpoint_new(const std::string& path);

}  // namespace sentattn
