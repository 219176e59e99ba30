#pragma once

#include <functional>
#include <string>
#include <unordered_map>

#include "sentattn/autodiff.hpp"
#include "sentattn/checkpoint.hpp"

namespace sentattn {

// Parameters bound onto a tape for one pass. `trainable` decides which
// leaves carry gradients; everything else enters as constants, which is how
// the regimes freeze parameter subsets.
struct Bound {
  ad::Tape* tape = nullptr;
  std::unordered_map<std::string, ad::Var> vars;

  ad::Var operator[](const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw std::out_of_range("unbound parameter: " + name);
    return it->second;
  }
};

inline Bound bind_params(ad::Tape& tape, const ParamStore& params,
                         const std::function<bool(const std::string&)>& trainable) {
  Bound b;
  b.tape = &tape;
  params.for_each([&](const std::string& name, const Tensor& t) {
    b.vars.emplace(name, tape.leaf(t, trainable && trainable(name)));
  });
  return b;
}

inline Bound bind_params_frozen(ad::Tape& tape, const ParamStore& params) {
  return bind_params(tape, params, [](const std::string&) { return false; });
}

}  // namespace sentattn
