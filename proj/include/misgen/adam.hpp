#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "misgen/net.hpp"

namespace misgen::num {

// Bias-corrected Adam over a ParamSet. Moment tensors shape-match the
// parameters; t increments by exactly one per update.
template <typename S>
struct AdamState {
  ParamSet<S> m, v;
  int64_t t = 0;
  double alpha = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState init(const ArchDesc& arch, double alpha) {
    AdamState s;
    s.m = ParamSet<S>::zeros(arch);
    s.v = ParamSet<S>::zeros(arch);
    s.alpha = alpha;
    return s;
  }
};

template <typename S>
void adam_update(AdamState<S>& st, ParamSet<S>& params, const ParamSet<S>& grads) {
  if (!(st.m.arch == params.arch) || !(grads.arch == params.arch))
    throw std::invalid_argument("adam_update: architecture mismatch");
  st.t += 1;
  const S b1 = static_cast<S>(st.beta1), b2 = static_cast<S>(st.beta2);
  const S corr1 = static_cast<S>(1.0 - std::pow(st.beta1, static_cast<double>(st.t)));
  const S corr2 = static_cast<S>(1.0 - std::pow(st.beta2, static_cast<double>(st.t)));
  const S lr = static_cast<S>(st.alpha), eps = static_cast<S>(st.eps);

  std::vector<Tensor<S>*> ps, ms, vs;
  std::vector<const Tensor<S>*> gs;
  params.for_each([&](const char*, Tensor<S>& t) { ps.push_back(&t); });
  st.m.for_each([&](const char*, Tensor<S>& t) { ms.push_back(&t); });
  st.v.for_each([&](const char*, Tensor<S>& t) { vs.push_back(&t); });
  grads.for_each([&](const char*, const Tensor<S>& t) { gs.push_back(&t); });

  for (size_t i = 0; i < ps.size(); ++i) {
    auto p = ps[i]->array();
    auto m = ms[i]->array();
    auto v = vs[i]->array();
    auto g = gs[i]->array();
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.square();
    p -= lr * (m / corr1) / ((v / corr2).sqrt() + eps);
    if (!ps[i]->all_finite())
      throw std::runtime_error("adam_update: non-finite parameters after step");
  }
}

}  // namespace misgen::num
