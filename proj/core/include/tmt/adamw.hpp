#pragma once

#include <cstdint>
#include <vector>

#include "tmt/matrix.hpp"
#include "tmt/params.hpp"

namespace tmt {

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Moment accumulators for one parameter set. Confined to a single training loop.
struct AdamWState {
  AdamWConfig config;
  std::uint64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;

  AdamWState() = default;
  AdamWState(AdamWConfig cfg, const ConstParamRefs& params);
};

/// One AdamW update with decoupled weight decay and bias-corrected moments:
///   p ← p − lr·wd·p;  p ← p − lr·m̂/(√v̂ + ε)
void adamw_step(AdamWState& state, const ParamRefs& params, const ConstParamRefs& grads);

}  // namespace tmt
