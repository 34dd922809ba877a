#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subsearch/line_search.hpp"

namespace subsearch {

/// Step sizes actually used by one iteration, signed. Unused slots stay empty.
/// alpha1/beta1 hold the (first-layer) learning and momentum rates,
/// alpha2/beta2 the second-layer or second-direction ones.
struct StepSizes {
  std::optional<double> alpha1;
  std::optional<double> beta1;
  std::optional<double> alpha2;
  std::optional<double> beta2;
  std::optional<double> gamma;
  std::optional<double> delta;
};

struct StepRecord {
  std::string method;
  StepSizes steps;
  std::size_t inner_iters = 0;
  std::uint64_t products = 0;  // counted bottleneck products taken by this step
  double f = 0.0;              // objective after the step
  double grad_norm = 0.0;      // ||grad f|| at the point the step started from
  bool search_failed = false;
  bool direction_flipped = false;
  bool momentum_reset = false;
  /// Present for steps that ran a strong Wolfe search.
  std::optional<LineSearchResult> line_search;
};

/// One optimizer run: the starting value and one record per iteration.
struct Trace {
  std::string method;
  double f0 = 0.0;
  std::vector<StepRecord> steps;
  double final_grad_norm = 0.0;
  double max_audit_residual = 0.0;  // largest relative tracking drift seen
};

}  // namespace subsearch
