// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <vector>

#include "topicfb/objective.hpp"

namespace topicfb {

struct FitResult {
  ModelParamsd params;
  std::vector<double> objective_trace;  // initial value, then one per iteration
  bool converged = false;
  int iterations = 0;

  double objective() const { return objective_trace.back(); }
};

/// Diagonal upper bound D on the negative Hessian of smooth_objective():
/// -H <= diag(D) for every parameter value. Flat layout as ParamLayout.
Eigen::VectorXd curvature_bound(const Design& design, const FeatureConfig& config,
                                const Hyperparams& hyper);

/// Maximizes objective() by accelerated proximal gradient ascent in a
/// diagonal metric: the diagonal of the local negative Hessian, floored at a
/// small multiple of curvature_bound(). Each step is a gradient step on the
/// smooth part followed by soft thresholding of a and b. The step scale is
/// halved until the quadratic model bounds the smooth part from below, and
/// momentum is dropped whenever it would lower the objective, so the trace
/// never decreases. Stops when the relative objective change of an accepted
/// step drops below hyper.tol.
FitResult fit(const Design& design, const FeatureConfig& config, const Hyperparams& hyper,
              const ModelParamsd& init);

/// fit() from all-zero parameters.
FitResult fit(const Design& design, const FeatureConfig& config, const Hyperparams& hyper);

/// True when every step of the trace is >= the previous value minus
/// tol * max(1, |previous|).
bool trace_monotone(const std::vector<double>& trace, double tol);

}  // namespace topicfb
