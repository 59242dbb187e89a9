#pragma once

#include <vector>

#include "mfda/curves.hpp"
#include "mfda/mfpca.hpp"

namespace mfda {

struct IccReport {
  Curve pointwise;
  double global_icc = 0.0;
  /// Retained eigenvalue sum per level (subject level first).
  std::vector<double> level_variances;
  double noise_variance = 0.0;
};

/// rho(t) = V1(t) / (sum_l Vl(t) + sigma^2) with Vl(t) = sum_k lambda_k (e_k(t))^2
/// over the retained components of level l, clamped to [0,1]. Throws
/// undefined_icc at the first grid point where every variance is zero.
Curve pointwise_icc(const MultilevelFit& fit);

/// S1 / (sum_l Sl + sigma^2), Sl the retained eigenvalue sum of level l.
double global_icc(const MultilevelFit& fit);

/// Plug-in form of global_icc on raw level sums.
double global_icc(const std::vector<double>& level_sums, double noise_variance);

IccReport icc_report(const MultilevelFit& fit);

}  // namespace mfda
