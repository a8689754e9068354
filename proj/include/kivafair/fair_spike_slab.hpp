#pragma once

#include <optional>

#include "kivafair/data_model.hpp"
#include "kivafair/spike_slab.hpp"

namespace kivafair {

inline constexpr double kDefaultFairLambda = 0.6;

/// d = mean feature row over treated rows - mean feature row over control
/// rows, so beta.d is the gap between the groups' mean predictions.
struct FairnessConstraint {
  VectorXd d;
  double lambda = kDefaultFairLambda;
  std::optional<Sector> sector;
};

/// Throws kEmptyTreatmentGroup / kEmptyControlGroup / kLengthMismatch.
FairnessConstraint build_constraint(const DesignMatrix& x, const VectorXd& w, double lambda,
                                    std::optional<Sector> sector = std::nullopt);
VectorXd group_mean_difference(const MatrixXd& x, const VectorXd& w);

/// Mean prediction over treated rows minus mean prediction over control rows.
double group_gap(const DesignMatrix& x, const VectorXd& w, const VectorXd& coefficients);
double group_gap(const MatrixXd& x, const VectorXd& w, const VectorXd& coefficients);

/// Spike-and-slab sampler with the group-gap regularizer. With lambda = 0 or
/// d = 0 (outside paper-literal mode) the draws equal run_gibbs exactly.
PosteriorDraws run_fair_gibbs(const DesignMatrix& x, const VectorXd& y, const FairnessConstraint& constraint,
                              const SpikeSlabHyper& hyper, FairMode mode = FairMode::kBalancedGap,
                              std::uint64_t chain = 0);

}  // namespace kivafair
