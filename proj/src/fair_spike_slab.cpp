#include "kivafair/fair_spike_slab.hpp"

namespace kivafair {

VectorXd group_mean_difference(const MatrixXd& x, const VectorXd& w) {
  if (w.size() != x.rows()) throw Error(ErrorCode::kLengthMismatch, "rows(X) != |w|");
  VectorXd treated = VectorXd::Zero(x.cols());
  VectorXd control = VectorXd::Zero(x.cols());
  double nt = 0.0, nc = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    if (w[i] > 0.5) {
      treated += x.row(i).transpose();
      nt += 1.0;
    } else {
      control += x.row(i).transpose();
      nc += 1.0;
    }
  }
  if (nt == 0.0) throw Error(ErrorCode::kEmptyTreatmentGroup, "no treated rows");
  if (nc == 0.0) throw Error(ErrorCode::kEmptyControlGroup, "no control rows");
  return treated / nt - control / nc;
}

FairnessConstraint build_constraint(const DesignMatrix& x, const VectorXd& w, double lambda,
                                    std::optional<Sector> sector) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  return {group_mean_difference(x.values, w), lambda, sector};
}

double group_gap(const MatrixXd& x, const VectorXd& w, const VectorXd& coefficients) {
  if (coefficients.size() != x.cols()) throw Error(ErrorCode::kLengthMismatch, "coefficient length != cols(X)");
  return group_mean_difference(x, w).dot(coefficients);
}

double group_gap(const DesignMatrix& x, const VectorXd& w, const VectorXd& coefficients) {
  return group_gap(x.values, w, coefficients);
}

PosteriorDraws run_fair_gibbs(const DesignMatrix& x, const VectorXd& y, const FairnessConstraint& constraint,
                              const SpikeSlabHyper& hyper, FairMode mode, std::uint64_t chain) {
  validate(x);
  if (!(constraint.lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  if (constraint.d.size() != x.cols()) throw Error(ErrorCode::kDimensionMismatch, "constraint length != cols(X)");
  GapPenalty penalty{mode, constraint.lambda, constraint.d};
  SpikeSlabHyper h = hyper;
  h.lambda = constraint.lambda;
  PosteriorDraws draws = SpikeSlabSampler(x.values, y, h, x.intercept_index, x.column_names, penalty).run(chain);
  return draws;
}

}  // namespace kivafair
