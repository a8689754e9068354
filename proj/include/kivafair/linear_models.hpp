#pragma once

#include <string>
#include <vector>

#include "kivafair/data_model.hpp"

namespace kivafair {

struct OlsFit {
  VectorXd coefficients;
  double residual_variance = 0.0;
  std::vector<std::string> column_names;
};

inline constexpr double kMaxConditionNumber = 1e12;

/// Least squares through column-pivoted QR. Throws kTooFewRows when n <= p
/// and kSingularDesign (naming the offending columns) when the condition
/// number exceeds kMaxConditionNumber.
OlsFit fit_ols(const DesignMatrix& x, const VectorXd& y);
OlsFit fit_ols(const MatrixXd& x, const VectorXd& y, const std::vector<std::string>& column_names);

struct LogisticOptions {
  int max_iter = 100;
  double tol = 1e-8;
};

struct LogisticFit {
  VectorXd coefficients;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> column_names;
  std::vector<double> log_likelihood_trace;  // one entry per accepted iterate, starting at beta = 0
};

/// Newton / IRLS with step halving, so the log-likelihood never decreases.
/// Stops when max_j |delta_j| / max(1, |beta_j|) < tol; that final step is
/// taken in full and is not recorded in the trace. Throws
/// kSingleClassInput and kDivergedSeparableData (linear predictor saturates).
LogisticFit fit_logistic(const DesignMatrix& x, const VectorXd& w, LogisticOptions options = {});
LogisticFit fit_logistic(const MatrixXd& x, const VectorXd& w, const std::vector<std::string>& column_names,
                         LogisticOptions options = {});

double logistic_log_likelihood(const MatrixXd& x, const VectorXd& w, const VectorXd& beta);
VectorXd logistic_gradient(const MatrixXd& x, const VectorXd& w, const VectorXd& beta);

/// Linear predictor with named coefficients: OLS fits and posterior means
/// both reduce to this.
struct LinearPredictor {
  VectorXd coefficients;
  std::vector<std::string> column_names;

  static LinearPredictor from(const OlsFit& fit) { return {fit.coefficients, fit.column_names}; }
};

/// Throws kColumnMismatch when the design's columns differ from the fit's.
VectorXd predict(const LinearPredictor& model, const DesignMatrix& x);
VectorXd predict(const OlsFit& fit, const DesignMatrix& x);
/// Probabilities sigmoid(X beta).
VectorXd predict(const LogisticFit& fit, const DesignMatrix& x);

inline constexpr double kPropensityClip = 1e-6;
VectorXd clip_probabilities(const VectorXd& p, double bound = kPropensityClip);
double sigmoid(double t);

/// Throws kLengthMismatch / kEmptyInput.
double rmse(const VectorXd& y_true, const VectorXd& y_pred);

struct ClassificationMetrics {
  double f1 = 0.0;
  double accuracy = 0.0;
};

/// Label 1 (treated) is the positive class; prediction is prob >= threshold.
/// F1 is 1 when there are no positives to find and none were predicted.
ClassificationMetrics classification_metrics(const VectorXd& labels, const VectorXd& probs, double threshold = 0.5);

}  // namespace kivafair
