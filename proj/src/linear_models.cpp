#include "kivafair/linear_models.hpp"

#include <algorithm>
#include <cmath>

namespace kivafair {

namespace {

void check_names(const std::vector<std::string>& fit_names, const DesignMatrix& x) {
  if (fit_names != x.column_names) {
    throw Error(ErrorCode::kColumnMismatch, "design columns differ from the fitted model's columns");
  }
}

std::string join_names(const std::vector<std::string>& names, const std::vector<Index>& idx) {
  std::string out;
  for (Index j : idx) {
    if (!out.empty()) out += ", ";
    out += j < static_cast<Index>(names.size()) ? names[static_cast<std::size_t>(j)] : "col" + std::to_string(j);
  }
  return out;
}

}  // namespace

OlsFit fit_ols(const DesignMatrix& x, const VectorXd& y) { return fit_ols(x.values, y, x.column_names); }

OlsFit fit_ols(const MatrixXd& x, const VectorXd& y, const std::vector<std::string>& column_names) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (y.size() != n) throw Error(ErrorCode::kLengthMismatch, "rows(X) != |y|");
  if (n <= p) {
    throw Error(ErrorCode::kTooFewRows, "need n > p, got n=" + std::to_string(n) + ", p=" + std::to_string(p));
  }

  Eigen::JacobiSVD<MatrixXd> svd(x);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(p - 1);
  if (!(smin > 0.0) || smax / smin > kMaxConditionNumber) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
    qr.setThreshold(1.0 / kMaxConditionNumber);
    std::vector<Index> offending;
    const Index rank = qr.rank();
    const auto& perm = qr.colsPermutation().indices();
    for (Index k = std::min(rank, p - 1); k < p; ++k) offending.push_back(perm(k));
    std::sort(offending.begin(), offending.end());
    throw Error(ErrorCode::kSingularDesign, "condition number " + std::to_string(smin > 0 ? smax / smin : INFINITY) +
                                                " exceeds limit; offending columns: " +
                                                join_names(column_names, offending));
  }

  Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
  OlsFit fit;
  fit.coefficients = qr.solve(y);
  const VectorXd resid = y - x * fit.coefficients;
  fit.residual_variance = resid.squaredNorm() / static_cast<double>(n - p);
  fit.column_names = column_names;
  return fit;
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

namespace {

// log(1 + exp(t)) without overflow.
double log1pexp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

constexpr double kSaturatedPredictor = 40.0;

}  // namespace

double logistic_log_likelihood(const MatrixXd& x, const VectorXd& w, const VectorXd& beta) {
  const VectorXd eta = x * beta;
  double ll = 0.0;
  for (Index i = 0; i < eta.size(); ++i) ll += w[i] * eta[i] - log1pexp(eta[i]);
  return ll;
}

VectorXd logistic_gradient(const MatrixXd& x, const VectorXd& w, const VectorXd& beta) {
  const VectorXd eta = x * beta;
  VectorXd resid(eta.size());
  for (Index i = 0; i < eta.size(); ++i) resid[i] = w[i] - sigmoid(eta[i]);
  return x.transpose() * resid;
}

LogisticFit fit_logistic(const DesignMatrix& x, const VectorXd& w, LogisticOptions options) {
  return fit_logistic(x.values, w, x.column_names, options);
}

LogisticFit fit_logistic(const MatrixXd& x, const VectorXd& w, const std::vector<std::string>& column_names,
                         LogisticOptions options) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (w.size() != n) throw Error(ErrorCode::kLengthMismatch, "rows(X) != |w|");
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "no rows");
  const Index ones = static_cast<Index>((w.array() > 0.5).count());
  if (ones == 0 || ones == n) throw Error(ErrorCode::kSingleClassInput, "treatment vector has a single class");

  LogisticFit fit;
  fit.column_names = column_names;
  VectorXd beta = VectorXd::Zero(p);
  double ll = logistic_log_likelihood(x, w, beta);
  fit.log_likelihood_trace.push_back(ll);

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const VectorXd eta = x * beta;
    VectorXd mu(n), weight(n);
    for (Index i = 0; i < n; ++i) {
      mu[i] = sigmoid(eta[i]);
      weight[i] = mu[i] * (1.0 - mu[i]);
    }
    const VectorXd grad = x.transpose() * (w - mu);
    const MatrixXd hessian = x.transpose() * weight.asDiagonal() * x;
    Eigen::LDLT<MatrixXd> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw Error(ErrorCode::kDivergedSeparableData, "information matrix is singular");
    }
    VectorXd step = ldlt.solve(grad);
    if (!step.allFinite()) throw Error(ErrorCode::kDivergedSeparableData, "Newton step is not finite");

    // Inside the tolerance the log-likelihood change is below rounding, so
    // the last Newton step is taken without a line search.
    double full_change = 0.0;
    for (Index j = 0; j < p; ++j) {
      full_change = std::max(full_change, std::abs(step[j]) / std::max(1.0, std::abs(beta[j] + step[j])));
    }
    if (full_change < options.tol) {
      beta += step;
      fit.converged = true;
      fit.iterations = iter;
      break;
    }

    double scale = 1.0;
    VectorXd candidate = beta + step;
    double ll_new = logistic_log_likelihood(x, w, candidate);
    for (int halving = 0; halving < 40 && !(ll_new >= ll); ++halving) {
      scale *= 0.5;
      candidate = beta + scale * step;
      ll_new = logistic_log_likelihood(x, w, candidate);
    }
    if (!(ll_new >= ll)) {
      // No ascent direction left at machine precision.
      fit.converged = true;
      fit.iterations = iter;
      break;
    }
    const VectorXd delta = candidate - beta;
    beta = candidate;
    ll = ll_new;
    fit.log_likelihood_trace.push_back(ll);
    fit.iterations = iter;

    if ((x * beta).cwiseAbs().maxCoeff() > kSaturatedPredictor) {
      throw Error(ErrorCode::kDivergedSeparableData,
                  "fitted probabilities saturate at 0/1; the classes are (quasi-)separable");
    }
    double change = 0.0;
    for (Index j = 0; j < p; ++j) change = std::max(change, std::abs(delta[j]) / std::max(1.0, std::abs(beta[j])));
    if (change < options.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.coefficients = beta;
  return fit;
}

VectorXd predict(const LinearPredictor& model, const DesignMatrix& x) {
  check_names(model.column_names, x);
  return x.values * model.coefficients;
}

VectorXd predict(const OlsFit& fit, const DesignMatrix& x) { return predict(LinearPredictor::from(fit), x); }

VectorXd predict(const LogisticFit& fit, const DesignMatrix& x) {
  check_names(fit.column_names, x);
  const VectorXd eta = x.values * fit.coefficients;
  return eta.unaryExpr([](double t) { return sigmoid(t); });
}

VectorXd clip_probabilities(const VectorXd& p, double bound) {
  return p.cwiseMax(bound).cwiseMin(1.0 - bound);
}

double rmse(const VectorXd& y_true, const VectorXd& y_pred) {
  if (y_true.size() != y_pred.size()) throw Error(ErrorCode::kLengthMismatch, "rmse inputs differ in length");
  if (y_true.size() == 0) throw Error(ErrorCode::kEmptyInput, "rmse of empty vectors");
  return std::sqrt((y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size()));
}

ClassificationMetrics classification_metrics(const VectorXd& labels, const VectorXd& probs, double threshold) {
  if (labels.size() != probs.size()) throw Error(ErrorCode::kLengthMismatch, "labels and probabilities differ in length");
  if (labels.size() == 0) throw Error(ErrorCode::kEmptyInput, "no labels");
  double tp = 0, fp = 0, fn = 0, correct = 0;
  for (Index i = 0; i < labels.size(); ++i) {
    const bool truth = labels[i] > 0.5;
    const bool pred = probs[i] >= threshold;
    if (truth && pred) ++tp;
    if (!truth && pred) ++fp;
    if (truth && !pred) ++fn;
    if (truth == pred) ++correct;
  }
  ClassificationMetrics m;
  const double denom = 2 * tp + fp + fn;
  m.f1 = denom > 0 ? 2 * tp / denom : 1.0;
  m.accuracy = correct / static_cast<double>(labels.size());
  return m;
}

}  // namespace kivafair
