#include <doctest.h>

#include <cmath>

#include "expect.hpp"
#include "kivafair/linear_models.hpp"
#include "kivafair/rng.hpp"
#include "oracles.hpp"

using namespace kivafair;

namespace {

MatrixXd random_design(kivafair::Rng& rng, Index n, Index p, bool intercept = true) {
  MatrixXd x(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) x(i, j) = (intercept && j == 0) ? 1.0 : rng.normal();
  return x;
}

std::vector<std::string> names(Index p) {
  std::vector<std::string> out;
  for (Index j = 0; j < p; ++j) out.push_back("c" + std::to_string(j));
  return out;
}

DesignMatrix as_design(const MatrixXd& x) {
  DesignMatrix d;
  d.values = x;
  d.column_names = names(x.cols());
  d.scaling.assign(static_cast<std::size_t>(x.cols()), ColumnScaling{});
  return d;
}

}  // namespace

TEST_CASE("exact linear data is recovered") {
  kivafair::Rng rng(1);
  const MatrixXd x = random_design(rng, 30, 4);
  const VectorXd c = (VectorXd(4) << 21.0, -4.27, 3.88, 0.5).finished();
  const OlsFit fit = fit_ols(x, x * c, names(4));
  CHECK((fit.coefficients - c).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(fit.residual_variance < 1e-18);
  CHECK((predict(fit, as_design(x)) - x * c).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("OLS matches an independent normal-equations solve") {
  kivafair::Rng rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const MatrixXd x = random_design(rng, 20, 3);
    VectorXd y(20);
    for (Index i = 0; i < 20; ++i) y[i] = 1.0 + 2.0 * x(i, 1) - x(i, 2) + rng.normal();
    const OlsFit fit = fit_ols(x, y, names(3));
    const VectorXd ref = oracle::normal_equations(x, y);
    CHECK((fit.coefficients - ref).norm() / ref.norm() < 1e-8);

    const VectorXd r = y - x * fit.coefficients;
    CHECK((x.transpose() * r).cwiseAbs().maxCoeff() < 1e-6 * y.norm());
    CHECK(fit.residual_variance == doctest::Approx(r.squaredNorm() / 17.0).epsilon(1e-12));
  }
}

TEST_CASE("OLS failure modes") {
  kivafair::Rng rng(3);
  const MatrixXd x = random_design(rng, 3, 3);
  CHECK(error_code_of([&] { fit_ols(x, VectorXd::Ones(3), names(3)); }) == ErrorCode::kTooFewRows);

  MatrixXd dup = random_design(rng, 40, 4);
  dup.col(3) = 2.0 * dup.col(1);
  try {
    fit_ols(dup, VectorXd::Ones(40), {"intercept", "a", "b", "a_twice"});
    FAIL("expected SingularDesign");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSingularDesign);
    const std::string msg = e.what();
    CHECK((msg.find("a_twice") != std::string::npos || msg.find(" a") != std::string::npos));
  }
  CHECK(error_code_of([&] { fit_ols(random_design(rng, 10, 2), VectorXd::Ones(9), names(2)); }) ==
        ErrorCode::kLengthMismatch);
}

TEST_CASE("intercept-only logistic fits the base rate") {
  MatrixXd x = MatrixXd::Ones(100, 1);
  VectorXd w = VectorXd::Zero(100);
  for (Index i = 0; i < 30; ++i) w[i * 3] = 1.0;
  const LogisticFit fit = fit_logistic(x, w, names(1));
  CHECK(fit.converged);
  const VectorXd p = predict(fit, as_design(x));
  CHECK((p.array() - 0.30).abs().maxCoeff() < 1e-6);
}

TEST_CASE("logistic separates a noisy single-feature rule") {
  kivafair::Rng rng(4);
  const Index n = 400;
  MatrixXd x = random_design(rng, n, 2);
  VectorXd w(n);
  for (Index i = 0; i < n; ++i) w[i] = (x(i, 1) + 0.2 * rng.normal()) > 0 ? 1.0 : 0.0;
  const LogisticFit fit = fit_logistic(x, w, names(2));
  CHECK(fit.converged);
  const auto m = classification_metrics(w, predict(fit, as_design(x)));
  CHECK(m.accuracy > 0.9);
  CHECK(m.f1 > 0.9);
}

TEST_CASE("logistic oracles on 10 random small instances") {
  kivafair::Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = 60 + 10 * rep;
    const MatrixXd x = random_design(rng, n, 3);
    VectorXd w(n);
    for (Index i = 0; i < n; ++i) w[i] = rng.uniform() < sigmoid(0.3 + 0.8 * x(i, 1) - 0.5 * x(i, 2)) ? 1.0 : 0.0;
    LogisticOptions opt;
    const LogisticFit fit = fit_logistic(x, w, names(3), opt);
    REQUIRE(fit.converged);

    // Log-likelihood never decreases across iterations.
    for (std::size_t k = 1; k < fit.log_likelihood_trace.size(); ++k) {
      CHECK(fit.log_likelihood_trace[k] >= fit.log_likelihood_trace[k - 1] - 1e-10);
    }
    // Stationarity at the solution.
    const VectorXd g = logistic_gradient(x, w, fit.coefficients);
    CHECK(g.norm() < opt.tol * static_cast<double>(n));

    // Analytic gradient agrees with finite differences at an arbitrary point.
    VectorXd b(3);
    b << 0.2 * rep - 1.0, 0.5, -0.3;
    const VectorXd fd = oracle::fd_gradient([&](const VectorXd& v) { return logistic_log_likelihood(x, w, v); }, b);
    const VectorXd an = logistic_gradient(x, w, b);
    CHECK((fd - an).norm() / an.norm() < 1e-3);
  }
}

TEST_CASE("logistic failure modes") {
  kivafair::Rng rng(6);
  const MatrixXd x = random_design(rng, 50, 2);
  CHECK(error_code_of([&] { fit_logistic(x, VectorXd::Ones(50), names(2)); }) == ErrorCode::kSingleClassInput);
  VectorXd w(50);
  for (Index i = 0; i < 50; ++i) w[i] = x(i, 1) > 0 ? 1.0 : 0.0;  // perfectly separable
  CHECK(error_code_of([&] { fit_logistic(x, w, names(2)); }) == ErrorCode::kDivergedSeparableData);
}

TEST_CASE("prediction") {
  MatrixXd x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  const DesignMatrix d = as_design(x);
  LinearPredictor zero{VectorXd::Zero(2), names(2)};
  CHECK(predict(zero, d) == VectorXd::Zero(3));
  LogisticFit lz;
  lz.coefficients = VectorXd::Zero(2);
  lz.column_names = names(2);
  CHECK((predict(lz, d).array() == 0.5).all());

  LinearPredictor m{(VectorXd(2) << 0.5, -1.0).finished(), names(2)};
  const VectorXd p = predict(m, d);
  CHECK(p[0] == 1 * 0.5 + 2 * -1.0);
  CHECK(p[1] == 3 * 0.5 + 4 * -1.0);
  CHECK(p[2] == 5 * 0.5 + 6 * -1.0);

  LinearPredictor wrong{VectorXd::Zero(2), {"c0", "other"}};
  CHECK(error_code_of([&] { predict(wrong, d); }) == ErrorCode::kColumnMismatch);
  LinearPredictor short_fit{VectorXd::Zero(1), {"c0"}};
  CHECK(error_code_of([&] { predict(short_fit, d); }) == ErrorCode::kColumnMismatch);
}

TEST_CASE("metrics") {
  const VectorXd y = (VectorXd(4) << 1, 2, 3, 4).finished();
  CHECK(rmse(y, y) == 0.0);
  CHECK(rmse((VectorXd(2) << 0, 2).finished(), VectorXd::Zero(2)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(error_code_of([&] { rmse(y, VectorXd::Zero(3)); }) == ErrorCode::kLengthMismatch);
  CHECK(error_code_of([&] { rmse(VectorXd(), VectorXd()); }) == ErrorCode::kEmptyInput);

  const VectorXd labels = (VectorXd(4) << 1, 0, 1, 0).finished();
  const auto perfect = classification_metrics(labels, labels);
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.accuracy == 1.0);
  // tp=1, fp=1, fn=1, tn=1 -> F1 = 2/(2+1+1) = 0.5, accuracy 0.5.
  const auto half = classification_metrics(labels, (VectorXd(4) << 0.9, 0.6, 0.2, 0.1).finished());
  CHECK(half.f1 == doctest::Approx(0.5));
  CHECK(half.accuracy == doctest::Approx(0.5));
  // Threshold is inclusive at 0.5.
  CHECK(classification_metrics(labels, (VectorXd(4) << 0.5, 0.0, 0.5, 0.0).finished()).f1 == 1.0);
  CHECK(error_code_of([&] { classification_metrics(labels, VectorXd::Zero(3)); }) == ErrorCode::kLengthMismatch);

  const VectorXd clipped = clip_probabilities((VectorXd(3) << 0.0, 0.5, 1.0).finished());
  CHECK(clipped[0] == 1e-6);
  CHECK(clipped[1] == 0.5);
  CHECK(clipped[2] == 1.0 - 1e-6);
}
