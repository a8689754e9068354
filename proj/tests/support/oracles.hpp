// Independent reference computations for the test suites. Nothing here calls
// into kivafair's numerical code.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Normal equations X'X b = X'y solved by Gaussian elimination with partial
/// pivoting in long double.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const int p = static_cast<int>(x.cols());
  const int n = static_cast<int>(x.rows());
  std::vector<std::vector<long double>> a(p, std::vector<long double>(p + 1, 0.0L));
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      long double s = 0.0L;
      for (int r = 0; r < n; ++r) s += static_cast<long double>(x(r, i)) * x(r, j);
      a[i][j] = s;
    }
    long double s = 0.0L;
    for (int r = 0; r < n; ++r) s += static_cast<long double>(x(r, i)) * y(r);
    a[i][p] = s;
  }
  for (int c = 0; c < p; ++c) {
    int piv = c;
    for (int r = c + 1; r < p; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (int r = 0; r < p; ++r) {
      if (r == c) continue;
      const long double f = a[r][c] / a[c][c];
      for (int k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  Eigen::VectorXd b(p);
  for (int i = 0; i < p; ++i) b(i) = static_cast<double>(a[i][p] / a[i][i]);
  return b;
}

/// Central finite-difference gradient.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                   double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double x0 = x(j);
    x(j) = x0 + h;
    const double up = f(x);
    x(j) = x0 - h;
    const double down = f(x);
    x(j) = x0;
    g(j) = (up - down) / (2.0 * h);
  }
  return g;
}

/// Kolmogorov limiting survival function Q(t) = 2 sum (-1)^(k-1) exp(-2 k^2 t^2).
inline double kolmogorov_q(double t) {
  if (t < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test with Stephens' small-sample correction.
inline KsResult ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

/// Reference sampler: inverse CDF applied to uniforms from an engine that is
/// unrelated to kivafair's generator.
inline std::vector<double> inverse_cdf_sample(const std::function<double(double)>& quantile, std::size_t n,
                                              std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& v : out) {
    double q = u(gen);
    while (q <= 0.0) q = u(gen);
    v = quantile(q);
  }
  return out;
}

inline double mean(const std::vector<double>& v) {
  long double s = 0.0L;
  for (double x : v) s += x;
  return static_cast<double>(s / v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  long double s = 0.0L;
  for (double x : v) s += (x - m) * (x - m);
  return static_cast<double>(s / (v.size() - 1));
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const std::filesystem::path p = std::filesystem::path(KIVAFAIR_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
