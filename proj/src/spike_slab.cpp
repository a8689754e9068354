#include "kivafair/spike_slab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kivafair {

std::string_view fair_mode_name(FairMode m) {
  switch (m) {
    case FairMode::kBalancedGap: return "balanced-gap";
    case FairMode::kLinear: return "linear";
    case FairMode::kPaperLiteral: return "paper-literal";
  }
  return "unknown";
}

FairMode parse_fair_mode(std::string_view text) {
  for (FairMode m : {FairMode::kBalancedGap, FairMode::kLinear, FairMode::kPaperLiteral}) {
    if (fair_mode_name(m) == text) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown fairness mode '" + std::string(text) + "'");
}

bool GapPenalty::active() const {
  if (d.size() == 0 || (d.array() == 0.0).all()) return false;
  if (mode == FairMode::kPaperLiteral) return true;
  return lambda != 0.0;
}

SpikeSlabSampler::SpikeSlabSampler(MatrixXd x, VectorXd y, SpikeSlabHyper hyper, std::optional<Index> intercept,
                                   std::vector<std::string> column_names, GapPenalty penalty)
    : x_(std::move(x)),
      y_(std::move(y)),
      hyper_(hyper),
      intercept_(intercept),
      names_(std::move(column_names)),
      penalty_(std::move(penalty)) {
  validate(hyper_);
  if (x_.rows() != y_.size()) throw Error(ErrorCode::kDimensionMismatch, "rows(X) != |y|");
  if (intercept_ && (*intercept_ < 0 || *intercept_ >= x_.cols())) {
    throw Error(ErrorCode::kDimensionMismatch, "intercept index out of range");
  }
  if (names_.empty()) {
    for (Index j = 0; j < x_.cols(); ++j) names_.push_back("x" + std::to_string(j));
  }
  if (static_cast<Index>(names_.size()) != x_.cols()) throw Error(ErrorCode::kDimensionMismatch, "column names");
  penalized_ = penalty_.active();
  if (penalized_ && penalty_.d.size() != x_.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "constraint vector length != number of columns");
  }
  gram_ = x_.transpose() * x_;
  xty_ = x_.transpose() * y_;
  yty_ = y_.squaredNorm();
  selectable_count_ = x_.cols() - (intercept_ ? 1 : 0);
}

GibbsState SpikeSlabSampler::initial_state(std::uint64_t chain) const {
  GibbsState s;
  s.beta = VectorXd::Zero(cols());
  s.pi.assign(static_cast<std::size_t>(cols()), 1);
  s.theta = hyper_.theta_init;
  s.tau2 = 1.0;
  const Index n = rows();
  double var = 0.0;
  if (n > 1) {
    const double mean = y_.mean();
    var = (y_.array() - mean).square().sum() / static_cast<double>(n - 1);
  }
  s.sigma2 = var > 0.0 ? var : 1.0;
  s.rng = Rng(derive_seed(hyper_.seed, chain));
  return s;
}

double SpikeSlabSampler::penalized_rss(const VectorXd& beta) const {
  const double rss = std::max(0.0, yty_ - 2.0 * beta.dot(xty_) + beta.dot(gram_ * beta));
  if (!penalized_) return rss;
  const double gap = beta.dot(penalty_.d);
  switch (penalty_.mode) {
    case FairMode::kBalancedGap: return rss + penalty_.lambda * static_cast<double>(rows()) * gap * gap;
    case FairMode::kLinear:
    case FairMode::kPaperLiteral: return rss + penalty_.lambda * gap;
  }
  return rss;
}

BetaParams SpikeSlabSampler::theta_conditional(const GibbsState& s) const {
  double included = 0.0;
  for (Index j = 0; j < cols(); ++j)
    if (selectable(j) && s.pi[static_cast<std::size_t>(j)]) included += 1.0;
  return {hyper_.a + included, hyper_.b + (static_cast<double>(selectable_count_) - included)};
}

InvGammaParams SpikeSlabSampler::tau2_conditional(const GibbsState& s) const {
  double included = 0.0;
  double ss = 0.0;
  for (Index j = 0; j < cols(); ++j) {
    if (!selectable(j) || !s.pi[static_cast<std::size_t>(j)]) continue;
    included += 1.0;
    ss += s.beta[j] * s.beta[j];
  }
  if (included == 0.0) return {0.5, hyper_.s2 / 2.0};
  return {0.5 + included / 2.0, hyper_.s2 / 2.0 + ss / (2.0 * s.sigma2)};
}

InvGammaParams SpikeSlabSampler::sigma2_conditional(const GibbsState& s) const {
  const double rate = hyper_.alpha2 + penalized_rss(s.beta) / 2.0;
  if (!(rate > 0.0)) {
    throw Error(ErrorCode::kNumericalSingularity, "penalized residual term drives the sigma^2 rate non-positive");
  }
  return {hyper_.alpha1 + static_cast<double>(rows()) / 2.0, rate};
}

GaussianParams SpikeSlabSampler::beta_conditional(const GibbsState& s) const {
  GaussianParams g;
  for (Index j = 0; j < cols(); ++j)
    if (s.pi[static_cast<std::size_t>(j)]) g.active.push_back(j);
  const Index k = static_cast<Index>(g.active.size());
  if (k == 0) return g;

  MatrixXd precision(k, k);  // scaled by sigma^2
  VectorXd rhs(k);
  for (Index a = 0; a < k; ++a) {
    const Index ja = g.active[static_cast<std::size_t>(a)];
    for (Index b = 0; b < k; ++b) precision(a, b) = gram_(ja, g.active[static_cast<std::size_t>(b)]);
    precision(a, a) += prior_precision(ja, s.tau2);
    rhs[a] = xty_[ja];
  }
  if (penalized_) {
    const double lambda = penalty_.lambda;
    for (Index a = 0; a < k; ++a) {
      const double da = penalty_.d[g.active[static_cast<std::size_t>(a)]];
      switch (penalty_.mode) {
        case FairMode::kBalancedGap:
          for (Index b = 0; b < k; ++b) {
            precision(a, b) += lambda * static_cast<double>(rows()) * da * penalty_.d[g.active[static_cast<std::size_t>(b)]];
          }
          break;
        case FairMode::kLinear: rhs[a] -= lambda * da / 2.0; break;
        case FairMode::kPaperLiteral: rhs[a] -= da; break;
      }
    }
  }
  Eigen::LLT<MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumericalSingularity, "beta conditional precision is not positive definite");
  }
  g.mean = llt.solve(rhs);
  g.covariance = s.sigma2 * llt.solve(MatrixXd::Identity(k, k));
  return g;
}

double SpikeSlabSampler::inclusion_log_odds(const GibbsState& s, Index j) const {
  const double xx = gram_(j, j);
  double quad = xx + 1.0 / s.tau2;
  double xz = xty_[j] - gram_.row(j).dot(s.beta) + xx * s.beta[j];
  if (penalized_) {
    const double dj = penalty_.d[j];
    switch (penalty_.mode) {
      case FairMode::kBalancedGap: {
        const double n_lambda = penalty_.lambda * static_cast<double>(rows());
        quad += n_lambda * dj * dj;
        xz -= n_lambda * dj * (penalty_.d.dot(s.beta) - dj * s.beta[j]);
        break;
      }
      case FairMode::kLinear: xz -= penalty_.lambda * dj / 2.0; break;
      case FairMode::kPaperLiteral: xz += dj; break;
    }
  }
  const double theta = s.theta;
  if (theta <= 0.0) return -std::numeric_limits<double>::infinity();
  if (theta >= 1.0) return std::numeric_limits<double>::infinity();
  const double k = xz * xz / (2.0 * s.sigma2 * quad);
  return std::log(theta) - std::log1p(-theta) - 0.5 * std::log(s.sigma2 * s.tau2) + k +
         0.5 * std::log(s.sigma2 / quad);
}

double SpikeSlabSampler::inclusion_probability(const GibbsState& s, Index j) const {
  const double lo = inclusion_log_odds(s, j);
  if (lo == std::numeric_limits<double>::infinity()) return 1.0;
  if (lo == -std::numeric_limits<double>::infinity()) return 0.0;
  return sigmoid(lo);
}

void SpikeSlabSampler::sample_theta(GibbsState& s) const {
  const BetaParams p = theta_conditional(s);
  s.theta = s.rng.beta(p.a, p.b);
}

void SpikeSlabSampler::sample_tau2(GibbsState& s) const {
  const InvGammaParams p = tau2_conditional(s);
  s.tau2 = s.rng.inv_gamma(p.shape, p.rate);
}

void SpikeSlabSampler::sample_sigma2(GibbsState& s) const {
  const InvGammaParams p = sigma2_conditional(s);
  s.sigma2 = s.rng.inv_gamma(p.shape, p.rate);
}

void SpikeSlabSampler::sample_beta(GibbsState& s) const {
  const GaussianParams g = beta_conditional(s);
  s.beta.setZero();
  const Index k = static_cast<Index>(g.active.size());
  if (k == 0) return;
  Eigen::LLT<MatrixXd> llt(g.covariance);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumericalSingularity, "beta conditional covariance is not positive definite");
  }
  VectorXd z(k);
  for (Index a = 0; a < k; ++a) z[a] = s.rng.normal();
  const VectorXd draw = g.mean + llt.matrixL() * z;
  for (Index a = 0; a < k; ++a) s.beta[g.active[static_cast<std::size_t>(a)]] = draw[a];
}

void SpikeSlabSampler::sample_pi(GibbsState& s) const {
  for (Index j = 0; j < cols(); ++j) {
    auto& pj = s.pi[static_cast<std::size_t>(j)];
    if (!selectable(j)) {
      pj = 1;
      continue;
    }
    const double zeta = inclusion_probability(s, j);
    pj = s.rng.uniform() < zeta ? 1 : 0;
    if (!pj) s.beta[j] = 0.0;
  }
}

void SpikeSlabSampler::sweep(GibbsState& s) const {
  sample_pi(s);
  sample_beta(s);
  sample_theta(s);
  sample_tau2(s);
  sample_sigma2(s);
}

PosteriorDraws SpikeSlabSampler::run(std::uint64_t chain) const {
  GibbsState s = initial_state(chain);
  for (int it = 0; it < hyper_.burn_in; ++it) sweep(s);

  const Index t = hyper_.draws;
  const Index p = cols();
  PosteriorDraws out;
  out.beta.resize(t, p);
  out.pi.resize(t, p);
  out.theta.resize(t);
  out.tau2.resize(t);
  out.sigma2.resize(t);
  out.hyper = hyper_;
  out.column_names = names_;
  for (Index it = 0; it < t; ++it) {
    sweep(s);
    out.beta.row(it) = s.beta.transpose();
    for (Index j = 0; j < p; ++j) out.pi(it, j) = s.pi[static_cast<std::size_t>(j)];
    out.theta[it] = s.theta;
    out.tau2[it] = s.tau2;
    out.sigma2[it] = s.sigma2;
  }
  return out;
}

PosteriorDraws run_gibbs(const DesignMatrix& x, const VectorXd& y, const SpikeSlabHyper& hyper, std::uint64_t chain) {
  validate(x);
  return SpikeSlabSampler(x.values, y, hyper, x.intercept_index, x.column_names).run(chain);
}

PosteriorDraws run_gibbs(const SectorDataset& d, const SpikeSlabHyper& hyper, std::uint64_t chain) {
  return run_gibbs(d.x, d.y, hyper, chain);
}

VectorXd posterior_mean_coefficients(const PosteriorDraws& draws) {
  if (draws.draw_count() == 0) throw Error(ErrorCode::kEmptyDraws, "no posterior draws");
  return draws.beta.colwise().mean().transpose();
}

VectorXd inclusion_probabilities(const PosteriorDraws& draws) {
  if (draws.draw_count() == 0) throw Error(ErrorCode::kEmptyDraws, "no posterior draws");
  return draws.pi.cast<double>().colwise().mean().transpose();
}

double sample_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kEmptyDraws, "quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<CredibleInterval> credible_intervals(const PosteriorDraws& draws, double level) {
  if (draws.draw_count() == 0) throw Error(ErrorCode::kEmptyDraws, "no posterior draws");
  const double tail = (1.0 - level) / 2.0;
  std::vector<CredibleInterval> out;
  for (Index j = 0; j < draws.feature_count(); ++j) {
    std::vector<double> col(draws.beta.col(j).data(), draws.beta.col(j).data() + draws.draw_count());
    out.push_back({sample_quantile(col, tail), sample_quantile(col, 1.0 - tail)});
  }
  return out;
}

LinearPredictor posterior_mean_predictor(const PosteriorDraws& draws) {
  return {posterior_mean_coefficients(draws), draws.column_names};
}

}  // namespace kivafair
