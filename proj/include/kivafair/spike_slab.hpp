#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kivafair/data_model.hpp"
#include "kivafair/linear_models.hpp"
#include "kivafair/rng.hpp"

namespace kivafair {

/// How the group-gap regularizer enters the Gaussian likelihood exponent.
///  kBalancedGap:  Q(beta) = RSS + lambda * n * (beta.d)^2
///  kLinear:       Q(beta) = RSS + lambda * beta.d   (mean shift X'y - lambda d / 2)
///  kPaperLiteral: beta mean uses X'y - d, inclusion statistic uses sum(x z) + d_j,
///                 sigma^2 rate uses RSS + lambda * beta.d
enum class FairMode { kBalancedGap, kLinear, kPaperLiteral };

std::string_view fair_mode_name(FairMode m);
/// "balanced-gap", "linear", "paper-literal"; throws kInvalidArgument.
FairMode parse_fair_mode(std::string_view text);

struct GapPenalty {
  FairMode mode = FairMode::kBalancedGap;
  double lambda = 0.0;
  VectorXd d;  // empty = no penalty

  /// An inactive penalty leaves every conditional untouched.
  bool active() const;
};

struct GibbsState {
  VectorXd beta;
  std::vector<std::uint8_t> pi;
  double theta = 0.5;
  double tau2 = 1.0;
  double sigma2 = 1.0;
  Rng rng{0};
};

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
};

struct InvGammaParams {
  double shape = 1.0;
  double rate = 1.0;
};

struct GaussianParams {
  std::vector<Index> active;
  VectorXd mean;
  MatrixXd covariance;
};

/// Gibbs sampler for y ~ N(X beta, sigma^2) with beta_j ~ (1 - pi_j) delta_0
/// + pi_j N(0, sigma^2 tau^2), tau^2 ~ IG(1/2, s^2/2), pi_j ~ Bern(theta),
/// theta ~ Beta(a, b), sigma^2 ~ IG(alpha1, alpha2).
///
/// The intercept column, when given, is always included and carries a flat
/// prior; it does not count towards theta or tau^2. One sweep updates
/// pi -> beta -> theta -> tau^2 -> sigma^2; pi_j is scanned sequentially with
/// beta_j marginalized, and beta_j is zeroed whenever pi_j becomes 0.
class SpikeSlabSampler {
 public:
  SpikeSlabSampler(MatrixXd x, VectorXd y, SpikeSlabHyper hyper, std::optional<Index> intercept = std::nullopt,
                   std::vector<std::string> column_names = {}, GapPenalty penalty = {});

  Index rows() const { return x_.rows(); }
  Index cols() const { return x_.cols(); }
  bool selectable(Index j) const { return !intercept_ || *intercept_ != j; }
  const SpikeSlabHyper& hyper() const { return hyper_; }

  /// beta = 0, pi = 1, tau^2 = 1, sigma^2 = sample variance of y, theta = theta_init.
  GibbsState initial_state(std::uint64_t chain = 0) const;

  BetaParams theta_conditional(const GibbsState& s) const;
  InvGammaParams tau2_conditional(const GibbsState& s) const;
  InvGammaParams sigma2_conditional(const GibbsState& s) const;
  GaussianParams beta_conditional(const GibbsState& s) const;
  /// log(zeta_j / (1 - zeta_j)) given the current beta_{-j}.
  double inclusion_log_odds(const GibbsState& s, Index j) const;
  double inclusion_probability(const GibbsState& s, Index j) const;

  void sample_theta(GibbsState& s) const;
  void sample_tau2(GibbsState& s) const;
  void sample_sigma2(GibbsState& s) const;
  void sample_beta(GibbsState& s) const;
  void sample_pi(GibbsState& s) const;
  void sweep(GibbsState& s) const;

  /// burn_in sweeps discarded, then `draws` sweeps recorded.
  PosteriorDraws run(std::uint64_t chain = 0) const;

  /// Residual sum of squares plus the active penalty term.
  double penalized_rss(const VectorXd& beta) const;

 private:
  double prior_precision(Index j, double tau2) const { return selectable(j) ? 1.0 / tau2 : 0.0; }

  MatrixXd x_;
  VectorXd y_;
  SpikeSlabHyper hyper_;
  std::optional<Index> intercept_;
  std::vector<std::string> names_;
  GapPenalty penalty_;
  bool penalized_;
  MatrixXd gram_;
  VectorXd xty_;
  double yty_;
  Index selectable_count_;
};

PosteriorDraws run_gibbs(const DesignMatrix& x, const VectorXd& y, const SpikeSlabHyper& hyper,
                         std::uint64_t chain = 0);
PosteriorDraws run_gibbs(const SectorDataset& d, const SpikeSlabHyper& hyper, std::uint64_t chain = 0);

/// Throws kEmptyDraws.
VectorXd posterior_mean_coefficients(const PosteriorDraws& draws);
VectorXd inclusion_probabilities(const PosteriorDraws& draws);

struct CredibleInterval {
  double low = 0.0;
  double high = 0.0;
};

/// Equal-tailed intervals from linearly interpolated sample quantiles.
std::vector<CredibleInterval> credible_intervals(const PosteriorDraws& draws, double level = 0.95);
double sample_quantile(std::vector<double> values, double q);

LinearPredictor posterior_mean_predictor(const PosteriorDraws& draws);

}  // namespace kivafair
