#include "kivafair/causal.hpp"

#include <cmath>

namespace kivafair {

namespace {

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void check_groups(const VectorXd& w) {
  const Index nt = static_cast<Index>((w.array() > 0.5).count());
  if (nt == 0) throw Error(ErrorCode::kEmptyTreatmentGroup, "no treated rows");
  if (nt == w.size()) throw Error(ErrorCode::kEmptyControlGroup, "no control rows");
}

}  // namespace

AteResult ate_naive(const VectorXd& y, const VectorXd& w, std::optional<Sector> sector) {
  if (y.size() != w.size()) throw Error(ErrorCode::kLengthMismatch, "|y| != |w|");
  check_groups(w);
  std::vector<double> treated, control;
  for (Index i = 0; i < y.size(); ++i) (w[i] > 0.5 ? treated : control).push_back(y[i]);
  const double est = mean_of(treated) - mean_of(control);
  const double se = std::sqrt(sample_variance(treated) / static_cast<double>(treated.size()) +
                              sample_variance(control) / static_cast<double>(control.size()));
  return AteResult::with_normal_ci(AteMethod::kNaive, est, se, sector);
}

AteResult ate_baseline(const SectorDataset& d) {
  validate_sector_dataset(d);
  const SectorDataset treated = d.select_rows(d.treated_rows());
  const SectorDataset control = d.select_rows(d.control_rows());
  const OlsFit fit1 = fit_ols(treated.x, treated.y);
  const OlsFit fit0 = fit_ols(control.x, control.y);

  const VectorXd effect = d.x.values * (fit1.coefficients - fit0.coefficients);
  const double est = effect.mean();

  auto residuals = [](const SectorDataset& g, const OlsFit& f) {
    const VectorXd r = g.y - g.x.values * f.coefficients;
    return std::vector<double>(r.data(), r.data() + r.size());
  };
  const double nt = static_cast<double>(treated.rows());
  const double nc = static_cast<double>(control.rows());
  const double se = std::sqrt(sample_variance(residuals(treated, fit1)) / (nt - 1.0) +
                              sample_variance(residuals(control, fit0)) / (nc - 1.0));
  return AteResult::with_normal_ci(AteMethod::kBaselineLR, est, se, d.sector);
}

DreResult ate_dre(const VectorXd& y, const VectorXd& w, const VectorXd& mu1, const VectorXd& mu0,
                  const VectorXd& propensity, std::optional<Sector> sector, double clip) {
  const Index n = y.size();
  if (w.size() != n || mu1.size() != n || mu0.size() != n || propensity.size() != n) {
    throw Error(ErrorCode::kLengthMismatch, "DRE inputs differ in length");
  }
  check_groups(w);
  const VectorXd e = clip_probabilities(propensity, clip);
  VectorXd term(n);
  for (Index i = 0; i < n; ++i) {
    term[i] = w[i] * (y[i] - mu1[i]) / e[i] - (1.0 - w[i]) * (y[i] - mu0[i]) / (1.0 - e[i]) + mu1[i] - mu0[i];
  }
  const double tau = term.mean();
  DreResult out;
  out.influence = term.array() - tau;
  const double sigma = std::sqrt(out.influence.squaredNorm() / static_cast<double>(n));
  out.ate = AteResult::with_normal_ci(AteMethod::kDreSsr, tau, sigma / std::sqrt(static_cast<double>(n)), sector);
  return out;
}

DreResult ate_dre(const SectorDataset& d, const OutcomePair& outcome, const LogisticFit& propensity) {
  validate_sector_dataset(d);
  return ate_dre(d.y, d.w, predict(outcome.mu1, d.x), predict(outcome.mu0, d.x), predict(propensity, d.x), d.sector);
}

bool substantial_divergence(const AteResult& naive, const AteResult& dre) {
  return std::abs(dre.estimate - naive.estimate) > 2.0 * (dre.std_error + naive.std_error);
}

std::uint64_t sector_seed(std::uint64_t master, Sector s) {
  return derive_seed(master, 1000 + static_cast<std::uint64_t>(s));
}

SectorStudyResult run_sector_study(const SectorDataset& d, const StudyConfig& config) {
  validate_sector_dataset(d);
  SectorStudyResult r;
  if (d.sector) r.sector = *d.sector;
  r.n_treated = d.treated_count();
  r.n_control = d.control_count();

  const SplitResult split = train_test_split(d, config.train_fraction, derive_seed(config.seed, 1));
  const SectorDataset train_t = split.train.select_rows(split.train.treated_rows());
  const SectorDataset train_c = split.train.select_rows(split.train.control_rows());
  const SectorDataset test_t = split.test.select_rows(split.test.treated_rows());
  const SectorDataset test_c = split.test.select_rows(split.test.control_rows());

  const OlsFit lr1 = fit_ols(train_t.x, train_t.y);
  const OlsFit lr0 = fit_ols(train_c.x, train_c.y);

  SpikeSlabHyper h1 = config.hyper;
  h1.seed = derive_seed(config.seed, 2);
  SpikeSlabHyper h0 = config.hyper;
  h0.seed = derive_seed(config.seed, 3);
  const LinearPredictor ssr1 = posterior_mean_predictor(run_gibbs(train_t, h1));
  const LinearPredictor ssr0 = posterior_mean_predictor(run_gibbs(train_c, h0));

  r.rmse_lr_treated = rmse(test_t.y, predict(lr1, test_t.x));
  r.rmse_ssr_treated = rmse(test_t.y, predict(ssr1, test_t.x));
  r.rmse_lr_control = rmse(test_c.y, predict(lr0, test_c.x));
  r.rmse_ssr_control = rmse(test_c.y, predict(ssr0, test_c.x));

  const LogisticFit pscore = fit_logistic(split.train.x, split.train.w, config.logistic);
  const ClassificationMetrics cm = classification_metrics(split.test.w, predict(pscore, split.test.x));
  r.pscore_f1 = cm.f1;
  r.pscore_accuracy = cm.accuracy;

  r.naive = ate_naive(d.y, d.w, d.sector);
  r.baseline = ate_baseline(d);

  SectorDataset dre_rows = d;
  dre_rows.x = refit_scaling(d.x, split.train_rows);
  if (config.dre_rows == DreRows::kTest) dre_rows = split.test;
  r.dre = ate_dre(dre_rows, OutcomePair{ssr1, ssr0}, pscore).ate;
  r.flagged = substantial_divergence(r.naive, r.dre);
  return r;
}

SectorStudyResult run_sector_study(const FeatureTable& data, Sector s, const StudyConfig& config) {
  StudyConfig c = config;
  c.seed = sector_seed(config.seed, s);
  return run_sector_study(build_sector_dataset(data, s), c);
}

}  // namespace kivafair
