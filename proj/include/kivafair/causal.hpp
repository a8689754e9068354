#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "kivafair/data_model.hpp"
#include "kivafair/ingestion.hpp"
#include "kivafair/linear_models.hpp"
#include "kivafair/spike_slab.hpp"

namespace kivafair {

/// Difference in group means; SE sqrt(s1^2/n1 + s0^2/n0) with sample sds.
AteResult ate_naive(const VectorXd& y, const VectorXd& w, std::optional<Sector> sector = std::nullopt);

/// Separate OLS fits on treated and control rows; the estimate averages
/// X(beta1 - beta0) over all rows.
AteResult ate_baseline(const SectorDataset& d);

struct OutcomePair {
  LinearPredictor mu1;  // fitted on treated rows
  LinearPredictor mu0;  // fitted on control rows
};

struct DreResult {
  AteResult ate;
  VectorXd influence;  // IC_i, sums to zero
};

/// Augmented inverse-propensity-weighted estimate with the empirical
/// sandwich SE sigma / sqrt(n), sigma^2 = mean(IC^2). Propensities are
/// clipped to [clip, 1 - clip].
DreResult ate_dre(const VectorXd& y, const VectorXd& w, const VectorXd& mu1, const VectorXd& mu0,
                  const VectorXd& propensity, std::optional<Sector> sector = std::nullopt,
                  double clip = kPropensityClip);
DreResult ate_dre(const SectorDataset& d, const OutcomePair& outcome, const LogisticFit& propensity);

/// Flags a sector whose DRE and naive estimates disagree by more than twice
/// their summed standard errors.
bool substantial_divergence(const AteResult& naive, const AteResult& dre);

enum class DreRows { kAll, kTest };

struct StudyConfig {
  double train_fraction = 0.7;
  SpikeSlabHyper hyper;
  std::uint64_t seed = 20100101;
  DreRows dre_rows = DreRows::kAll;
  LogisticOptions logistic;
};

struct SectorStudyResult {
  Sector sector = Sector::kAgriculture;
  Index n_treated = 0;
  Index n_control = 0;
  double rmse_lr_treated = 0.0;
  double rmse_ssr_treated = 0.0;
  double rmse_lr_control = 0.0;
  double rmse_ssr_control = 0.0;
  double pscore_f1 = 0.0;
  double pscore_accuracy = 0.0;
  AteResult naive;
  AteResult baseline;
  AteResult dre;
  bool flagged = false;
  std::optional<std::string> error;  // set when the study failed; other fields undefined
};

/// Seed for the per-sector job, independent of scheduling order.
std::uint64_t sector_seed(std::uint64_t master, Sector s);

/// Splits 70/30, fits LR and SSR outcome models per group plus a logistic
/// propensity model on the training rows, scores them on the held-out rows
/// and reports naive, baseline and DRE(SSR) estimates.
SectorStudyResult run_sector_study(const SectorDataset& d, const StudyConfig& config);
SectorStudyResult run_sector_study(const FeatureTable& data, Sector s, const StudyConfig& config);

}  // namespace kivafair
