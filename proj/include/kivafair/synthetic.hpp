#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "kivafair/data_model.hpp"
#include "kivafair/ingestion.hpp"

namespace kivafair {

/// Which model is denied the hidden quadratic feature h = x1^2 - 1.
enum class Misspecification { kNone, kOutcome, kPropensity, kBoth };

std::string_view misspecification_name(Misspecification m);
Misspecification parse_misspecification(std::string_view text);

struct SyntheticSpec {
  Index n = 1000;
  Index p = 3;
  VectorXd true_beta;          // size p
  std::vector<Index> sparsity_support;  // empty = every coefficient of true_beta is used
  double noise_sd = 1.0;
  double intercept = 0.0;
  double treatment_effect = 0.0;
  VectorXd propensity_coefs;   // size p, or empty for zeros
  double propensity_intercept = 0.0;
  Misspecification misspecification = Misspecification::kNone;
  double hidden_outcome_coef = 3.0;
  double hidden_propensity_coef = 0.6;
  double group_shift = 0.0;      // added to the first `shifted_features` columns of treated rows
  Index shifted_features = 0;
  std::uint64_t seed = 1;
};

/// Throws kInvalidSpec.
void validate(const SyntheticSpec& spec);

/// Copy of `spec` whose seed is the replication's own substream.
SyntheticSpec replication(const SyntheticSpec& spec, std::uint64_t index);

struct RegressionSample {
  MatrixXd x;
  VectorXd y;
  VectorXd beta;  // true_beta restricted to the support
};

/// X has independent N(0,1) columns; y = intercept + X beta + noise.
RegressionSample generate_regression(const SyntheticSpec& spec);

struct CausalSample {
  SectorDataset data;     // intercept + x1..xp, unscaled
  VectorXd propensity;    // true P(W = 1 | X)
  VectorXd hidden;        // h_i
  int attempts = 1;
};

/// W ~ Bernoulli(sigmoid(a0 + X a [+ g_p h])), Y = b0 + X b [+ g_o h] + tau W + e.
/// The hidden term enters the outcome when misspecification is kOutcome or
/// kBoth and the treatment model for kPropensity or kBoth; the returned design
/// never contains it. With group_shift set, treated rows have their first
/// shifted_features columns moved by group_shift after W is drawn, so the
/// features act as proxies for group membership. A draw with one empty arm is regenerated on the next
/// substream, up to 10 attempts (then kDegenerateTreatment).
CausalSample generate_causal(const SyntheticSpec& spec);

/// Generator for a complete set of Kiva-shaped input files.
struct BundleSpec {
  Index loans = 1500;
  int borrower_countries = 24;
  int lender_countries = 6;
  double base_days = 20.0;
  double noise_sd = 4.0;
  std::array<double, kSectorCount> sector_effects{};  // added to funding days
  double confounding = 0.0;  // tilts sector membership towards high-internet countries
  std::uint64_t seed = 1;
};

/// Writes loans.csv, indicators.csv, distances.csv, migrants.csv and
/// colonization.csv into `dir` (created if needed).
InputPaths write_synthetic_inputs(const BundleSpec& spec, const std::filesystem::path& dir);

/// A biased bundle: strong sector effects correlated with country covariates.
BundleSpec biased_bundle_spec(std::uint64_t seed);

}  // namespace kivafair
