#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "kivafair/error.hpp"

namespace kivafair {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Loan sectors in canonical report order.
enum class Sector : int {
  kManufacturing = 0,
  kTransportation,
  kClothing,
  kPersonalUse,
  kHousing,
  kFood,
  kArts,
  kRetail,
  kConstruction,
  kAgriculture,
  kServices,
  kEducation,
};

inline constexpr int kSectorCount = 12;

const std::array<Sector, kSectorCount>& all_sectors();
std::string_view sector_name(Sector s);
/// Case-insensitive; accepts "Personal Use", "personal_use" and "personaluse".
std::optional<Sector> parse_sector(std::string_view text);
/// Throws kUnknownSector.
Sector sector_from_string(std::string_view text);

using Timestamp = std::chrono::sys_seconds;

/// Funding time in (fractional) days.
struct FundingTime {
  double days = 0.0;

  static FundingTime between(Timestamp posted, Timestamp funded);
};

struct LoanRecord {
  std::string loan_id;
  Sector sector = Sector::kAgriculture;
  bool currency_policy_shared = false;
  bool language_english = false;
  double loan_amount = 0.0;
  bool borrower_gender_female = false;
  Timestamp posted_at{};
  Timestamp funded_at{};
  std::string borrower_country;
  std::vector<std::string> lender_countries;

  FundingTime funding_time() const { return FundingTime::between(posted_at, funded_at); }
};

/// Throws kInvalidArgument if funded_at < posted_at, loan_amount < 0, or no lenders.
void validate(const LoanRecord& loan);

struct CountryIndicators {
  std::string country;
  int ease_of_business = 1;
  double loan_access = 0.0;
  double women_ratio = 0.0;
  double affordability = 0.0;
  double vc_finance = 0.0;
  double capacity_innovation = 0.0;
  double internet_penetration = 0.0;
  double gdp = 0.0;
};

void validate(const CountryIndicators& ind);

struct PairFeatures {
  bool colonization = false;
  double distance = 0.0;
  double migrants = 0.0;
  double gdp_difference = 0.0;
};

void validate(const PairFeatures& pf);

struct ColumnScaling {
  double mean = 0.0;
  double sd = 1.0;
};

/// Numeric feature matrix with per-column metadata. Binary and dummy columns
/// carry no scaling; numeric columns carry the (mean, sd) they were
/// standardized with.
struct DesignMatrix {
  MatrixXd values;
  std::vector<std::string> column_names;
  std::vector<std::optional<ColumnScaling>> scaling;
  std::optional<Index> intercept_index;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  /// Throws kColumnMismatch when absent.
  Index column(std::string_view name) const;
  std::optional<Index> find_column(std::string_view name) const;

  DesignMatrix select_rows(const std::vector<Index>& rows) const;
  DesignMatrix select_columns(const std::vector<std::string>& names) const;
  /// Undo standardization of the numeric columns.
  MatrixXd raw_values() const;
};

/// Checks metadata lengths and that unscaled non-intercept columns are {0,1}
/// valued. Throws kDimensionMismatch / kInvalidArgument.
void validate(const DesignMatrix& x);

/// Fits (mean, sample sd) on `fit_rows` of `raw` for every column flagged in
/// `standardize` and returns the scaling vector. Constant columns get sd = 1.
std::vector<std::optional<ColumnScaling>> fit_scaling(const MatrixXd& raw,
                                                      const std::vector<bool>& standardize,
                                                      const std::vector<Index>& fit_rows);
MatrixXd apply_scaling(const MatrixXd& raw, const std::vector<std::optional<ColumnScaling>>& scaling);

struct SectorDataset {
  DesignMatrix x;
  VectorXd y;
  VectorXd w;  // 0/1 treatment indicator
  std::optional<Sector> sector;

  Index rows() const { return y.size(); }
  Index treated_count() const;
  Index control_count() const;
  std::vector<Index> treated_rows() const;
  std::vector<Index> control_rows() const;
  SectorDataset select_rows(const std::vector<Index>& rows) const;
};

/// Throws kDimensionMismatch, kEmptyTreatmentGroup or kEmptyControlGroup.
void validate_sector_dataset(const SectorDataset& d);

struct SpikeSlabHyper {
  double a = 1.0;
  double b = 1.0;
  double alpha1 = 0.01;
  double alpha2 = 0.01;
  double s2 = 0.25;  // s = 1/2
  double theta_init = 0.5;
  int burn_in = 1000;
  int draws = 4000;
  std::uint64_t seed = 20100101;
  double lambda = 0.0;
};

void validate(const SpikeSlabHyper& h);

struct PosteriorDraws {
  MatrixXd beta;                                                       // draws x p
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> pi;      // draws x p
  VectorXd theta;
  VectorXd tau2;
  VectorXd sigma2;
  SpikeSlabHyper hyper;
  std::vector<std::string> column_names;

  Index draw_count() const { return beta.rows(); }
  Index feature_count() const { return beta.cols(); }
};

/// Spike exactness, parameter ranges and shape agreement.
void validate(const PosteriorDraws& d);

enum class AteMethod { kNaive, kBaselineLR, kDreSsr };

std::string_view method_name(AteMethod m);

inline constexpr double kZ975 = 1.959964;

struct AteResult {
  AteMethod method = AteMethod::kNaive;
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<Sector> sector;

  static AteResult with_normal_ci(AteMethod method, double estimate, double std_error,
                                  std::optional<Sector> sector = std::nullopt);
};

void validate(const AteResult& r);

}  // namespace kivafair
