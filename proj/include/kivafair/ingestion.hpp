#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kivafair/data_model.hpp"

namespace kivafair {

/// Maps user CSV headers onto canonical column names, per file. File keys are
/// "loans", "indicators", "distances", "migrants" and "colonization".
struct SchemaManifest {
  std::map<std::string, std::map<std::string, std::string>> renames;

  static SchemaManifest load(const std::filesystem::path& json_path);
  std::string canonical(const std::string& file, const std::string& header) const;
};

struct RowError {
  std::size_t row = 0;  // 1-based data row (header excluded)
  std::string field;
  std::string message;
};

struct LoanLoadResult {
  std::vector<LoanRecord> loans;
  std::vector<RowError> errors;
  std::size_t rows_read = 0;
  std::size_t distinct_languages = 0;
};

/// Parses loans.csv. Missing or malformed mandatory fields reject the row
/// with its index; a header that lacks a canonical column throws
/// kSchemaMismatch; a missing file throws kFileNotFound.
LoanLoadResult load_loans(const std::filesystem::path& path, const SchemaManifest* manifest = nullptr);

/// Accepts "YYYY-MM-DD", "YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z|+HH:MM|-HH:MM]".
std::optional<Timestamp> parse_timestamp(std::string_view text);

struct RawTables {
  std::vector<LoanRecord> loans;
  std::map<std::string, CountryIndicators> indicators;
  std::map<std::pair<std::string, std::string>, double> distances;   // key sorted
  std::map<std::pair<std::string, std::string>, double> migrants;    // (origin, host)
  std::map<std::pair<std::string, std::string>, bool> colonization;  // (colonized, colonizer)

  void set_distance(const std::string& a, const std::string& b, double km);
  std::optional<double> distance(const std::string& a, const std::string& b) const;
  std::optional<double> migrant_count(const std::string& origin, const std::string& host) const;
  bool colonized_by(const std::string& colonized, const std::string& colonizer) const;
  const CountryIndicators* find_indicators(const std::string& country) const;
};

struct InputPaths {
  std::filesystem::path loans;
  std::filesystem::path indicators;
  std::filesystem::path distances;
  std::filesystem::path migrants;
  std::filesystem::path colonization;
  std::optional<std::filesystem::path> manifest;
};

struct TablesLoadResult {
  RawTables tables;
  std::vector<RowError> loan_errors;
  std::size_t loan_rows_read = 0;
  std::size_t distinct_languages = 0;
};

/// Loads all five files. Malformed rows in the auxiliary tables throw
/// kRowParseError with file and row context.
TablesLoadResult load_tables(const InputPaths& paths);

/// Mean distance / migrants / GDP difference over every (borrower, lender)
/// pair; colonization from one pair picked with a generator keyed on
/// (seed, loan_id). Throws kMissingCountryData naming country and table.
PairFeatures derive_pair_features(const LoanRecord& loan, const RawTables& tables, std::uint64_t seed);

inline constexpr int kBaseFeatureCount = 15;
/// Column order of the base covariates (after the intercept).
const std::array<std::string, kBaseFeatureCount>& base_feature_names();
/// True for {0,1} covariates, which are never standardized.
const std::array<bool, kBaseFeatureCount>& base_feature_is_binary();
/// Loan attributes available on the platform itself.
const std::vector<std::string>& loan_attribute_names();

inline constexpr const char* kInterceptName = "intercept";

struct LoanFeatureRow {
  std::string loan_id;
  Sector sector = Sector::kAgriculture;
  std::string borrower_country;
  double funding_days = 0.0;
  std::array<double, kBaseFeatureCount> features{};
};

struct DropRecord {
  std::string loan_id;
  ErrorCode reason = ErrorCode::kMissingCountryData;
  std::string detail;
};

struct FeatureTable {
  std::vector<LoanFeatureRow> rows;
  std::vector<DropRecord> dropped;
};

/// Per-loan derivation; independent of `threads` and row order.
FeatureTable derive_features(const std::vector<LoanRecord>& loans, const RawTables& tables, std::uint64_t seed,
                             unsigned threads = 1);

struct SectorEncoding {
  enum class Kind { kNone, kFullDummy, kBinary };
  Kind kind = Kind::kNone;
  Sector sector = Sector::kAgriculture;

  static SectorEncoding none() { return {}; }
  static SectorEncoding full_dummy() { return {Kind::kFullDummy, Sector::kAgriculture}; }
  static SectorEncoding binary(Sector s) { return {Kind::kBinary, s}; }
};

inline constexpr Sector kReferenceSector = Sector::kAgriculture;
std::string sector_column_name(Sector s);

/// Intercept, 15 base covariates, then the sector encoding. Numeric columns
/// are standardized on `fit_rows` (all rows when empty).
DesignMatrix build_design_matrix(const FeatureTable& table, SectorEncoding encoding,
                                 const std::vector<Index>& fit_rows = {});

/// Derives features and builds the design. Throws kEmptyInput on no loans
/// and kMissingCountryData when every loan was dropped.
DesignMatrix build_design_matrix(const std::vector<LoanRecord>& loans, const RawTables& tables,
                                 SectorEncoding encoding, std::uint64_t seed);

/// y = funding days, w = [sector == s]. The sector indicator is only part of
/// X when `include_indicator` is set.
SectorDataset build_sector_dataset(const FeatureTable& table, Sector s, bool include_indicator = false);

struct SplitResult {
  SectorDataset train;
  SectorDataset test;
  std::vector<Index> train_rows;
  std::vector<Index> test_rows;
};

/// Seeded row partition with |train| = round(fraction * n). Numeric columns
/// are re-standardized with statistics fitted on the training rows only.
SplitResult train_test_split(const SectorDataset& d, double train_fraction, std::uint64_t seed);

/// Seeded partition of row indices only (sorted ascending on each side).
std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n, double train_fraction, std::uint64_t seed);

/// Same-scaling refit helper: standardizes numeric columns of `d` using
/// statistics fitted on `fit_rows`.
DesignMatrix refit_scaling(const DesignMatrix& d, const std::vector<Index>& fit_rows);

void write_bundle(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_bundle(const std::filesystem::path& path);

struct LoanSummary {
  std::size_t loans = 0;
  std::size_t lender_countries = 0;
  std::size_t borrower_countries = 0;
  std::size_t languages = 0;
  double mean_loan_amount = 0.0;
  double mean_funding_days = 0.0;
  double sd_funding_days = 0.0;
  std::array<std::size_t, kSectorCount> sector_counts{};
};

/// Summary over kept rows; lender countries come from the matching loans.
LoanSummary summarize(const FeatureTable& table, const std::vector<LoanRecord>& loans,
                      std::size_t distinct_languages);

}  // namespace kivafair
