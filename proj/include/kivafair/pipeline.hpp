#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kivafair/causal.hpp"
#include "kivafair/fair_spike_slab.hpp"
#include "kivafair/ingestion.hpp"
#include "kivafair/linear_models.hpp"
#include "kivafair/synthetic.hpp"

namespace kivafair {

inline constexpr const char* kOutputDirEnv = "KIVAFAIR_OUTPUT_DIR";

struct RunConfig {
  InputPaths inputs;
  std::filesystem::path output_dir = "kivafair-out";
  std::optional<std::filesystem::path> bundle;  // defaults to <output_dir>/bundle.csv
  std::uint64_t seed = 20100101;
  double train_fraction = 0.7;
  SpikeSlabHyper hyper;
  double lambda = kDefaultFairLambda;
  std::vector<Sector> sectors;  // empty = all twelve
  bool paper_literal_fair = false;
  FairMode fair_mode = FairMode::kBalancedGap;
  DreRows dre_rows = DreRows::kAll;
  unsigned threads = 1;
  bool strict = false;  // malformed loan rows abort ingestion instead of being dropped

  std::filesystem::path bundle_path() const { return bundle ? *bundle : output_dir / "bundle.csv"; }
  std::vector<Sector> selected_sectors() const;
  FairMode effective_fair_mode() const { return paper_literal_fair ? FairMode::kPaperLiteral : fair_mode; }
};

/// Relative input paths in a config file resolve against the file's directory.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);
/// Throws kInvalidArgument on out-of-range settings.
void validate(const RunConfig& c);
/// Applies KIVAFAIR_OUTPUT_DIR when set.
void apply_environment(RunConfig& c);
/// Writes <output_dir>/resolved_config.json.
void write_resolved_config(const RunConfig& c);

std::vector<double> funding_days(const FeatureTable& table);
VectorXd funding_vector(const FeatureTable& table);

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_kept = 0;
  std::vector<RowError> parse_errors;
  std::vector<DropRecord> dropped;
  LoanSummary summary;
};

struct IngestOutput {
  FeatureTable table;
  IngestReport report;
};

IngestOutput run_ingest(const RunConfig& c);
nlohmann::json to_json(const IngestReport& r);
/// bundle.csv, ingest_report.json and summary.csv.
void write_ingest_outputs(const RunConfig& c, const IngestOutput& out);

/// "M1" (no sector columns), "M2" (eleven dummies, Agriculture as reference)
/// or "binary:<Sector>".
SectorEncoding parse_model(std::string_view model);
std::string model_slug(std::string_view model);

OlsFit run_ols(const FeatureTable& table, const SectorEncoding& encoding);
void write_ols_outputs(const RunConfig& c, std::string_view model, const OlsFit& fit);

StudyConfig study_config(const RunConfig& c);
/// One entry per selected sector in canonical order; failures land in `error`.
std::vector<SectorStudyResult> run_ate(const FeatureTable& table, const RunConfig& c);
/// ate.csv (long form), ate_sectors.csv (one row per sector) and ate_report.json.
void write_ate_outputs(const RunConfig& c, const std::vector<SectorStudyResult>& rows);

struct FairSectorResult {
  Sector sector = Sector::kAgriculture;
  double rmse_lr = 0.0;
  double rmse_lr_loan_attributes = 0.0;
  double rmse_ssr = 0.0;
  double rmse_ssr_regularized = 0.0;
  double gap_lr = 0.0;
  double gap_ssr = 0.0;
  double gap_ssr_regularized = 0.0;
  std::optional<std::string> error;
};

/// Per-sector fairness comparison over the full dataset with the sector
/// indicator as a feature: sector membership is the protected group, RMSE is
/// measured on the held-out rows and prediction gaps over every row.
FairSectorResult run_fair_sector(const FeatureTable& table, Sector s, const RunConfig& c);
std::vector<FairSectorResult> run_fair(const FeatureTable& table, const RunConfig& c);
void write_fair_outputs(const RunConfig& c, const std::vector<FairSectorResult>& rows);

/// Writes the five input files plus a config.json pointing at them.
InputPaths run_synth(const BundleSpec& spec, const std::filesystem::path& dir);

}  // namespace kivafair
