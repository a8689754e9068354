#include "kivafair/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <thread>

#include "kivafair/csv.hpp"
#include "kivafair/serialization.hpp"

namespace kivafair {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<Sector> RunConfig::selected_sectors() const {
  if (sectors.empty()) return {all_sectors().begin(), all_sectors().end()};
  std::vector<Sector> out;
  for (Sector s : all_sectors())
    if (std::find(sectors.begin(), sectors.end(), s) != sectors.end()) out.push_back(s);
  return out;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

DreRows parse_dre_rows(const std::string& s) {
  if (s == "all") return DreRows::kAll;
  if (s == "test") return DreRows::kTest;
  throw Error(ErrorCode::kInvalidArgument, "dre_rows must be 'all' or 'test'");
}

template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::string fmt(double v) { return csv::format_double(v); }

}  // namespace

RunConfig config_from_json(const json& j, const fs::path& base_dir, RunConfig c) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "inputs") {
      for (const auto& [name, p] : v.items()) {
        const fs::path path = resolve(base_dir, p.get<std::string>());
        if (name == "loans") c.inputs.loans = path;
        else if (name == "indicators") c.inputs.indicators = path;
        else if (name == "distances") c.inputs.distances = path;
        else if (name == "migrants") c.inputs.migrants = path;
        else if (name == "colonization") c.inputs.colonization = path;
        else if (name == "manifest") c.inputs.manifest = path;
        else throw Error(ErrorCode::kInvalidArgument, "unknown input '" + name + "'");
      }
    } else if (key == "output_dir") {
      c.output_dir = resolve(base_dir, v.get<std::string>());
    } else if (key == "bundle") {
      c.bundle = resolve(base_dir, v.get<std::string>());
    } else if (key == "seed") {
      c.seed = v.get<std::uint64_t>();
    } else if (key == "train_fraction") {
      c.train_fraction = v.get<double>();
    } else if (key == "hyper") {
      c.hyper = hyper_from_json(v, c.hyper);
    } else if (key == "lambda") {
      c.lambda = v.get<double>();
    } else if (key == "sectors") {
      c.sectors.clear();
      if (v.is_string() && v.get<std::string>() == "all") continue;
      for (const auto& s : v) c.sectors.push_back(sector_from_string(s.get<std::string>()));
    } else if (key == "paper_literal_fair") {
      c.paper_literal_fair = v.get<bool>();
    } else if (key == "fair_mode") {
      c.fair_mode = parse_fair_mode(v.get<std::string>());
    } else if (key == "dre_rows") {
      c.dre_rows = parse_dre_rows(v.get<std::string>());
    } else if (key == "threads") {
      c.threads = v.get<unsigned>();
    } else if (key == "strict") {
      c.strict = v.get<bool>();
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
    }
  }
  c.hyper.seed = c.seed;
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json to_json(const RunConfig& c) {
  json inputs{{"loans", c.inputs.loans.generic_string()},
              {"indicators", c.inputs.indicators.generic_string()},
              {"distances", c.inputs.distances.generic_string()},
              {"migrants", c.inputs.migrants.generic_string()},
              {"colonization", c.inputs.colonization.generic_string()}};
  if (c.inputs.manifest) inputs["manifest"] = c.inputs.manifest->generic_string();
  json hyper = to_json(c.hyper);
  hyper.erase("seed");
  hyper.erase("lambda");
  json sectors = json::array();
  for (Sector s : c.selected_sectors()) sectors.push_back(sector_name(s));
  return json{{"inputs", inputs},
              {"output_dir", c.output_dir.generic_string()},
              {"bundle", c.bundle_path().generic_string()},
              {"seed", c.seed},
              {"train_fraction", c.train_fraction},
              {"hyper", hyper},
              {"lambda", c.lambda},
              {"sectors", sectors},
              {"paper_literal_fair", c.paper_literal_fair},
              {"fair_mode", fair_mode_name(c.effective_fair_mode())},
              {"dre_rows", c.dre_rows == DreRows::kAll ? "all" : "test"},
              {"threads", c.threads},
              {"strict", c.strict}};
}

void validate(const RunConfig& c) {
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "train_fraction must lie in (0,1)");
  }
  if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  if (c.threads < 1) throw Error(ErrorCode::kInvalidArgument, "threads must be >= 1");
  validate(c.hyper);
}

void apply_environment(RunConfig& c) {
  if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) c.output_dir = dir;
}

void write_resolved_config(const RunConfig& c) { write_json(c.output_dir / "resolved_config.json", to_json(c)); }

std::vector<double> funding_days(const FeatureTable& table) {
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) out.push_back(r.funding_days);
  return out;
}

VectorXd funding_vector(const FeatureTable& table) {
  const auto v = funding_days(table);
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

IngestOutput run_ingest(const RunConfig& c) {
  TablesLoadResult loaded = load_tables(c.inputs);
  if (c.strict && !loaded.loan_errors.empty()) {
    throw Error(ErrorCode::kRowParseError, loaded.loan_errors.front().message);
  }
  IngestOutput out;
  out.table = derive_features(loaded.tables.loans, loaded.tables, c.seed, c.threads);
  out.report.rows_read = loaded.loan_rows_read;
  out.report.rows_kept = out.table.rows.size();
  out.report.parse_errors = std::move(loaded.loan_errors);
  out.report.dropped = out.table.dropped;
  out.report.summary = summarize(out.table, loaded.tables.loans, loaded.distinct_languages);
  return out;
}

json to_json(const IngestReport& r) {
  json drops = json::array();
  std::map<std::string, std::size_t> by_reason;
  for (const auto& e : r.parse_errors) {
    drops.push_back({{"row", e.row}, {"reason", to_string(ErrorCode::kRowParseError)}, {"detail", e.message}});
    ++by_reason[std::string(to_string(ErrorCode::kRowParseError))];
  }
  for (const auto& d : r.dropped) {
    drops.push_back({{"loan_id", d.loan_id}, {"reason", to_string(d.reason)}, {"detail", d.detail}});
    ++by_reason[std::string(to_string(d.reason))];
  }
  const LoanSummary& s = r.summary;
  json sectors = json::object();
  for (Sector sec : all_sectors()) sectors[std::string(sector_name(sec))] = s.sector_counts[static_cast<std::size_t>(sec)];
  return json{{"rows_read", r.rows_read},
              {"rows_kept", r.rows_kept},
              {"rows_dropped", r.parse_errors.size() + r.dropped.size()},
              {"dropped_by_reason", by_reason},
              {"dropped", drops},
              {"summary",
               {{"loans", s.loans},
                {"lender_countries", s.lender_countries},
                {"borrower_countries", s.borrower_countries},
                {"languages", s.languages},
                {"mean_loan_amount", s.mean_loan_amount},
                {"mean_funding_days", s.mean_funding_days},
                {"sd_funding_days", s.sd_funding_days},
                {"sector_counts", sectors}}}};
}

void write_ingest_outputs(const RunConfig& c, const IngestOutput& out) {
  fs::create_directories(c.bundle_path().has_parent_path() ? c.bundle_path().parent_path() : fs::path("."));
  write_bundle(out.table, c.bundle_path());
  write_json(c.output_dir / "ingest_report.json", to_json(out.report));
  const LoanSummary& s = out.report.summary;
  std::string text = "statistic,value\n";
  text += "loans," + std::to_string(s.loans) + '\n';
  text += "lender_countries," + std::to_string(s.lender_countries) + '\n';
  text += "borrower_countries," + std::to_string(s.borrower_countries) + '\n';
  text += "languages," + std::to_string(s.languages) + '\n';
  text += "mean_loan_amount," + fmt(s.mean_loan_amount) + '\n';
  text += "mean_funding_days," + fmt(s.mean_funding_days) + '\n';
  text += "sd_funding_days," + fmt(s.sd_funding_days) + '\n';
  for (Sector sec : all_sectors()) {
    text += csv::join({"sector:" + std::string(sector_name(sec)),
                       std::to_string(s.sector_counts[static_cast<std::size_t>(sec)])}) +
            '\n';
  }
  write_text(c.output_dir / "summary.csv", text);
}

SectorEncoding parse_model(std::string_view model) {
  if (model == "M1") return SectorEncoding::none();
  if (model == "M2") return SectorEncoding::full_dummy();
  if (model.rfind("binary:", 0) == 0) return SectorEncoding::binary(sector_from_string(model.substr(7)));
  throw Error(ErrorCode::kInvalidArgument, "model must be M1, M2 or binary:<sector>");
}

std::string model_slug(std::string_view model) {
  std::string out;
  for (char ch : model) {
    if (std::isalnum(static_cast<unsigned char>(ch))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    else if (!out.empty() && out.back() != '_') out += '_';
  }
  return out;
}

OlsFit run_ols(const FeatureTable& table, const SectorEncoding& encoding) {
  return fit_ols(build_design_matrix(table, encoding), funding_vector(table));
}

void write_ols_outputs(const RunConfig& c, std::string_view model, const OlsFit& fit) {
  const std::string slug = "ols_" + model_slug(model);
  write_text(c.output_dir / (slug + ".csv"), coefficient_csv(fit));
  json j = to_json(fit);
  j["model"] = std::string(model);
  write_json(c.output_dir / (slug + ".json"), j);
}

StudyConfig study_config(const RunConfig& c) {
  StudyConfig s;
  s.train_fraction = c.train_fraction;
  s.hyper = c.hyper;
  s.seed = c.seed;
  s.dre_rows = c.dre_rows;
  return s;
}

std::vector<SectorStudyResult> run_ate(const FeatureTable& table, const RunConfig& c) {
  const auto sectors = c.selected_sectors();
  const StudyConfig sc = study_config(c);
  std::vector<SectorStudyResult> out(sectors.size());
  parallel_for(sectors.size(), c.threads, [&](std::size_t k) {
    try {
      out[k] = run_sector_study(table, sectors[k], sc);
    } catch (const std::exception& e) {
      out[k] = SectorStudyResult{};
      out[k].error = e.what();
    }
    out[k].sector = sectors[k];
  });
  return out;
}

void write_ate_outputs(const RunConfig& c, const std::vector<SectorStudyResult>& rows) {
  std::vector<AteResult> long_rows;
  std::string wide =
      "sector,n_treated,n_control,rmse_lr_treated,rmse_ssr_treated,rmse_lr_control,rmse_ssr_control,pscore_f1,"
      "pscore_accuracy,naive,naive_se,baseline,baseline_se,dre,dre_se,dre_ci_low,dre_ci_high,flagged,error\n";
  json report = json::array();
  for (const auto& r : rows) {
    report.push_back(to_json(r));
    std::vector<std::string> f = {std::string(sector_name(r.sector)), std::to_string(r.n_treated),
                                  std::to_string(r.n_control)};
    if (r.error) {
      f.resize(18);
      f.push_back(*r.error);
    } else {
      long_rows.push_back(r.naive);
      long_rows.push_back(r.baseline);
      long_rows.push_back(r.dre);
      for (double v : {r.rmse_lr_treated, r.rmse_ssr_treated, r.rmse_lr_control, r.rmse_ssr_control, r.pscore_f1,
                       r.pscore_accuracy, r.naive.estimate, r.naive.std_error, r.baseline.estimate,
                       r.baseline.std_error, r.dre.estimate, r.dre.std_error, r.dre.ci_low, r.dre.ci_high}) {
        f.push_back(fmt(v));
      }
      f.push_back(r.flagged ? "1" : "0");
      f.push_back("");
    }
    wide += csv::join(f) + '\n';
  }
  write_text(c.output_dir / "ate.csv", ate_csv(long_rows));
  write_text(c.output_dir / "ate_sectors.csv", wide);
  write_json(c.output_dir / "ate_report.json", json{{"sectors", report}});
}

FairSectorResult run_fair_sector(const FeatureTable& table, Sector s, const RunConfig& c) {
  FairSectorResult r;
  r.sector = s;
  const std::uint64_t seed = sector_seed(c.seed, s);
  const SectorDataset d = build_sector_dataset(table, s, true);
  const SplitResult split = train_test_split(d, c.train_fraction, derive_seed(seed, 1));
  const DesignMatrix all_rows = refit_scaling(d.x, split.train_rows);

  const OlsFit lr = fit_ols(split.train.x, split.train.y);
  r.rmse_lr = rmse(split.test.y, predict(lr, split.test.x));
  r.gap_lr = group_gap(all_rows, d.w, lr.coefficients);

  std::vector<std::string> la = {kInterceptName};
  for (const auto& name : loan_attribute_names()) la.push_back(name);
  const OlsFit lr_la = fit_ols(split.train.x.select_columns(la), split.train.y);
  r.rmse_lr_loan_attributes = rmse(split.test.y, predict(lr_la, split.test.x.select_columns(la)));

  SpikeSlabHyper h = c.hyper;
  h.seed = derive_seed(seed, 2);
  const PosteriorDraws ssr = run_gibbs(split.train, h);
  const LinearPredictor ssr_mean = posterior_mean_predictor(ssr);
  r.rmse_ssr = rmse(split.test.y, predict(ssr_mean, split.test.x));
  r.gap_ssr = group_gap(all_rows, d.w, ssr_mean.coefficients);

  const FairnessConstraint constraint = build_constraint(split.train.x, split.train.w, c.lambda, s);
  const PosteriorDraws fair =
      run_fair_gibbs(split.train.x, split.train.y, constraint, h, c.effective_fair_mode());
  const LinearPredictor fair_mean = posterior_mean_predictor(fair);
  r.rmse_ssr_regularized = rmse(split.test.y, predict(fair_mean, split.test.x));
  r.gap_ssr_regularized = group_gap(all_rows, d.w, fair_mean.coefficients);
  return r;
}

std::vector<FairSectorResult> run_fair(const FeatureTable& table, const RunConfig& c) {
  const auto sectors = c.selected_sectors();
  std::vector<FairSectorResult> out(sectors.size());
  parallel_for(sectors.size(), c.threads, [&](std::size_t k) {
    try {
      out[k] = run_fair_sector(table, sectors[k], c);
    } catch (const std::exception& e) {
      out[k] = FairSectorResult{};
      out[k].error = e.what();
    }
    out[k].sector = sectors[k];
  });
  return out;
}

void write_fair_outputs(const RunConfig& c, const std::vector<FairSectorResult>& rows) {
  std::string text = "sector,rmse_lr,rmse_lr_loan_attributes,rmse_ssr,rmse_ssr_regularized,gap_lr,gap_ssr,"
                     "gap_ssr_regularized,error\n";
  json report = json::array();
  for (const auto& r : rows) {
    std::vector<std::string> f = {std::string(sector_name(r.sector))};
    json j{{"sector", sector_name(r.sector)}};
    if (r.error) {
      f.resize(8);
      f.push_back(*r.error);
      j["error"] = *r.error;
    } else {
      for (double v : {r.rmse_lr, r.rmse_lr_loan_attributes, r.rmse_ssr, r.rmse_ssr_regularized, r.gap_lr, r.gap_ssr,
                       r.gap_ssr_regularized}) {
        f.push_back(fmt(v));
      }
      f.push_back("");
      j["rmse"] = {{"lr", r.rmse_lr},
                   {"lr_loan_attributes", r.rmse_lr_loan_attributes},
                   {"ssr", r.rmse_ssr},
                   {"ssr_regularized", r.rmse_ssr_regularized}};
      j["gap"] = {{"lr", r.gap_lr}, {"ssr", r.gap_ssr}, {"ssr_regularized", r.gap_ssr_regularized}};
    }
    text += csv::join(f) + '\n';
    report.push_back(j);
  }
  write_text(c.output_dir / "fair.csv", text);
  write_json(c.output_dir / "fair_report.json",
             json{{"lambda", c.lambda}, {"mode", fair_mode_name(c.effective_fair_mode())}, {"sectors", report}});
}

InputPaths run_synth(const BundleSpec& spec, const fs::path& dir) {
  InputPaths paths = write_synthetic_inputs(spec, dir);
  json config{{"inputs",
               {{"loans", "loans.csv"},
                {"indicators", "indicators.csv"},
                {"distances", "distances.csv"},
                {"migrants", "migrants.csv"},
                {"colonization", "colonization.csv"}}},
              {"output_dir", "out"},
              {"seed", spec.seed}};
  write_json(dir / "config.json", config);
  return paths;
}

}  // namespace kivafair
