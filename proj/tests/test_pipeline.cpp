#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <string>

#include "expect.hpp"
#include "kivafair/pipeline.hpp"
#include "kivafair/serialization.hpp"
#include "oracles.hpp"

using namespace kivafair;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kFixtures = KIVAFAIR_FIXTURES;

InputPaths fixture_inputs(const std::string& loans) {
  return {kFixtures / loans, kFixtures / "indicators.csv", kFixtures / "distances.csv", kFixtures / "migrants.csv",
          kFixtures / "colonization.csv", std::nullopt};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

RunConfig fast_config(const fs::path& out) {
  RunConfig c;
  c.output_dir = out;
  c.hyper.burn_in = 100;
  c.hyper.draws = 300;
  c.hyper.seed = c.seed;
  return c;
}

// Synthetic inputs ingested into a feature table with the written config.
FeatureTable synthetic_table(const BundleSpec& spec, const fs::path& dir) {
  run_synth(spec, dir);
  return run_ingest(load_run_config(dir / "config.json")).table;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + KIVAFAIR_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("run configuration from JSON") {
  const json j = {{"inputs",
                   {{"loans", "loans.csv"},
                    {"indicators", "/abs/indicators.csv"},
                    {"distances", "d.csv"},
                    {"migrants", "m.csv"},
                    {"colonization", "c.csv"}}},
                  {"output_dir", "out"},
                  {"seed", 42},
                  {"train_fraction", 0.6},
                  {"lambda", 0.3},
                  {"hyper", {{"burn_in", 10}, {"draws", 20}}},
                  {"sectors", {"Retail", "Arts"}},
                  {"fair_mode", "linear"}};
  const RunConfig c = config_from_json(j, "/base");
  CHECK(c.inputs.loans == fs::path("/base/loans.csv"));
  CHECK(c.inputs.indicators == fs::path("/abs/indicators.csv"));
  CHECK(c.output_dir == fs::path("/base/out"));
  CHECK(c.seed == 42);
  CHECK(c.hyper.seed == 42);
  CHECK(c.hyper.burn_in == 10);
  CHECK(c.train_fraction == 0.6);
  CHECK(c.lambda == 0.3);
  CHECK(c.selected_sectors() == (std::vector<Sector>{Sector::kArts, Sector::kRetail}));
  CHECK(c.effective_fair_mode() == FairMode::kLinear);
  CHECK(c.bundle_path() == fs::path("/base/out/bundle.csv"));

  RunConfig literal = c;
  literal.paper_literal_fair = true;
  CHECK(literal.effective_fair_mode() == FairMode::kPaperLiteral);
  CHECK(RunConfig{}.selected_sectors().size() == static_cast<std::size_t>(kSectorCount));

  CHECK(error_code_of([] { config_from_json(json{{"outptu_dir", "x"}}); }) == ErrorCode::kInvalidArgument);
  CHECK(error_code_of([] { config_from_json(json{{"sectors", {"Mining"}}}); }) == ErrorCode::kUnknownSector);

  const RunConfig back = config_from_json(to_json(c));
  CHECK(back.seed == c.seed);
  CHECK(back.lambda == c.lambda);
  CHECK(back.inputs.loans == c.inputs.loans);
  CHECK(back.hyper.draws == c.hyper.draws);
}

TEST_CASE("configuration validation and environment override") {
  RunConfig c;
  c.train_fraction = 1.0;
  CHECK(error_code_of([&] { validate(c); }) == ErrorCode::kInvalidArgument);
  c.train_fraction = 0.7;
  c.lambda = -1.0;
  CHECK(error_code_of([&] { validate(c); }) == ErrorCode::kInvalidArgument);

  RunConfig e;
  ::setenv(kOutputDirEnv, "/tmp/from-env", 1);
  apply_environment(e);
  ::unsetenv(kOutputDirEnv);
  CHECK(e.output_dir == fs::path("/tmp/from-env"));
  RunConfig untouched;
  apply_environment(untouched);
  CHECK(untouched.output_dir == fs::path("kivafair-out"));
}

TEST_CASE("ingest fixtures") {
  SUBCASE("five loans") {
    RunConfig c = fast_config(oracle::fresh_dir("ingest_5"));
    c.inputs = fixture_inputs("loans_5.csv");
    const IngestOutput out = run_ingest(c);
    CHECK(out.report.rows_read == 5);
    CHECK(out.report.rows_kept == 5);
    write_ingest_outputs(c, out);
    const json r = json::parse(slurp(c.output_dir / "ingest_report.json"));
    CHECK(r["rows_dropped"] == 0);
    CHECK(r["summary"]["loans"] == 5);
    CHECK(fs::exists(c.output_dir / "summary.csv"));
    CHECK(read_bundle(c.bundle_path()).rows.size() == 5);
  }
  SUBCASE("unknown country") {
    RunConfig c = fast_config(oracle::fresh_dir("ingest_unknown"));
    c.inputs = fixture_inputs("loans_unknown_country.csv");
    const IngestOutput out = run_ingest(c);
    CHECK(out.report.rows_kept == 4);
    REQUIRE(out.report.dropped.size() == 1);
    CHECK(out.report.dropped[0].reason == ErrorCode::kMissingCountryData);
    const json r = to_json(out.report);
    CHECK(r["rows_dropped"] == 1);
    CHECK(r["dropped_by_reason"]["MissingCountryData"] == 1);
  }
  SUBCASE("malformed row is dropped unless strict") {
    RunConfig c = fast_config(oracle::fresh_dir("ingest_strict"));
    c.inputs = fixture_inputs("loans_missing_funded.csv");
    const IngestOutput out = run_ingest(c);
    CHECK(out.report.parse_errors.size() == 1);
    c.strict = true;
    CHECK(error_code_of([&] { run_ingest(c); }) == ErrorCode::kRowParseError);
  }
}

TEST_CASE("OLS models on a synthetic bundle") {
  const fs::path dir = oracle::fresh_dir("ols_bundle");
  const FeatureTable table = synthetic_table(BundleSpec{}, dir);
  const OlsFit m1 = run_ols(table, parse_model("M1"));
  const OlsFit m2 = run_ols(table, parse_model("M2"));
  const OlsFit bin = run_ols(table, parse_model("binary:Retail"));
  CHECK(m1.coefficients.size() == 16);
  CHECK(m2.coefficients.size() == 27);
  CHECK(bin.coefficients.size() == 17);
  CHECK(model_slug("binary:Personal Use") == "binary_personal_use");
  CHECK(model_slug("M2") == "m2");
  CHECK(error_code_of([] { parse_model("M3"); }) == ErrorCode::kInvalidArgument);

  // Same bundle through the command line gives a byte-identical table.
  const fs::path out = dir / "cli";
  REQUIRE(run_cli("ingest -c " + q(dir / "config.json") + " -o " + q(out)) == 0);
  REQUIRE(run_cli("ols -m M1 -c " + q(dir / "config.json") + " -o " + q(out)) == 0);
  const FeatureTable from_cli = read_bundle(out / "bundle.csv");
  CHECK(slurp(out / "ols_m1.csv") == coefficient_csv(run_ols(from_cli, parse_model("M1"))));
  CHECK(slurp(out / "ols_m1.csv") == coefficient_csv(m1));
  CHECK(fs::exists(out / "resolved_config.json"));
}

TEST_CASE("ATE study over all sectors") {
  const fs::path dir = oracle::fresh_dir("ate_bundle");
  const FeatureTable table = synthetic_table(biased_bundle_spec(5), dir);
  RunConfig c = fast_config(dir / "out");
  c.threads = 4;
  const auto rows = run_ate(table, c);
  REQUIRE(rows.size() == static_cast<std::size_t>(kSectorCount));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].sector == all_sectors()[k]);
    CHECK_FALSE(rows[k].error);
    CHECK(std::isfinite(rows[k].dre.estimate));
    CHECK(rows[k].dre.std_error > 0.0);
  }
  c.threads = 1;
  const auto serial = run_ate(table, c);
  for (std::size_t k = 0; k < rows.size(); ++k) CHECK(serial[k].dre.estimate == rows[k].dre.estimate);

  write_ate_outputs(c, rows);
  std::ifstream in(c.output_dir / "ate.csv");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 1 + 3 * rows.size());
  CHECK(json::parse(slurp(c.output_dir / "ate_report.json"))["sectors"].size() == rows.size());

  c.sectors = {Sector::kArts, Sector::kFood};
  CHECK(run_ate(table, c).size() == 2);
}

TEST_CASE("per-sector failures are isolated") {
  const fs::path dir = oracle::fresh_dir("tiny_bundle");
  BundleSpec spec;
  spec.loans = 60;
  const FeatureTable table = synthetic_table(spec, dir);
  const RunConfig c = fast_config(dir / "out");
  const auto rows = run_ate(table, c);
  CHECK(rows.size() == static_cast<std::size_t>(kSectorCount));
  int failed = 0;
  for (const auto& r : rows) failed += r.error ? 1 : 0;
  CHECK(failed > 0);
  CHECK(run_cli("ingest -c " + q(dir / "config.json") + " -o " + q(dir / "cli")) == 0);
  CHECK(run_cli("ate --burn-in 50 --draws 100 -c " + q(dir / "config.json") + " -o " + q(dir / "cli")) == 0);
  CHECK(fs::exists(dir / "cli" / "ate_sectors.csv"));
}

TEST_CASE("null bundles rarely flag a sector") {
  int flagged_runs = 0, estimates = 0, outside = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const fs::path dir = oracle::fresh_dir("null_" + std::to_string(s));
    BundleSpec spec;
    spec.seed = static_cast<std::uint64_t>(s) + 1;
    const FeatureTable table = synthetic_table(spec, dir);
    RunConfig c = fast_config(dir / "out");
    c.seed = spec.seed;
    c.threads = 4;
    bool any = false;
    for (const auto& r : run_ate(table, c)) {
      REQUIRE_FALSE(r.error);
      any = any || r.flagged;
      for (const AteResult* a : {&r.naive, &r.baseline, &r.dre}) {
        ++estimates;
        if (std::abs(a->estimate) > 2.0 * a->std_error) ++outside;
      }
    }
    flagged_runs += any ? 1 : 0;
  }
  MESSAGE("null runs with a flagged sector: " << flagged_runs << " of " << seeds);
  CHECK(flagged_runs <= seeds / 20);
  // 36 intervals per run: a few misses per run are expected at the 95% level.
  MESSAGE("estimates outside 2 SE of zero: " << outside << " of " << estimates);
  CHECK(outside < 0.1 * estimates);
}

TEST_CASE("fairness comparison") {
  const fs::path dir = oracle::fresh_dir("fair_bundle");
  const FeatureTable table = synthetic_table(biased_bundle_spec(7), dir);
  RunConfig c = fast_config(dir / "out");
  c.threads = 4;

  c.lambda = 0.0;
  for (const auto& r : run_fair(table, c)) {
    REQUIRE_FALSE(r.error);
    CHECK(r.rmse_ssr == r.rmse_ssr_regularized);
    CHECK(r.gap_ssr == r.gap_ssr_regularized);
  }

  c.lambda = 0.6;
  const auto rows = run_fair(table, c);
  double before = 0.0, after = 0.0;
  for (const auto& r : rows) {
    REQUIRE_FALSE(r.error);
    before += std::abs(r.gap_ssr);
    after += std::abs(r.gap_ssr_regularized);
    // Sectors whose effect is near zero have no gap to shrink.
    if (std::abs(r.gap_ssr) > 0.5) CHECK(std::abs(r.gap_ssr_regularized) < std::abs(r.gap_ssr));
    CHECK(r.rmse_lr > 0.0);
    CHECK(r.rmse_lr_loan_attributes > 0.0);
  }
  CHECK(after < before);
  write_fair_outputs(c, rows);
  CHECK(fs::exists(c.output_dir / "fair.csv"));
  CHECK(json::parse(slurp(c.output_dir / "fair_report.json")).contains("lambda"));
}

TEST_CASE("command line exit codes and determinism") {
  const fs::path dir = oracle::fresh_dir("cli_runs");
  CHECK(run_cli("synth " + q(dir / "in") + " --kind biased --loans 400 --seed 3") == 0);
  CHECK(fs::exists(dir / "in" / "config.json"));

  const std::string cfg = " -c " + q(dir / "in" / "config.json");
  CHECK(run_cli("ingest" + cfg + " -o " + q(dir / "a")) == 0);
  CHECK(run_cli("fair --burn-in 50 --draws 100" + cfg + " -o " + q(dir / "a")) == 0);
  CHECK(run_cli("ingest" + cfg + " -o " + q(dir / "b")) == 0);
  CHECK(run_cli("fair --burn-in 50 --draws 100" + cfg + " -o " + q(dir / "b")) == 0);
  CHECK(slurp(dir / "a" / "fair.csv") == slurp(dir / "b" / "fair.csv"));
  CHECK(slurp(dir / "a" / "bundle.csv") == slurp(dir / "b" / "bundle.csv"));

  // Environment variable sets the output directory when no flag is given.
  const std::string env_cmd = std::string(kOutputDirEnv) + "=" + q(dir / "env") + " ";
  CHECK(std::system((env_cmd + "\"" + KIVAFAIR_CLI + "\" ingest" + cfg + " > /dev/null 2>&1").c_str()) == 0);
  CHECK(fs::exists(dir / "env" / "bundle.csv"));

  CHECK(run_cli("ingest --loans " + q(dir / "missing.csv") + " -o " + q(dir / "missing")) == 1);
  CHECK(run_cli("ols -m M7" + cfg + " -o " + q(dir / "a")) == 1);
  CHECK(run_cli("ate --train-fraction 1.5" + cfg + " -o " + q(dir / "a")) == 1);
  CHECK(run_cli("frobnicate") != 0);
  CHECK(run_cli("") != 0);
}
