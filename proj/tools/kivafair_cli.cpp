#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kivafair/pipeline.hpp"
#include "kivafair/serialization.hpp"

namespace {

using namespace kivafair;

struct Overrides {
  std::string config;
  std::optional<std::string> output_dir, bundle, loans, indicators, distances, migrants, colonization, manifest;
  std::optional<std::uint64_t> seed;
  std::optional<double> train_fraction, lambda;
  std::optional<int> burn_in, draws;
  std::optional<unsigned> threads;
  std::vector<std::string> sectors;
  std::optional<std::string> fair_mode, dre_rows;
  bool paper_literal_fair = false;
  bool strict = false;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("-o,--output-dir", o.output_dir, "Output directory");
  app->add_option("--bundle", o.bundle, "Dataset bundle written by ingest");
  app->add_option("--loans", o.loans);
  app->add_option("--indicators", o.indicators);
  app->add_option("--distances", o.distances);
  app->add_option("--migrants", o.migrants);
  app->add_option("--colonization", o.colonization);
  app->add_option("--manifest", o.manifest, "Header rename manifest (JSON)");
  app->add_option("--seed", o.seed);
  app->add_option("--train-fraction", o.train_fraction);
  app->add_option("--lambda", o.lambda, "Fairness penalty weight");
  app->add_option("--burn-in", o.burn_in);
  app->add_option("--draws", o.draws);
  app->add_option("-j,--threads", o.threads);
  app->add_option("--sectors", o.sectors, "Sector subset (default: all)");
  app->add_option("--fair-mode", o.fair_mode, "balanced-gap | linear | paper-literal");
  app->add_option("--dre-rows", o.dre_rows, "all | test");
  app->add_flag("--paper-literal-fair", o.paper_literal_fair);
  app->add_flag("--strict", o.strict, "Abort on malformed loan rows");
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  apply_environment(c);
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.bundle) c.bundle = *o.bundle;
  if (o.loans) c.inputs.loans = *o.loans;
  if (o.indicators) c.inputs.indicators = *o.indicators;
  if (o.distances) c.inputs.distances = *o.distances;
  if (o.migrants) c.inputs.migrants = *o.migrants;
  if (o.colonization) c.inputs.colonization = *o.colonization;
  if (o.manifest) c.inputs.manifest = *o.manifest;
  if (o.seed) c.seed = *o.seed;
  c.hyper.seed = c.seed;
  if (o.train_fraction) c.train_fraction = *o.train_fraction;
  if (o.lambda) c.lambda = *o.lambda;
  if (o.burn_in) c.hyper.burn_in = *o.burn_in;
  if (o.draws) c.hyper.draws = *o.draws;
  if (o.threads) c.threads = *o.threads;
  if (!o.sectors.empty()) {
    c.sectors.clear();
    for (const auto& s : o.sectors) c.sectors.push_back(sector_from_string(s));
  }
  if (o.fair_mode) c.fair_mode = parse_fair_mode(*o.fair_mode);
  if (o.dre_rows) c.dre_rows = *o.dre_rows == "test" ? DreRows::kTest : DreRows::kAll;
  if (o.paper_literal_fair) c.paper_literal_fair = true;
  if (o.strict) c.strict = true;
  validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Funding-time regression, sector ATE and fairness analysis for microloan data"};
  app.require_subcommand(1);
  Overrides o;

  auto* ingest = app.add_subcommand("ingest", "Load the input CSVs and write a normalized bundle");
  add_common(ingest, o);

  std::string model = "M1";
  auto* ols = app.add_subcommand("ols", "Fit an OLS model of funding time");
  add_common(ols, o);
  ols->add_option("-m,--model", model, "M1, M2 or binary:<sector>");

  auto* ate = app.add_subcommand("ate", "Per-sector naive, baseline and doubly robust ATEs");
  add_common(ate, o);

  auto* fair = app.add_subcommand("fair", "Per-sector RMSE and prediction gaps with and without the fairness penalty");
  add_common(fair, o);

  auto* synth = app.add_subcommand("synth", "Write a synthetic set of input CSVs");
  std::string synth_dir = "synthetic";
  std::string kind = "biased";
  BundleSpec bundle;
  synth->add_option("dir", synth_dir, "Destination directory");
  synth->add_option("--kind", kind, "null | biased")->check(CLI::IsMember({"null", "biased"}));
  synth->add_option("--loans", bundle.loans);
  synth->add_option("--seed", bundle.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      BundleSpec spec = kind == "biased" ? biased_bundle_spec(bundle.seed) : BundleSpec{};
      spec.seed = bundle.seed;
      spec.loans = bundle.loans;
      run_synth(spec, synth_dir);
      std::cout << "wrote synthetic inputs to " << synth_dir << '\n';
      return 0;
    }

    const RunConfig c = resolve_config(o);
    write_resolved_config(c);

    if (ingest->parsed()) {
      const IngestOutput out = run_ingest(c);
      write_ingest_outputs(c, out);
      std::cout << "rows read " << out.report.rows_read << ", kept " << out.report.rows_kept << ", dropped "
                << out.report.parse_errors.size() + out.report.dropped.size() << '\n';
      for (const auto& e : out.report.parse_errors) std::cerr << "dropped: " << e.message << '\n';
      for (const auto& d : out.report.dropped) {
        std::cerr << "dropped: loan " << d.loan_id << ": " << d.detail << '\n';
      }
      return 0;
    }

    const FeatureTable table = read_bundle(c.bundle_path());
    if (ols->parsed()) {
      const OlsFit fit = run_ols(table, parse_model(model));
      write_ols_outputs(c, model, fit);
      std::cout << model << ": " << fit.coefficients.size() << " coefficients\n";
      return 0;
    }
    if (ate->parsed()) {
      const auto rows = run_ate(table, c);
      write_ate_outputs(c, rows);
      for (const auto& r : rows) {
        if (r.error) std::cerr << sector_name(r.sector) << ": " << *r.error << '\n';
      }
      return 0;
    }
    if (fair->parsed()) {
      const auto rows = run_fair(table, c);
      write_fair_outputs(c, rows);
      for (const auto& r : rows) {
        if (r.error) std::cerr << sector_name(r.sector) << ": " << *r.error << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
