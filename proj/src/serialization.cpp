#include "kivafair/serialization.hpp"

#include <fstream>

#include "kivafair/csv.hpp"
#include "kivafair/spike_slab.hpp"

namespace kivafair {

using nlohmann::json;

json to_json(const SpikeSlabHyper& h) {
  return json{{"a", h.a},           {"b", h.b},           {"alpha1", h.alpha1},       {"alpha2", h.alpha2},
              {"s2", h.s2},         {"theta_init", h.theta_init}, {"burn_in", h.burn_in}, {"draws", h.draws},
              {"seed", h.seed},     {"lambda", h.lambda}};
}

SpikeSlabHyper hyper_from_json(const json& j, SpikeSlabHyper h) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "hyper must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "a") h.a = value.get<double>();
    else if (key == "b") h.b = value.get<double>();
    else if (key == "alpha1") h.alpha1 = value.get<double>();
    else if (key == "alpha2") h.alpha2 = value.get<double>();
    else if (key == "s2") h.s2 = value.get<double>();
    else if (key == "s") h.s2 = value.get<double>() * value.get<double>();
    else if (key == "theta_init") h.theta_init = value.get<double>();
    else if (key == "burn_in") h.burn_in = value.get<int>();
    else if (key == "draws") h.draws = value.get<int>();
    else if (key == "seed") h.seed = value.get<std::uint64_t>();
    else if (key == "lambda") h.lambda = value.get<double>();
    else throw Error(ErrorCode::kInvalidArgument, "unknown hyperparameter '" + key + "'");
  }
  validate(h);
  return h;
}

void write_draws_csv(const PosteriorDraws& draws, const std::filesystem::path& path) {
  validate(draws);
  std::string text;
  std::vector<std::string> header = {"theta", "tau2", "sigma2"};
  const Index p = draws.feature_count();
  auto name = [&](Index j) {
    return j < static_cast<Index>(draws.column_names.size()) ? draws.column_names[j] : "x" + std::to_string(j);
  };
  for (Index j = 0; j < p; ++j) header.push_back("beta[" + name(j) + "]");
  for (Index j = 0; j < p; ++j) header.push_back("pi[" + name(j) + "]");
  text += csv::join(header) + '\n';
  std::vector<std::string> row;
  for (Index t = 0; t < draws.draw_count(); ++t) {
    row.clear();
    row.push_back(csv::format_double(draws.theta[t]));
    row.push_back(csv::format_double(draws.tau2[t]));
    row.push_back(csv::format_double(draws.sigma2[t]));
    for (Index j = 0; j < p; ++j) row.push_back(csv::format_double(draws.beta(t, j)));
    for (Index j = 0; j < p; ++j) row.push_back(draws.pi(t, j) ? "1" : "0");
    text += csv::join(row) + '\n';
  }
  write_text(path, text);
}

PosteriorDraws read_draws_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const std::string file = path.filename().string();
  if (t.header.size() < 3 || (t.header.size() - 3) % 2 != 0 || t.header[0] != "theta" || t.header[1] != "tau2" ||
      t.header[2] != "sigma2") {
    throw Error(ErrorCode::kSchemaMismatch, file + ": not a draws file");
  }
  const Index p = static_cast<Index>((t.header.size() - 3) / 2);
  const Index n = static_cast<Index>(t.rows.size());
  PosteriorDraws d;
  d.beta.resize(n, p);
  d.pi.resize(n, p);
  d.theta.resize(n);
  d.tau2.resize(n);
  d.sigma2.resize(n);
  for (Index j = 0; j < p; ++j) {
    const std::string& h = t.header[3 + j];
    if (h.rfind("beta[", 0) != 0 || h.back() != ']') throw Error(ErrorCode::kSchemaMismatch, file + ": bad column " + h);
    d.column_names.push_back(h.substr(5, h.size() - 6));
  }
  for (Index i = 0; i < n; ++i) {
    const auto& row = t.rows[i];
    if (row.size() != t.header.size()) {
      throw Error(ErrorCode::kRowParseError, file + " row " + std::to_string(i + 1) + ": wrong field count");
    }
    auto num = [&](std::size_t c) {
      double v = 0.0;
      if (!csv::parse_double(row[c], v)) {
        throw Error(ErrorCode::kRowParseError,
                    file + " row " + std::to_string(i + 1) + " field " + t.header[c] + ": not a number");
      }
      return v;
    };
    d.theta[i] = num(0);
    d.tau2[i] = num(1);
    d.sigma2[i] = num(2);
    for (Index j = 0; j < p; ++j) d.beta(i, j) = num(3 + static_cast<std::size_t>(j));
    for (Index j = 0; j < p; ++j) d.pi(i, j) = num(3 + static_cast<std::size_t>(p + j)) != 0.0 ? 1 : 0;
  }
  return d;
}

json posterior_summary(const PosteriorDraws& draws) {
  const VectorXd mean = posterior_mean_coefficients(draws);
  const VectorXd incl = inclusion_probabilities(draws);
  const auto ci = credible_intervals(draws, 0.95);
  json coefs = json::array();
  for (Index j = 0; j < draws.feature_count(); ++j) {
    coefs.push_back({{"name", j < static_cast<Index>(draws.column_names.size()) ? draws.column_names[j] : ""},
                     {"mean", mean[j]},
                     {"inclusion_probability", incl[j]},
                     {"ci_low", ci[j].low},
                     {"ci_high", ci[j].high}});
  }
  return json{{"draws", draws.draw_count()},
              {"hyper", to_json(draws.hyper)},
              {"sigma2_mean", draws.sigma2.mean()},
              {"theta_mean", draws.theta.mean()},
              {"coefficients", coefs}};
}

json to_json(const AteResult& r) {
  json j{{"method", method_name(r.method)},
         {"estimate", r.estimate},
         {"se", r.std_error},
         {"ci_low", r.ci_low},
         {"ci_high", r.ci_high}};
  if (r.sector) j["sector"] = sector_name(*r.sector);
  return j;
}

json to_json(const SectorStudyResult& r) {
  json j{{"sector", sector_name(r.sector)}, {"n_treated", r.n_treated}, {"n_control", r.n_control}};
  if (r.error) {
    j["error"] = *r.error;
    return j;
  }
  j["rmse"] = {{"lr_treated", r.rmse_lr_treated},
               {"ssr_treated", r.rmse_ssr_treated},
               {"lr_control", r.rmse_lr_control},
               {"ssr_control", r.rmse_ssr_control}};
  j["propensity"] = {{"f1", r.pscore_f1}, {"accuracy", r.pscore_accuracy}};
  j["ate"] = json::array({to_json(r.naive), to_json(r.baseline), to_json(r.dre)});
  j["flagged"] = r.flagged;
  return j;
}

std::string ate_csv(const std::vector<AteResult>& rows) {
  std::string text = "sector,method,estimate,se,ci_low,ci_high\n";
  for (const auto& r : rows) {
    text += csv::join({r.sector ? std::string(sector_name(*r.sector)) : "", std::string(method_name(r.method)),
                       csv::format_double(r.estimate), csv::format_double(r.std_error),
                       csv::format_double(r.ci_low), csv::format_double(r.ci_high)}) +
            '\n';
  }
  return text;
}

std::string coefficient_csv(const OlsFit& fit) {
  std::string text = "term,estimate\n";
  for (Index j = 0; j < fit.coefficients.size(); ++j) {
    text += csv::join({fit.column_names[static_cast<std::size_t>(j)], csv::format_double(fit.coefficients[j])}) + '\n';
  }
  return text;
}

json to_json(const OlsFit& fit) {
  json coefs = json::array();
  for (Index j = 0; j < fit.coefficients.size(); ++j) {
    coefs.push_back({{"term", fit.column_names[static_cast<std::size_t>(j)]}, {"estimate", fit.coefficients[j]}});
  }
  return json{{"coefficients", coefs}, {"residual_variance", fit.residual_variance}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + '\n'); }

}  // namespace kivafair
