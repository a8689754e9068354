#include "kivafair/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <string>

#include "kivafair/csv.hpp"
#include "kivafair/linear_models.hpp"
#include "kivafair/rng.hpp"

namespace kivafair {

std::string_view misspecification_name(Misspecification m) {
  switch (m) {
    case Misspecification::kNone: return "none";
    case Misspecification::kOutcome: return "outcome";
    case Misspecification::kPropensity: return "propensity";
    case Misspecification::kBoth: return "both";
  }
  return "none";
}

Misspecification parse_misspecification(std::string_view text) {
  for (auto m : {Misspecification::kNone, Misspecification::kOutcome, Misspecification::kPropensity,
                 Misspecification::kBoth}) {
    if (misspecification_name(m) == text) return m;
  }
  throw Error(ErrorCode::kInvalidSpec, "unknown misspecification '" + std::string(text) + "'");
}

void validate(const SyntheticSpec& spec) {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::kInvalidSpec, msg); };
  if (spec.n < 2) bad("n must be at least 2");
  if (spec.p < 1) bad("p must be at least 1");
  if (spec.true_beta.size() != spec.p) bad("true_beta must have p entries");
  if (spec.propensity_coefs.size() != 0 && spec.propensity_coefs.size() != spec.p) {
    bad("propensity_coefs must have p entries");
  }
  for (Index j : spec.sparsity_support) {
    if (j < 0 || j >= spec.p) bad("support index " + std::to_string(j) + " outside [0, p)");
  }
  if (!(spec.noise_sd > 0.0) || !std::isfinite(spec.noise_sd)) bad("noise_sd must be positive");
  if (spec.shifted_features < 0 || spec.shifted_features > spec.p) bad("shifted_features outside [0, p]");
}

SyntheticSpec replication(const SyntheticSpec& spec, std::uint64_t index) {
  SyntheticSpec out = spec;
  out.seed = derive_seed(spec.seed, index);
  return out;
}

namespace {

VectorXd support_beta(const SyntheticSpec& spec) {
  if (spec.sparsity_support.empty()) return spec.true_beta;
  VectorXd b = VectorXd::Zero(spec.p);
  for (Index j : spec.sparsity_support) b[j] = spec.true_beta[j];
  return b;
}

MatrixXd standard_normal(Rng& rng, Index n, Index p) {
  MatrixXd x(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) x(i, j) = rng.normal();
  return x;
}

}  // namespace

RegressionSample generate_regression(const SyntheticSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  RegressionSample s;
  s.beta = support_beta(spec);
  s.x = standard_normal(rng, spec.n, spec.p);
  s.y = s.x * s.beta;
  for (Index i = 0; i < spec.n; ++i) s.y[i] += spec.intercept + spec.noise_sd * rng.normal();
  return s;
}

CausalSample generate_causal(const SyntheticSpec& spec) {
  validate(spec);
  const VectorXd beta = support_beta(spec);
  const VectorXd alpha = spec.propensity_coefs.size() ? spec.propensity_coefs : VectorXd::Zero(spec.p);
  const bool hide_outcome =
      spec.misspecification == Misspecification::kOutcome || spec.misspecification == Misspecification::kBoth;
  const bool hide_propensity =
      spec.misspecification == Misspecification::kPropensity || spec.misspecification == Misspecification::kBoth;

  constexpr int kMaxAttempts = 10;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(attempt)));
    MatrixXd x = standard_normal(rng, spec.n, spec.p);
    const VectorXd h = x.col(0).array().square() - 1.0;
    VectorXd eta = (x * alpha).array() + spec.propensity_intercept;
    if (hide_propensity) eta += spec.hidden_propensity_coef * h;

    CausalSample s;
    s.attempts = attempt + 1;
    s.hidden = h;
    s.propensity.resize(spec.n);
    s.data.w.resize(spec.n);
    s.data.y.resize(spec.n);
    for (Index i = 0; i < spec.n; ++i) {
      s.propensity[i] = sigmoid(eta[i]);
      s.data.w[i] = rng.bernoulli(s.propensity[i]) ? 1.0 : 0.0;
      if (s.data.w[i] > 0.5) x.row(i).head(spec.shifted_features).array() += spec.group_shift;
    }
    const VectorXd mu = (x * beta).array() + spec.intercept;
    for (Index i = 0; i < spec.n; ++i) {
      double yi = mu[i] + spec.treatment_effect * s.data.w[i] + spec.noise_sd * rng.normal();
      if (hide_outcome) yi += spec.hidden_outcome_coef * h[i];
      s.data.y[i] = yi;
    }
    const Index treated = static_cast<Index>(s.data.w.sum());
    if (treated == 0 || treated == spec.n) continue;

    DesignMatrix& d = s.data.x;
    d.values.resize(spec.n, spec.p + 1);
    d.values.col(0).setOnes();
    d.values.rightCols(spec.p) = x;
    d.column_names.push_back(kInterceptName);
    for (Index j = 0; j < spec.p; ++j) d.column_names.push_back("x" + std::to_string(j + 1));
    // Columns are already standard normal: identity scaling keeps the
    // numeric/dummy distinction intact.
    d.scaling.assign(static_cast<std::size_t>(spec.p + 1), ColumnScaling{0.0, 1.0});
    d.scaling[0] = std::nullopt;
    d.intercept_index = 0;
    return s;
  }
  throw Error(ErrorCode::kDegenerateTreatment,
              "every treatment draw was all-treated or all-control after 10 attempts");
}

namespace {

std::string country_code(char prefix, int i) {
  return std::string(1, prefix) + static_cast<char>('A' + i / 26) + static_cast<char>('A' + i % 26);
}

std::string iso_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss<seconds> hms{t - day};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + p.string());
  return out;
}

}  // namespace

InputPaths write_synthetic_inputs(const BundleSpec& spec, const std::filesystem::path& dir) {
  if (spec.loans < 1 || spec.borrower_countries < 1 || spec.lender_countries < 1 || !(spec.noise_sd >= 0.0)) {
    throw Error(ErrorCode::kInvalidSpec, "bundle needs loans, countries and a non-negative noise sd");
  }
  std::filesystem::create_directories(dir);
  InputPaths paths{dir / "loans.csv",      dir / "indicators.csv", dir / "distances.csv",
                   dir / "migrants.csv",   dir / "colonization.csv", std::nullopt};
  Rng rng(spec.seed);

  const int nb = spec.borrower_countries;
  const int nl = spec.lender_countries;
  std::vector<std::string> borrowers, lenders;
  for (int i = 0; i < nb; ++i) borrowers.push_back(country_code('B', i));
  for (int i = 0; i < nl; ++i) lenders.push_back(country_code('L', i));

  // Country-level covariates; z drives both funding speed and (optionally)
  // which sectors a country's loans fall in.
  std::vector<double> z(nb);
  {
    auto out = open_out(paths.indicators);
    out << "country,ease_of_business,loan_access,women_ratio,affordability,vc_finance,capacity_innovation,"
           "internet_penetration,gdp\n";
    auto row = [&](const std::string& code, double zc, double gdp) {
      const double internet = std::clamp(40.0 + 15.0 * zc + 5.0 * rng.normal(), 1.0, 99.0);
      out << csv::join({code, std::to_string(1 + static_cast<int>(std::floor(100.0 * rng.uniform()))),
                        csv::format_double(3.5 + 0.5 * rng.normal()), csv::format_double(0.6 + 0.1 * rng.normal()),
                        csv::format_double(3.0 + 0.6 * rng.normal()), csv::format_double(2.5 + 0.5 * rng.normal()),
                        csv::format_double(3.2 + 0.4 * zc + 0.3 * rng.normal()), csv::format_double(internet), csv::format_double(gdp)})
          << '\n';
    };
    for (int i = 0; i < nb; ++i) {
      z[i] = nb == 1 ? 0.0 : -1.0 + 2.0 * i / (nb - 1);
      row(borrowers[i], z[i], 1500.0 + 800.0 * rng.uniform());
    }
    for (int i = 0; i < nl; ++i) row(lenders[i], 1.5, 30000.0 + 20000.0 * rng.uniform());
  }
  {
    auto out = open_out(paths.distances);
    out << "country_a,country_b,km\n";
    for (const auto& b : borrowers)
      for (const auto& l : lenders) out << csv::join({b, l, csv::format_double(std::round(3000.0 + 9000.0 * rng.uniform()))}) << '\n';
  }
  {
    auto out = open_out(paths.migrants);
    out << "origin,host,count\n";
    for (const auto& b : borrowers)
      for (const auto& l : lenders) out << csv::join({b, l, csv::format_double(std::floor(50000.0 * rng.uniform()))}) << '\n';
  }
  {
    auto out = open_out(paths.colonization);
    out << "colonized,colonizer,flag\n";
    for (const auto& b : borrowers)
      for (const auto& l : lenders) out << csv::join({b, l, rng.uniform() < 0.15 ? "1" : "0"}) << '\n';
  }

  std::array<double, kSectorCount> tilt{};
  for (std::size_t s = 0; s < kSectorCount; ++s) tilt[s] = std::sin(1.7 * static_cast<double>(s) + 0.3);

  auto out = open_out(paths.loans);
  out << "loan_id,sector,currency_policy,language,loan_amount,borrower_gender,posted_at,funded_at,borrower_country,"
         "lender_countries\n";
  const Timestamp epoch = std::chrono::sys_days{std::chrono::year{2013} / 1 / 1};
  for (Index i = 0; i < spec.loans; ++i) {
    const int c = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(nb));
    std::array<double, kSectorCount> weight{};
    double total = 0.0;
    for (std::size_t s = 0; s < kSectorCount; ++s) total += weight[s] = std::exp(spec.confounding * tilt[s] * z[c]);
    double u = rng.uniform() * total;
    std::size_t sector = 0;
    while (sector + 1 < kSectorCount && u >= weight[sector]) u -= weight[sector++];

    const bool female = rng.uniform() < 0.7;
    const bool english = rng.uniform() < 0.5;
    const bool shared = rng.uniform() < 0.3;
    const double amount = std::round(std::exp(6.5 + 0.6 * rng.normal()) / 25.0) * 25.0;
    const int lender_count = 1 + static_cast<int>(rng.next_u64() % 3);
    std::vector<std::string> chosen;
    for (int k = 0; k < lender_count; ++k) chosen.push_back(lenders[rng.next_u64() % static_cast<std::uint64_t>(nl)]);
    std::string lender_field;
    for (std::size_t k = 0; k < chosen.size(); ++k) lender_field += (k ? "|" : "") + chosen[k];

    double days = spec.base_days + (female ? -2.0 : 0.0) + (english ? -1.0 : 0.0) + 0.004 * (amount - 700.0) +
                  3.0 * z[c] + spec.sector_effects[sector] + spec.noise_sd * rng.normal();
    days = std::max(days, 0.05);
    const Timestamp posted = epoch + std::chrono::seconds{static_cast<long>(rng.uniform() * 365.0 * 86400.0)};
    const Timestamp funded = posted + std::chrono::seconds{static_cast<long>(std::llround(days * 86400.0))};

    out << csv::join({"L" + std::to_string(100000 + i), std::string(sector_name(all_sectors()[sector])),
                      shared ? "shared" : "none", english ? "English" : "Spanish", csv::format_double(amount),
                      female ? "female" : "male", iso_timestamp(posted), iso_timestamp(funded), borrowers[c],
                      lender_field})
        << '\n';
  }
  return paths;
}

BundleSpec biased_bundle_spec(std::uint64_t seed) {
  BundleSpec b;
  b.seed = seed;
  b.confounding = 1.5;
  for (std::size_t s = 0; s < kSectorCount; ++s) b.sector_effects[s] = 4.0 * std::sin(1.7 * static_cast<double>(s) + 0.3);
  return b;
}

}  // namespace kivafair
