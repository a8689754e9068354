#include "kivafair/ingestion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "kivafair/csv.hpp"
#include "kivafair/rng.hpp"

namespace kivafair {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<bool> parse_flag(std::string_view text, std::initializer_list<std::string_view> yes,
                               std::initializer_list<std::string_view> no) {
  const std::string t = lower(trim(text));
  for (auto y : yes)
    if (t == y) return true;
  for (auto n : no)
    if (t == n) return false;
  return std::nullopt;
}

// Column lookup with manifest renames applied to the file's header.
struct HeaderMap {
  std::map<std::string, int> index;

  HeaderMap(const csv::Table& table, const std::string& file, const SchemaManifest* manifest) {
    for (std::size_t i = 0; i < table.header.size(); ++i) {
      std::string name = trim(table.header[i]);
      if (manifest) name = manifest->canonical(file, name);
      index.emplace(name, static_cast<int>(i));
    }
  }

  void require(const std::vector<std::string>& names, const std::string& file) const {
    for (const auto& n : names) {
      if (!index.count(n)) throw Error(ErrorCode::kSchemaMismatch, file + ": missing column '" + n + "'");
    }
  }

  std::string get(const std::vector<std::string>& row, const std::string& name) const {
    const int i = index.at(name);
    return i < static_cast<int>(row.size()) ? trim(row[static_cast<std::size_t>(i)]) : std::string();
  }
};

[[noreturn]] void row_error(const std::string& file, std::size_t row, const std::string& field,
                            const std::string& what) {
  throw Error(ErrorCode::kRowParseError,
              file + " row " + std::to_string(row) + " field " + field + ": " + what);
}

double require_number(const HeaderMap& h, const std::vector<std::string>& row, const std::string& field,
                      const std::string& file, std::size_t row_no) {
  double v = 0.0;
  if (!csv::parse_double(h.get(row, field), v) || !std::isfinite(v)) row_error(file, row_no, field, "not a number");
  return v;
}

struct RowFailure {
  std::string field;
  std::string message;
};

const std::vector<std::string> kLoanColumns = {"loan_id",         "sector",    "currency_policy", "language",
                                               "loan_amount",     "borrower_gender", "posted_at", "funded_at",
                                               "borrower_country", "lender_countries"};

}  // namespace

SchemaManifest SchemaManifest::load(const std::filesystem::path& json_path) {
  if (!std::filesystem::exists(json_path)) throw Error(ErrorCode::kFileNotFound, json_path.string());
  std::ifstream in(json_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, json_path.string() + ": " + e.what());
  }
  SchemaManifest m;
  for (auto& [file, mapping] : j.items()) {
    for (auto& [user, canonical] : mapping.items()) m.renames[file][user] = canonical.get<std::string>();
  }
  return m;
}

std::string SchemaManifest::canonical(const std::string& file, const std::string& header) const {
  auto f = renames.find(file);
  if (f == renames.end()) return header;
  auto h = f->second.find(header);
  return h == f->second.end() ? header : h->second;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  const std::string s = trim(text);
  int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
  auto digits = [&](std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
      v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
  };
  if (!digits(0, 4, y) || s.size() < 10 || s[4] != '-' || !digits(5, 2, mo) || s[7] != '-' || !digits(8, 2, d)) {
    return std::nullopt;
  }
  std::size_t pos = 10;
  long offset_seconds = 0;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    ++pos;
    if (!digits(pos, 2, hh) || pos + 2 >= s.size() || s[pos + 2] != ':' || !digits(pos + 3, 2, mm)) {
      return std::nullopt;
    }
    pos += 5;
    if (pos < s.size() && s[pos] == ':') {
      if (!digits(pos + 1, 2, ss)) return std::nullopt;
      pos += 3;
      if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      }
    }
    if (pos < s.size()) {
      if (s[pos] == 'Z' && pos + 1 == s.size()) {
        ++pos;
      } else if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size() && s[pos + 3] == ':') {
        int oh = 0, om = 0;
        if (!digits(pos + 1, 2, oh) || !digits(pos + 4, 2, om)) return std::nullopt;
        offset_seconds = (s[pos] == '-' ? -1 : 1) * (oh * 3600L + om * 60L);
        pos = s.size();
      } else {
        return std::nullopt;
      }
    }
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  return sys_seconds{sys_days{ymd}} + hours{hh} + minutes{mm} + seconds{ss} - seconds{offset_seconds};
}

LoanLoadResult load_loans(const std::filesystem::path& path, const SchemaManifest* manifest) {
  const std::string file = path.filename().string();
  const csv::Table table = csv::read(path);
  const HeaderMap h(table, "loans", manifest);
  h.require(kLoanColumns, file);

  LoanLoadResult result;
  std::set<std::string> languages;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t row_no = r + 1;
    ++result.rows_read;
    auto fail = [](const std::string& name, const std::string& what) -> void {
      throw RowFailure{name, what};
    };
    try {
      auto field = [&](const std::string& name) {
        std::string v = h.get(row, name);
        if (v.empty()) fail(name, "missing");
        return v;
      };
      LoanRecord loan;
      loan.loan_id = field("loan_id");
      const std::string sector_text = field("sector");
      auto sector = parse_sector(sector_text);
      if (!sector) fail("sector", "unknown sector '" + sector_text + "'");
      loan.sector = *sector;
      auto currency = parse_flag(field("currency_policy"), {"shared", "true", "1", "yes", "y"},
                                 {"none", "not shared", "false", "0", "no", "n"});
      if (!currency) fail("currency_policy", "expected shared/none");
      loan.currency_policy_shared = *currency;
      const std::string language = lower(field("language"));
      languages.insert(language);
      loan.language_english = (language == "english" || language == "en");
      if (!csv::parse_double(field("loan_amount"), loan.loan_amount) || !(loan.loan_amount >= 0.0)) {
        fail("loan_amount", "expected a non-negative number");
      }
      auto female = parse_flag(field("borrower_gender"), {"female", "f", "1", "true"}, {"male", "m", "0", "false"});
      if (!female) fail("borrower_gender", "expected female/male");
      loan.borrower_gender_female = *female;
      auto posted = parse_timestamp(field("posted_at"));
      if (!posted) fail("posted_at", "not an ISO-8601 timestamp");
      auto funded = parse_timestamp(field("funded_at"));
      if (!funded) fail("funded_at", "not an ISO-8601 timestamp");
      if (*funded < *posted) fail("funded_at", "precedes posted_at");
      loan.posted_at = *posted;
      loan.funded_at = *funded;
      loan.borrower_country = field("borrower_country");
      std::string lenders = field("lender_countries");
      std::size_t start = 0;
      while (start <= lenders.size()) {
        const std::size_t bar = lenders.find('|', start);
        const std::string code = trim(lenders.substr(start, bar == std::string::npos ? std::string::npos : bar - start));
        if (!code.empty()) loan.lender_countries.push_back(code);
        if (bar == std::string::npos) break;
        start = bar + 1;
      }
      if (loan.lender_countries.empty()) fail("lender_countries", "missing");
      result.loans.push_back(std::move(loan));
    } catch (const RowFailure& f) {
      result.errors.push_back(RowError{row_no, f.field,
                                       file + " row " + std::to_string(row_no) + " field " + f.field + ": " + f.message});
    }
  }
  result.distinct_languages = languages.size();
  return result;
}

void RawTables::set_distance(const std::string& a, const std::string& b, double km) {
  distances[a < b ? std::make_pair(a, b) : std::make_pair(b, a)] = km;
}

std::optional<double> RawTables::distance(const std::string& a, const std::string& b) const {
  auto it = distances.find(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
  if (it != distances.end()) return it->second;
  if (a == b) return 0.0;
  return std::nullopt;
}

std::optional<double> RawTables::migrant_count(const std::string& origin, const std::string& host) const {
  auto it = migrants.find({origin, host});
  if (it != migrants.end()) return it->second;
  if (origin == host) return 0.0;
  return std::nullopt;
}

bool RawTables::colonized_by(const std::string& colonized, const std::string& colonizer) const {
  auto it = colonization.find({colonized, colonizer});
  return it != colonization.end() && it->second;
}

const CountryIndicators* RawTables::find_indicators(const std::string& country) const {
  auto it = indicators.find(country);
  return it == indicators.end() ? nullptr : &it->second;
}

TablesLoadResult load_tables(const InputPaths& paths) {
  std::optional<SchemaManifest> manifest;
  if (paths.manifest) manifest = SchemaManifest::load(*paths.manifest);
  const SchemaManifest* m = manifest ? &*manifest : nullptr;

  TablesLoadResult out;
  auto loans = load_loans(paths.loans, m);
  out.tables.loans = std::move(loans.loans);
  out.loan_errors = std::move(loans.errors);
  out.loan_rows_read = loans.rows_read;
  out.distinct_languages = loans.distinct_languages;

  {
    const std::string file = paths.indicators.filename().string();
    const auto t = csv::read(paths.indicators);
    const HeaderMap h(t, "indicators", m);
    const std::vector<std::string> cols = {"country",       "ease_of_business",    "loan_access",
                                           "women_ratio",   "affordability",       "vc_finance",
                                           "capacity_innovation", "internet_penetration", "gdp"};
    h.require(cols, file);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      const std::size_t row_no = r + 1;
      const std::string country = h.get(row, "country");
      if (country.empty()) row_error(file, row_no, "country", "missing");
      // Rows with empty indicator cells are kept out of the table so loans
      // from that country are dropped (and counted) downstream.
      bool complete = true;
      for (std::size_t c = 1; c < cols.size(); ++c) complete = complete && !h.get(row, cols[c]).empty();
      if (!complete) continue;
      CountryIndicators ind;
      ind.country = country;
      const double rank = require_number(h, row, "ease_of_business", file, row_no);
      if (rank != std::floor(rank) || rank < 1) row_error(file, row_no, "ease_of_business", "expected integer rank >= 1");
      ind.ease_of_business = static_cast<int>(rank);
      ind.loan_access = require_number(h, row, "loan_access", file, row_no);
      ind.women_ratio = require_number(h, row, "women_ratio", file, row_no);
      ind.affordability = require_number(h, row, "affordability", file, row_no);
      ind.vc_finance = require_number(h, row, "vc_finance", file, row_no);
      ind.capacity_innovation = require_number(h, row, "capacity_innovation", file, row_no);
      ind.internet_penetration = require_number(h, row, "internet_penetration", file, row_no);
      ind.gdp = require_number(h, row, "gdp", file, row_no);
      try {
        validate(ind);
      } catch (const Error& e) {
        row_error(file, row_no, "indicators", e.what());
      }
      out.tables.indicators[country] = ind;
    }
  }
  {
    const std::string file = paths.distances.filename().string();
    const auto t = csv::read(paths.distances);
    const HeaderMap h(t, "distances", m);
    h.require({"country_a", "country_b", "km"}, file);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const double km = require_number(h, t.rows[r], "km", file, r + 1);
      if (km < 0) row_error(file, r + 1, "km", "negative distance");
      out.tables.set_distance(h.get(t.rows[r], "country_a"), h.get(t.rows[r], "country_b"), km);
    }
  }
  {
    const std::string file = paths.migrants.filename().string();
    const auto t = csv::read(paths.migrants);
    const HeaderMap h(t, "migrants", m);
    h.require({"origin", "host", "count"}, file);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const double count = require_number(h, t.rows[r], "count", file, r + 1);
      if (count < 0) row_error(file, r + 1, "count", "negative migrant count");
      out.tables.migrants[{h.get(t.rows[r], "origin"), h.get(t.rows[r], "host")}] = count;
    }
  }
  {
    const std::string file = paths.colonization.filename().string();
    const auto t = csv::read(paths.colonization);
    const HeaderMap h(t, "colonization", m);
    h.require({"colonized", "colonizer", "flag"}, file);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      auto flag = parse_flag(h.get(t.rows[r], "flag"), {"1", "true", "yes"}, {"0", "false", "no"});
      if (!flag) row_error(file, r + 1, "flag", "expected 0/1");
      out.tables.colonization[{h.get(t.rows[r], "colonized"), h.get(t.rows[r], "colonizer")}] = *flag;
    }
  }
  return out;
}

PairFeatures derive_pair_features(const LoanRecord& loan, const RawTables& tables, std::uint64_t seed) {
  const std::string& b = loan.borrower_country;
  if (loan.lender_countries.empty()) {
    throw Error(ErrorCode::kMissingCountryData, loan.loan_id + ": no lender countries");
  }
  const CountryIndicators* bi = tables.find_indicators(b);
  if (!bi) throw Error(ErrorCode::kMissingCountryData, b + " (indicators)");

  double distance = 0.0, migrants = 0.0, gdp_diff = 0.0;
  for (const auto& l : loan.lender_countries) {
    auto d = tables.distance(b, l);
    if (!d) throw Error(ErrorCode::kMissingCountryData, b + "-" + l + " (distances)");
    auto mig = tables.migrant_count(b, l);
    if (!mig) throw Error(ErrorCode::kMissingCountryData, b + "-" + l + " (migrants)");
    const CountryIndicators* li = tables.find_indicators(l);
    if (!li) throw Error(ErrorCode::kMissingCountryData, l + " (indicators)");
    distance += *d;
    migrants += *mig;
    gdp_diff += bi->gdp - li->gdp;
  }
  const double k = static_cast<double>(loan.lender_countries.size());
  Rng rng(derive_seed(seed, stable_hash(loan.loan_id)));
  const std::size_t pick = static_cast<std::size_t>(rng.next_u64() % loan.lender_countries.size());

  PairFeatures pf;
  pf.distance = distance / k;
  pf.migrants = migrants / k;
  pf.gdp_difference = gdp_diff / k;
  pf.colonization = tables.colonized_by(b, loan.lender_countries[pick]);
  return pf;
}

const std::array<std::string, kBaseFeatureCount>& base_feature_names() {
  static const std::array<std::string, kBaseFeatureCount> names = {
      "currency_policy", "language",      "ease_of_business", "colonization", "borrower_gender",
      "loan_amount",     "distance",      "migrants",         "gdp_difference", "loan_access",
      "women_ratio",     "affordability", "vc_finance",       "capacity_innovation", "internet_penetration"};
  return names;
}

const std::array<bool, kBaseFeatureCount>& base_feature_is_binary() {
  static const std::array<bool, kBaseFeatureCount> flags = {true,  true,  false, true,  true,  false, false, false,
                                                            false, false, false, false, false, false, false};
  return flags;
}

const std::vector<std::string>& loan_attribute_names() {
  static const std::vector<std::string> names = {"currency_policy", "language", "borrower_gender", "loan_amount"};
  return names;
}

namespace {

std::array<double, kBaseFeatureCount> feature_vector(const LoanRecord& loan, const CountryIndicators& ind,
                                                     const PairFeatures& pf) {
  return {loan.currency_policy_shared ? 1.0 : 0.0,
          loan.language_english ? 1.0 : 0.0,
          static_cast<double>(ind.ease_of_business),
          pf.colonization ? 1.0 : 0.0,
          loan.borrower_gender_female ? 1.0 : 0.0,
          loan.loan_amount,
          pf.distance,
          pf.migrants,
          pf.gdp_difference,
          ind.loan_access,
          ind.women_ratio,
          ind.affordability,
          ind.vc_finance,
          ind.capacity_innovation,
          ind.internet_penetration};
}

}  // namespace

FeatureTable derive_features(const std::vector<LoanRecord>& loans, const RawTables& tables, std::uint64_t seed,
                             unsigned threads) {
  const std::size_t n = loans.size();
  std::vector<std::optional<LoanFeatureRow>> rows(n);
  std::vector<std::optional<DropRecord>> drops(n);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const LoanRecord& loan = loans[i];
      try {
        validate(loan);
        const PairFeatures pf = derive_pair_features(loan, tables, seed);
        LoanFeatureRow row;
        row.loan_id = loan.loan_id;
        row.sector = loan.sector;
        row.borrower_country = loan.borrower_country;
        row.funding_days = loan.funding_time().days;
        row.features = feature_vector(loan, *tables.find_indicators(loan.borrower_country), pf);
        rows[i] = std::move(row);
      } catch (const Error& e) {
        drops[i] = DropRecord{loan.loan_id, e.code(), e.what()};
      }
    }
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(work, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  FeatureTable table;
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i]) table.rows.push_back(std::move(*rows[i]));
    if (drops[i]) table.dropped.push_back(std::move(*drops[i]));
  }
  return table;
}

std::string sector_column_name(Sector s) { return "sector[" + std::string(sector_name(s)) + "]"; }

DesignMatrix build_design_matrix(const FeatureTable& table, SectorEncoding encoding,
                                 const std::vector<Index>& fit_rows) {
  const Index n = static_cast<Index>(table.rows.size());
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "no loans to build a design from");

  std::vector<std::string> names = {kInterceptName};
  std::vector<bool> standardize = {false};
  for (int k = 0; k < kBaseFeatureCount; ++k) {
    names.push_back(base_feature_names()[k]);
    standardize.push_back(!base_feature_is_binary()[k]);
  }
  std::vector<Sector> sector_cols;
  if (encoding.kind == SectorEncoding::Kind::kFullDummy) {
    for (Sector s : all_sectors())
      if (s != kReferenceSector) sector_cols.push_back(s);
  } else if (encoding.kind == SectorEncoding::Kind::kBinary) {
    sector_cols.push_back(encoding.sector);
  }
  for (Sector s : sector_cols) {
    names.push_back(sector_column_name(s));
    standardize.push_back(false);
  }

  MatrixXd raw(n, static_cast<Index>(names.size()));
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    raw(i, 0) = 1.0;
    for (int k = 0; k < kBaseFeatureCount; ++k) raw(i, k + 1) = row.features[k];
    for (std::size_t c = 0; c < sector_cols.size(); ++c) {
      raw(i, 1 + kBaseFeatureCount + static_cast<Index>(c)) = row.sector == sector_cols[c] ? 1.0 : 0.0;
    }
  }

  std::vector<Index> rows = fit_rows;
  if (rows.empty()) {
    rows.resize(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Index{0});
  }
  DesignMatrix x;
  x.scaling = fit_scaling(raw, standardize, rows);
  x.values = apply_scaling(raw, x.scaling);
  x.column_names = std::move(names);
  x.intercept_index = 0;
  return x;
}

DesignMatrix build_design_matrix(const std::vector<LoanRecord>& loans, const RawTables& tables,
                                 SectorEncoding encoding, std::uint64_t seed) {
  if (loans.empty()) throw Error(ErrorCode::kEmptyInput, "no loans");
  const FeatureTable table = derive_features(loans, tables, seed);
  if (table.rows.empty()) {
    throw Error(ErrorCode::kMissingCountryData,
                "every loan was dropped; first reason: " + table.dropped.front().detail);
  }
  return build_design_matrix(table, encoding);
}

SectorDataset build_sector_dataset(const FeatureTable& table, Sector s, bool include_indicator) {
  SectorDataset d;
  d.x = build_design_matrix(table, include_indicator ? SectorEncoding::binary(s) : SectorEncoding::none());
  const Index n = d.x.rows();
  d.y.resize(n);
  d.w.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    d.y[i] = row.funding_days;
    d.w[i] = row.sector == s ? 1.0 : 0.0;
  }
  d.sector = s;
  return d;
}

std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "train_fraction must lie in (0,1)");
  }
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(derive_seed(seed, 0x5b117ULL));
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  std::vector<Index> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<Index> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

DesignMatrix refit_scaling(const DesignMatrix& d, const std::vector<Index>& fit_rows) {
  const MatrixXd raw = d.raw_values();
  std::vector<bool> mask(static_cast<std::size_t>(d.cols()));
  for (Index j = 0; j < d.cols(); ++j) mask[static_cast<std::size_t>(j)] = d.scaling[static_cast<std::size_t>(j)].has_value();
  DesignMatrix out = d;
  out.scaling = fit_scaling(raw, mask, fit_rows);
  out.values = apply_scaling(raw, out.scaling);
  return out;
}

SplitResult train_test_split(const SectorDataset& d, double train_fraction, std::uint64_t seed) {
  validate_sector_dataset(d);
  auto [train_rows, test_rows] = split_indices(d.rows(), train_fraction, seed);
  if (train_rows.empty() || test_rows.empty()) {
    throw Error(ErrorCode::kDegenerateSplit, "one side of the split is empty");
  }
  SectorDataset rescaled = d;
  rescaled.x = refit_scaling(d.x, train_rows);
  SplitResult out{rescaled.select_rows(train_rows), rescaled.select_rows(test_rows), train_rows, test_rows};
  try {
    validate_sector_dataset(out.train);
    validate_sector_dataset(out.test);
  } catch (const Error& e) {
    throw Error(ErrorCode::kDegenerateSplit, e.what());
  }
  return out;
}

void write_bundle(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  std::vector<std::string> header = {"loan_id", "sector", "borrower_country", "funding_days"};
  for (const auto& n : base_feature_names()) header.push_back(n);
  out << csv::join(header) << '\n';
  for (const auto& row : table.rows) {
    std::vector<std::string> f = {row.loan_id, std::string(sector_name(row.sector)), row.borrower_country,
                                  csv::format_double(row.funding_days)};
    for (double v : row.features) f.push_back(csv::format_double(v));
    out << csv::join(f) << '\n';
  }
}

FeatureTable read_bundle(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const std::string file = path.filename().string();
  std::vector<std::string> expected = {"loan_id", "sector", "borrower_country", "funding_days"};
  for (const auto& n : base_feature_names()) expected.push_back(n);
  if (t.header != expected) throw Error(ErrorCode::kSchemaMismatch, file + ": unexpected bundle header");
  FeatureTable table;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != expected.size()) row_error(file, r + 1, "*", "wrong field count");
    LoanFeatureRow f;
    f.loan_id = row[0];
    auto s = parse_sector(row[1]);
    if (!s) row_error(file, r + 1, "sector", "unknown sector");
    f.sector = *s;
    f.borrower_country = row[2];
    if (!csv::parse_double(row[3], f.funding_days)) row_error(file, r + 1, "funding_days", "not a number");
    for (int k = 0; k < kBaseFeatureCount; ++k) {
      if (!csv::parse_double(row[static_cast<std::size_t>(4 + k)], f.features[k])) {
        row_error(file, r + 1, base_feature_names()[k], "not a number");
      }
    }
    table.rows.push_back(std::move(f));
  }
  return table;
}

LoanSummary summarize(const FeatureTable& table, const std::vector<LoanRecord>& loans,
                      std::size_t distinct_languages) {
  LoanSummary s;
  s.loans = table.rows.size();
  s.languages = distinct_languages;
  std::set<std::string> kept_ids, borrowers, lenders;
  double amount = 0.0, days = 0.0;
  for (const auto& row : table.rows) {
    kept_ids.insert(row.loan_id);
    borrowers.insert(row.borrower_country);
    amount += row.features[5];
    days += row.funding_days;
    ++s.sector_counts[static_cast<std::size_t>(row.sector)];
  }
  for (const auto& loan : loans) {
    if (!kept_ids.count(loan.loan_id)) continue;
    for (const auto& l : loan.lender_countries) lenders.insert(l);
  }
  s.borrower_countries = borrowers.size();
  s.lender_countries = lenders.size();
  if (s.loans > 0) {
    const double n = static_cast<double>(s.loans);
    s.mean_loan_amount = amount / n;
    s.mean_funding_days = days / n;
    double ss = 0.0;
    for (const auto& row : table.rows) ss += (row.funding_days - s.mean_funding_days) * (row.funding_days - s.mean_funding_days);
    s.sd_funding_days = s.loans > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return s;
}

}  // namespace kivafair
