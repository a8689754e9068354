#include "kivafair/data_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace kivafair {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyTreatmentGroup: return "EmptyTreatmentGroup";
    case ErrorCode::kEmptyControlGroup: return "EmptyControlGroup";
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kRowParseError: return "RowParseError";
    case ErrorCode::kUnknownSector: return "UnknownSector";
    case ErrorCode::kMissingCountryData: return "MissingCountryData";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDegenerateSplit: return "DegenerateSplit";
    case ErrorCode::kSingularDesign: return "SingularDesign";
    case ErrorCode::kTooFewRows: return "TooFewRows";
    case ErrorCode::kSingleClassInput: return "SingleClassInput";
    case ErrorCode::kDivergedSeparableData: return "DivergedSeparableData";
    case ErrorCode::kColumnMismatch: return "ColumnMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kNumericalSingularity: return "NumericalSingularity";
    case ErrorCode::kEmptyDraws: return "EmptyDraws";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kDegenerateTreatment: return "DegenerateTreatment";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

namespace {

constexpr std::array<std::string_view, kSectorCount> kSectorNames = {
    "Manufacturing", "Transportation", "Clothing",     "Personal Use",
    "Housing",       "Food",           "Arts",         "Retail",
    "Construction",  "Agriculture",    "Services",     "Education",
};

std::string squash(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

}  // namespace

const std::array<Sector, kSectorCount>& all_sectors() {
  static const std::array<Sector, kSectorCount> sectors = [] {
    std::array<Sector, kSectorCount> s{};
    for (int i = 0; i < kSectorCount; ++i) s[i] = static_cast<Sector>(i);
    return s;
  }();
  return sectors;
}

std::string_view sector_name(Sector s) { return kSectorNames[static_cast<int>(s)]; }

std::optional<Sector> parse_sector(std::string_view text) {
  const std::string key = squash(text);
  if (key.empty()) return std::nullopt;
  for (int i = 0; i < kSectorCount; ++i) {
    if (squash(kSectorNames[i]) == key) return static_cast<Sector>(i);
  }
  return std::nullopt;
}

Sector sector_from_string(std::string_view text) {
  if (auto s = parse_sector(text)) return *s;
  throw Error(ErrorCode::kUnknownSector, "unknown sector '" + std::string(text) + "'");
}

FundingTime FundingTime::between(Timestamp posted, Timestamp funded) {
  if (funded < posted) {
    throw Error(ErrorCode::kInvalidArgument, "funded_at precedes posted_at");
  }
  const auto seconds = (funded - posted).count();
  return FundingTime{static_cast<double>(seconds) / 86400.0};
}

void validate(const LoanRecord& loan) {
  if (loan.funded_at < loan.posted_at) {
    throw Error(ErrorCode::kInvalidArgument, "loan " + loan.loan_id + ": funded_at precedes posted_at");
  }
  if (!(loan.loan_amount >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "loan " + loan.loan_id + ": negative loan_amount");
  }
  if (loan.lender_countries.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "loan " + loan.loan_id + ": no lender countries");
  }
}

void validate(const CountryIndicators& ind) {
  if (ind.ease_of_business < 1) {
    throw Error(ErrorCode::kInvalidArgument, ind.country + ": ease_of_business rank must be >= 1");
  }
  if (!(ind.internet_penetration >= 0.0 && ind.internet_penetration <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, ind.country + ": internet_penetration outside [0,100]");
  }
}

void validate(const PairFeatures& pf) {
  if (!(pf.distance >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative distance");
  if (!(pf.migrants >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative migrant count");
}

std::optional<Index> DesignMatrix::find_column(std::string_view name) const {
  auto it = std::find(column_names.begin(), column_names.end(), name);
  if (it == column_names.end()) return std::nullopt;
  return static_cast<Index>(it - column_names.begin());
}

Index DesignMatrix::column(std::string_view name) const {
  if (auto j = find_column(name)) return *j;
  throw Error(ErrorCode::kColumnMismatch, "no column named '" + std::string(name) + "'");
}

DesignMatrix DesignMatrix::select_rows(const std::vector<Index>& rows) const {
  DesignMatrix out;
  out.values.resize(static_cast<Index>(rows.size()), cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.values.row(static_cast<Index>(i)) = values.row(rows[i]);
  out.column_names = column_names;
  out.scaling = scaling;
  out.intercept_index = intercept_index;
  return out;
}

DesignMatrix DesignMatrix::select_columns(const std::vector<std::string>& names) const {
  DesignMatrix out;
  out.values.resize(rows(), static_cast<Index>(names.size()));
  for (std::size_t k = 0; k < names.size(); ++k) {
    const Index j = column(names[k]);
    out.values.col(static_cast<Index>(k)) = values.col(j);
    out.column_names.push_back(names[k]);
    out.scaling.push_back(scaling[j]);
    if (intercept_index && *intercept_index == j) out.intercept_index = static_cast<Index>(k);
  }
  return out;
}

MatrixXd DesignMatrix::raw_values() const {
  MatrixXd raw = values;
  for (Index j = 0; j < cols(); ++j) {
    if (const auto& s = scaling[j]) raw.col(j) = (values.col(j).array() * s->sd + s->mean).matrix();
  }
  return raw;
}

void validate(const DesignMatrix& x) {
  if (static_cast<Index>(x.column_names.size()) != x.cols() ||
      static_cast<Index>(x.scaling.size()) != x.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "design metadata does not match column count");
  }
  if (x.intercept_index && (*x.intercept_index < 0 || *x.intercept_index >= x.cols())) {
    throw Error(ErrorCode::kDimensionMismatch, "intercept index out of range");
  }
  if (!x.values.allFinite()) throw Error(ErrorCode::kInvalidArgument, "design contains non-finite values");
  for (Index j = 0; j < x.cols(); ++j) {
    if (x.scaling[static_cast<std::size_t>(j)] || (x.intercept_index && *x.intercept_index == j)) continue;
    const bool dummy = (x.values.col(j).array() == 0.0 || x.values.col(j).array() == 1.0).all();
    if (!dummy) throw Error(ErrorCode::kInvalidArgument, "unscaled column " + x.column_names[static_cast<std::size_t>(j)] + " is not 0/1");
  }
}

std::vector<std::optional<ColumnScaling>> fit_scaling(const MatrixXd& raw,
                                                      const std::vector<bool>& standardize,
                                                      const std::vector<Index>& fit_rows) {
  if (static_cast<Index>(standardize.size()) != raw.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "standardize mask length");
  }
  std::vector<std::optional<ColumnScaling>> out(standardize.size());
  const double n = static_cast<double>(fit_rows.size());
  for (Index j = 0; j < raw.cols(); ++j) {
    if (!standardize[j]) continue;
    if (fit_rows.empty()) throw Error(ErrorCode::kEmptyInput, "cannot fit scaling on zero rows");
    double mean = 0.0;
    for (Index i : fit_rows) mean += raw(i, j);
    mean /= n;
    double ss = 0.0;
    for (Index i : fit_rows) ss += (raw(i, j) - mean) * (raw(i, j) - mean);
    double sd = fit_rows.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    if (!(sd > 0.0)) sd = 1.0;
    out[j] = ColumnScaling{mean, sd};
  }
  return out;
}

MatrixXd apply_scaling(const MatrixXd& raw, const std::vector<std::optional<ColumnScaling>>& scaling) {
  MatrixXd out = raw;
  for (Index j = 0; j < raw.cols(); ++j) {
    if (const auto& s = scaling[j]) out.col(j) = ((raw.col(j).array() - s->mean) / s->sd).matrix();
  }
  return out;
}

Index SectorDataset::treated_count() const { return static_cast<Index>((w.array() > 0.5).count()); }
Index SectorDataset::control_count() const { return rows() - treated_count(); }

std::vector<Index> SectorDataset::treated_rows() const {
  std::vector<Index> out;
  for (Index i = 0; i < w.size(); ++i)
    if (w[i] > 0.5) out.push_back(i);
  return out;
}

std::vector<Index> SectorDataset::control_rows() const {
  std::vector<Index> out;
  for (Index i = 0; i < w.size(); ++i)
    if (w[i] <= 0.5) out.push_back(i);
  return out;
}

SectorDataset SectorDataset::select_rows(const std::vector<Index>& rows) const {
  SectorDataset out;
  out.x = x.select_rows(rows);
  out.y.resize(static_cast<Index>(rows.size()));
  out.w.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.y[static_cast<Index>(i)] = y[rows[i]];
    out.w[static_cast<Index>(i)] = w[rows[i]];
  }
  out.sector = sector;
  return out;
}

void validate_sector_dataset(const SectorDataset& d) {
  if (d.y.size() != d.w.size() || d.y.size() != d.x.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "rows(X)=" + std::to_string(d.x.rows()) + ", |y|=" + std::to_string(d.y.size()) +
                    ", |w|=" + std::to_string(d.w.size()));
  }
  for (Index i = 0; i < d.w.size(); ++i) {
    if (d.w[i] != 0.0 && d.w[i] != 1.0) throw Error(ErrorCode::kInvalidArgument, "treatment must be 0/1");
  }
  if (d.treated_count() == 0) throw Error(ErrorCode::kEmptyTreatmentGroup, "no treated rows");
  if (d.control_count() == 0) throw Error(ErrorCode::kEmptyControlGroup, "no control rows");
}

void validate(const SpikeSlabHyper& h) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
  };
  require(h.a > 0 && h.b > 0, "Beta prior shapes must be positive");
  require(h.alpha1 > 0 && h.alpha2 > 0, "sigma^2 prior parameters must be positive");
  require(h.s2 > 0, "tau^2 prior scale must be positive");
  require(h.theta_init > 0 && h.theta_init < 1, "theta_init must lie in (0,1)");
  require(h.burn_in >= 0, "burn_in must be >= 0");
  require(h.draws >= 1, "draws must be >= 1");
  require(h.lambda >= 0, "lambda must be >= 0");
}

void validate(const PosteriorDraws& d) {
  const Index t = d.beta.rows();
  const Index p = d.beta.cols();
  if (d.pi.rows() != t || d.pi.cols() != p || d.theta.size() != t || d.tau2.size() != t ||
      d.sigma2.size() != t || static_cast<Index>(d.column_names.size()) != p) {
    throw Error(ErrorCode::kDimensionMismatch, "posterior draw arrays disagree in shape");
  }
  for (Index r = 0; r < t; ++r) {
    if (!(d.theta[r] >= 0.0 && d.theta[r] <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "theta outside [0,1]");
    if (!(d.tau2[r] > 0.0) || !(d.sigma2[r] > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "variance draw not positive");
    }
    for (Index j = 0; j < p; ++j) {
      if (d.pi(r, j) > 1) throw Error(ErrorCode::kInvalidArgument, "pi must be 0/1");
      if (d.pi(r, j) == 0 && d.beta(r, j) != 0.0) {
        throw Error(ErrorCode::kInvalidArgument, "excluded coefficient is not exactly zero");
      }
    }
  }
}

std::string_view method_name(AteMethod m) {
  switch (m) {
    case AteMethod::kNaive: return "Naive";
    case AteMethod::kBaselineLR: return "BaselineLR";
    case AteMethod::kDreSsr: return "DreSsr";
  }
  return "Unknown";
}

AteResult AteResult::with_normal_ci(AteMethod method, double estimate, double std_error,
                                    std::optional<Sector> sector) {
  if (!(std_error >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "standard error must be >= 0");
  AteResult r;
  r.method = method;
  r.estimate = estimate;
  r.std_error = std_error;
  r.ci_low = estimate - kZ975 * std_error;
  r.ci_high = estimate + kZ975 * std_error;
  r.sector = sector;
  return r;
}

void validate(const AteResult& r) {
  if (!(r.std_error >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative standard error");
  if (!(r.ci_low <= r.estimate && r.estimate <= r.ci_high)) {
    throw Error(ErrorCode::kInvalidArgument, "estimate outside its confidence interval");
  }
}

}  // namespace kivafair
