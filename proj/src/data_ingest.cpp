#include "strokeml/data_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include "sorted_sum.hpp"
#include "strokeml/error.hpp"
#include "strokeml/random.hpp"
#include "strokeml/text_io.hpp"

namespace strokeml {

std::optional<Feature> parse_feature(std::string_view text) {
  const std::string key = to_lower(trim(text));
  for (Feature f : kAllFeatures) {
    if (key == name_of(f) || key == to_lower(symbol_of(f))) return f;
  }
  if (key == "residence") return Feature::ResidenceType;
  if (key == "avg_glucose" || key == "glucose") return Feature::AvgGlucose;
  if (key == "smoking") return Feature::SmokingStatus;
  return std::nullopt;
}

std::vector<std::string> feature_names(const std::vector<Feature>& features) {
  std::vector<std::string> out;
  out.reserve(features.size());
  for (Feature f : features) out.emplace_back(name_of(f));
  return out;
}

std::vector<std::string> default_schema() {
  return {"id",           "gender",    "age",            "hypertension",      "heart_disease", "ever_married",
          "work_type",    "residence_type", "avg_glucose_level", "bmi",     "smoking_status", "stroke"};
}

namespace {

struct RowError {
  std::string column;
  std::string reason;
};

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

bool is_missing_marker(std::string_view text) {
  const std::string lower = to_lower(trim(text));
  return lower.empty() || lower == "n/a" || lower == "na" || lower == "nan";
}

class RowReader {
 public:
  RowReader(const std::vector<std::string>& fields, const std::map<std::string, std::size_t>& columns)
      : fields_(fields), columns_(columns) {}

  std::string_view text(const std::string& column) const {
    const std::size_t idx = columns_.at(column);
    return idx < fields_.size() ? trim(fields_[idx]) : std::string_view{};
  }

  double number(const std::string& column) const {
    auto v = parse_number(text(column));
    if (!v) throw RowError{column, "not a number: '" + std::string(text(column)) + "'"};
    return *v;
  }

  int flag(const std::string& column) const {
    const double v = number(column);
    if (v != 0.0 && v != 1.0) throw RowError{column, "expected 0 or 1, got '" + std::string(text(column)) + "'"};
    return static_cast<int>(v);
  }

  std::string level(const std::string& column) const {
    std::string_view v = text(column);
    if (v.empty()) throw RowError{column, "empty categorical value"};
    return std::string(v);
  }

 private:
  const std::vector<std::string>& fields_;
  const std::map<std::string, std::size_t>& columns_;
};

EHRRecord read_record(const RowReader& row) {
  EHRRecord r;
  r.id = std::string(row.text("id"));
  r.gender = row.level("gender");
  r.age = row.number("age");
  if (r.age < 0.0 || r.age > 130.0) throw RowError{"age", "outside [0, 130]"};
  r.hypertension = row.flag("hypertension");
  r.heart_disease = row.flag("heart_disease");
  r.ever_married = row.level("ever_married");
  r.work_type = row.level("work_type");
  r.residence_type = row.level("residence_type");
  r.avg_glucose_level = row.number("avg_glucose_level");
  if (!(r.avg_glucose_level > 0.0)) throw RowError{"avg_glucose_level", "must be positive"};
  const std::string_view bmi = row.text("bmi");
  if (!is_missing_marker(bmi)) {
    auto v = parse_number(bmi);
    if (!v) throw RowError{"bmi", "not a number: '" + std::string(bmi) + "'"};
    if (*v <= 5.0 || *v >= 120.0) throw RowError{"bmi", "outside (5, 120)"};
    r.bmi = *v;
  }
  const std::string_view smoking = row.text("smoking_status");
  r.smoking_status = smoking.empty() ? std::string(kUnknownSmoking) : std::string(smoking);
  r.stroke = row.flag("stroke");
  return r;
}

}  // namespace

ParseResult parse_csv_text(std::string_view text, const std::vector<std::string>& schema, bool strict) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) throw Error(ErrorKind::EmptyFile, "no header row");

  std::map<std::string, std::size_t> columns;
  const auto header = split_csv_line(lines.front());
  for (std::size_t i = 0; i < header.size(); ++i) columns.emplace(to_lower(trim(header[i])), i);

  std::vector<std::string> required = default_schema();
  for (const auto& name : schema) {
    const std::string lower = to_lower(name);
    if (std::find(required.begin(), required.end(), lower) == required.end()) required.push_back(lower);
  }
  // Report the caller's schema order first so error messages follow it.
  for (const auto& name : schema) {
    if (!columns.contains(to_lower(name))) throw Error(ErrorKind::MissingColumn, to_lower(name));
  }
  for (const auto& name : required) {
    if (!columns.contains(name)) throw Error(ErrorKind::MissingColumn, name);
  }
  if (lines.size() == 1) throw Error(ErrorKind::EmptyFile, "header present but no data rows");

  ParseResult result;
  result.records.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_csv_line(lines[i]);
    try {
      result.records.push_back(read_record(RowReader(fields, columns)));
    } catch (const RowError& e) {
      if (strict) {
        throw Error(ErrorKind::UnparseableValue,
                    "row " + std::to_string(i) + ", column " + e.column + ": " + e.reason);
      }
      result.rejected.push_back({i, e.column, e.reason});
    }
  }
  return result;
}

ParseResult parse_csv(const std::filesystem::path& path, const std::vector<std::string>& schema, bool strict) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorKind::Io, "input file not found: '" + path.string() + "'");
  }
  return parse_csv_text(read_text_file(path), schema, strict);
}

std::string to_csv(std::span<const EHRRecord> records) {
  std::string out =
      "id,gender,age,hypertension,heart_disease,ever_married,work_type,Residence_type,"
      "avg_glucose_level,bmi,smoking_status,stroke\n";
  for (const auto& r : records) {
    out += r.id + ',' + r.gender + ',' + format_double(r.age) + ',' + std::to_string(r.hypertension) + ',' +
           std::to_string(r.heart_disease) + ',' + r.ever_married + ',' + r.work_type + ',' + r.residence_type +
           ',' + format_double(r.avg_glucose_level) + ',' + (r.bmi ? format_double(*r.bmi) : "N/A") + ',' +
           r.smoking_status + ',' + std::to_string(r.stroke) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Encoding

namespace {

constexpr std::array<Feature, 5> kCategoricalFeatures = {
    Feature::Gender, Feature::EverMarried, Feature::WorkType, Feature::ResidenceType, Feature::SmokingStatus,
};

const std::string& categorical_value(const EHRRecord& r, Feature f) {
  switch (f) {
    case Feature::Gender: return r.gender;
    case Feature::EverMarried: return r.ever_married;
    case Feature::WorkType: return r.work_type;
    case Feature::ResidenceType: return r.residence_type;
    case Feature::SmokingStatus: return r.smoking_status;
    default: break;
  }
  throw Error(ErrorKind::InvalidArgument, std::string(name_of(f)) + " is not categorical");
}

bool level_less(const std::string& a, const std::string& b) {
  const std::string la = to_lower(a);
  const std::string lb = to_lower(b);
  return la != lb ? la < lb : a < b;
}

}  // namespace

std::optional<int> EncodingMap::Categorical::code_of(std::string_view level) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == level) return static_cast<int>(i);
  }
  return std::nullopt;
}

const EncodingMap::Categorical& EncodingMap::categorical(Feature f) const {
  for (const auto& c : categoricals) {
    if (c.feature == f) return c;
  }
  throw Error(ErrorKind::InvalidArgument, std::string(name_of(f)) + " has no categorical encoding");
}

const std::string& EncodingMap::decode(Feature f, int code) const {
  const auto& c = categorical(f);
  if (code < 0 || static_cast<std::size_t>(code) >= c.levels.size()) {
    throw Error(ErrorKind::UnknownLevel, std::string(name_of(f)) + " code " + std::to_string(code));
  }
  return c.levels[static_cast<std::size_t>(code)];
}

nlohmann::json EncodingMap::to_json() const {
  nlohmann::json j;
  j["column_order"] = kFeatureNames;
  auto& cats = j["categorical"];
  cats = nlohmann::json::object();
  for (const auto& c : categoricals) {
    nlohmann::json levels = nlohmann::json::object();
    for (std::size_t i = 0; i < c.levels.size(); ++i) levels[c.levels[i]] = i;
    cats[std::string(name_of(c.feature))] = {{"levels", c.levels}, {"codes", levels}};
  }
  j["imputation"] = {{"bmi", {{"policy", "mean_of_observed"}, {"value", bmi_imputation}, {"observed", bmi_observed}}},
                     {"smoking_status", {{"policy", "own_level"}, {"level", kUnknownSmoking}}}};
  return j;
}

EncodingMap EncodingMap::from_json(const nlohmann::json& j) {
  EncodingMap map;
  for (Feature f : kCategoricalFeatures) {
    const std::string key(name_of(f));
    map.categoricals.push_back({f, j.at("categorical").at(key).at("levels").get<std::vector<std::string>>()});
  }
  map.bmi_imputation = j.at("imputation").at("bmi").at("value").get<double>();
  map.bmi_observed = j.at("imputation").at("bmi").at("observed").get<std::size_t>();
  return map;
}

std::string EncodingMap::digest() const { return hex64(fnv1a(to_json().dump())); }

EncodingMap fit_encoding(std::span<const EHRRecord> records) {
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "fit_encoding needs at least one record");
  EncodingMap map;
  for (Feature f : kCategoricalFeatures) {
    std::vector<std::string> levels;
    for (const auto& r : records) {
      const auto& v = categorical_value(r, f);
      if (std::find(levels.begin(), levels.end(), v) == levels.end()) levels.push_back(v);
    }
    std::sort(levels.begin(), levels.end(), level_less);
    map.categoricals.push_back({f, std::move(levels)});
  }
  std::vector<double> observed;
  for (const auto& r : records)
    if (r.bmi) observed.push_back(*r.bmi);
  map.bmi_observed = observed.size();
  const double sum = detail::sorted_sum(std::move(observed));
  map.bmi_imputation = map.bmi_observed > 0 ? sum / static_cast<double>(map.bmi_observed) : 0.0;
  return map;
}

std::size_t EncodedMatrix::count_label(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

EncodedMatrix EncodedMatrix::select_rows(std::span<const std::size_t> rows) const {
  EncodedMatrix out;
  out.features = Matrix(rows.size(), cols());
  out.labels.reserve(rows.size());
  out.row_ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = features.row(rows[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels.push_back(labels[rows[i]]);
    out.row_ids.push_back(row_ids[rows[i]]);
  }
  out.feature_names = feature_names;
  out.source = source;
  out.encoding_digest = encoding_digest;
  return out;
}

EncodedMatrix EncodedMatrix::select_columns(std::span<const std::size_t> cols_to_keep) const {
  EncodedMatrix out;
  out.features = Matrix(rows(), cols_to_keep.size());
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t c = 0; c < cols_to_keep.size(); ++c) out.features(r, c) = features(r, cols_to_keep[c]);
  for (std::size_t c : cols_to_keep) out.feature_names.push_back(feature_names.at(c));
  out.labels = labels;
  out.row_ids = row_ids;
  out.source = source;
  out.encoding_digest = encoding_digest;
  return out;
}

EncodedMatrix EncodedMatrix::select_features(const std::vector<Feature>& wanted) const {
  std::vector<std::size_t> idx;
  for (Feature f : wanted) {
    auto it = std::find(feature_names.begin(), feature_names.end(), name_of(f));
    if (it == feature_names.end()) throw Error(ErrorKind::SchemaMismatch, "no column " + std::string(name_of(f)));
    idx.push_back(static_cast<std::size_t>(it - feature_names.begin()));
  }
  return select_columns(idx);
}

std::string EncodedMatrix::to_csv() const {
  std::string out;
  for (const auto& name : feature_names) out += name + ',';
  out += "stroke\n";
  for (std::size_t r = 0; r < rows(); ++r) {
    for (double v : features.row(r)) out += format_double(v) + ',';
    out += std::to_string(labels[r]) + '\n';
  }
  return out;
}

EncodedMatrix encode(std::span<const EHRRecord> records, const EncodingMap& map, std::string source) {
  EncodedMatrix out;
  out.features = Matrix(records.size(), kFeatureCount);
  out.labels.reserve(records.size());
  out.row_ids.resize(records.size());
  std::iota(out.row_ids.begin(), out.row_ids.end(), std::size_t{0});
  for (Feature f : kAllFeatures) out.feature_names.emplace_back(name_of(f));
  out.source = std::move(source);
  out.encoding_digest = map.digest();

  for (std::size_t i = 0; i < records.size(); ++i) {
    const EHRRecord& r = records[i];
    auto row = out.features.row(i);
    for (Feature f : kCategoricalFeatures) {
      const auto& value = categorical_value(r, f);
      auto code = map.categorical(f).code_of(value);
      if (!code) throw Error(ErrorKind::UnknownLevel, std::string(name_of(f)) + "='" + value + "'");
      row[index_of(f)] = *code;
    }
    row[index_of(Feature::Age)] = r.age;
    row[index_of(Feature::Hypertension)] = r.hypertension;
    row[index_of(Feature::HeartDisease)] = r.heart_disease;
    row[index_of(Feature::AvgGlucose)] = r.avg_glucose_level;
    row[index_of(Feature::Bmi)] = r.bmi.value_or(map.bmi_imputation);
    out.labels.push_back(r.stroke);
  }
  return out;
}

EHRRecord decode_row(const EncodedMatrix& data, std::size_t row, const EncodingMap& map) {
  const auto v = data.features.row(row);
  const auto code = [&](Feature f) { return static_cast<int>(std::lround(v[index_of(f)])); };
  EHRRecord r;
  r.id = std::to_string(data.row_ids.at(row));
  r.gender = map.decode(Feature::Gender, code(Feature::Gender));
  r.age = v[index_of(Feature::Age)];
  r.hypertension = code(Feature::Hypertension);
  r.heart_disease = code(Feature::HeartDisease);
  r.ever_married = map.decode(Feature::EverMarried, code(Feature::EverMarried));
  r.work_type = map.decode(Feature::WorkType, code(Feature::WorkType));
  r.residence_type = map.decode(Feature::ResidenceType, code(Feature::ResidenceType));
  r.avg_glucose_level = v[index_of(Feature::AvgGlucose)];
  r.bmi = v[index_of(Feature::Bmi)];
  r.smoking_status = map.decode(Feature::SmokingStatus, code(Feature::SmokingStatus));
  r.stroke = data.labels.at(row);
  return r;
}

// ---------------------------------------------------------------------------
// Synthetic cohort

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

template <std::size_t N>
std::string pick(RandomSource& rng, const std::array<std::pair<const char*, double>, N>& table) {
  double u = rng.uniform();
  for (const auto& [level, p] : table) {
    if (u < p) return level;
    u -= p;
  }
  return table.back().first;
}

EHRRecord synth_record(RandomSource& rng, std::size_t index) {
  EHRRecord r;
  r.id = std::to_string(index + 1);

  const double g = rng.uniform();
  r.gender = g < 0.586 ? "Female" : (g < 0.9998 ? "Male" : "Other");
  r.age = rng.uniform(0.08, 82.0);
  if (r.age >= 2.0) r.age = std::round(r.age);
  const double age01 = r.age / 82.0;

  r.hypertension = rng.bernoulli(0.01 + 0.30 * age01 * age01) ? 1 : 0;
  const double hd_scale = r.gender == "Male" ? 1.5 : 1.0;
  r.heart_disease = rng.bernoulli(0.002 + 0.15 * hd_scale * age01 * age01 * age01) ? 1 : 0;

  r.ever_married = (r.age >= 18.0 && rng.bernoulli(0.95 * logistic((r.age - 27.0) / 5.0))) ? "Yes" : "No";

  if (r.age < 16.0) {
    r.work_type = rng.bernoulli(0.96) ? "children" : "Never_worked";
  } else if (r.age < 22.0) {
    r.work_type = pick<3>(rng, {{{"Never_worked", 0.08}, {"Private", 0.80}, {"Govt_job", 0.12}}});
  } else {
    const double self = r.age > 55.0 ? 0.26 : 0.12;
    r.work_type = pick<4>(rng, {{{"Self-employed", self}, {"Govt_job", 0.15}, {"Never_worked", 0.004},
                                  {"Private", 1.0 - self - 0.154}}});
  }

  r.residence_type = rng.bernoulli(0.508) ? "Urban" : "Rural";

  const bool diabetic = rng.bernoulli(0.04 + 0.16 * age01);
  const double log_glucose = diabetic ? rng.normal(std::log(205.0), 0.15)
                                      : rng.normal(std::log(88.0) + 0.0025 * r.age, 0.17);
  r.avg_glucose_level = std::clamp(std::round(std::exp(log_glucose) * 100.0) / 100.0, 55.0, 272.0);

  if (!rng.bernoulli(0.04)) {
    const double mean = r.age < 18.0 ? 15.5 + 0.65 * r.age : 29.5 + 2.0 * (diabetic ? 1.0 : 0.0);
    const double bmi = std::clamp(rng.normal(mean, r.age < 18.0 ? 3.5 : 6.5), 10.3, 97.6);
    r.bmi = std::round(bmi * 10.0) / 10.0;
  }

  if (r.age < 12.0) {
    r.smoking_status = rng.bernoulli(0.9) ? "Unknown" : "never smoked";
  } else {
    const double former = r.age > 50.0 ? 0.23 : 0.14;
    r.smoking_status = pick<4>(rng, {{{"never smoked", 0.40}, {"formerly smoked", former}, {"smokes", 0.16},
                                      {"Unknown", 0.44 - former}}});
  }
  return r;
}

double stroke_logit(const EHRRecord& r) {
  return -8.2 + 0.075 * r.age + 0.45 * r.hypertension + 0.45 * r.heart_disease +
         0.005 * (r.avg_glucose_level - 100.0) + (r.smoking_status == "smokes" ? 0.2 : 0.0);
}

}  // namespace

std::vector<EHRRecord> synthesize(std::size_t n, double class_balance, std::uint64_t seed) {
  if (!(class_balance > 0.0 && class_balance < 1.0)) {
    throw Error(ErrorKind::InvalidBalance, "class_balance must be in (0, 1), got " + format_double(class_balance));
  }
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "synthesize needs n >= 2");

  RandomSource rng(seed);
  std::vector<EHRRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) records.push_back(synth_record(rng, i));

  // Gumbel top-k: exactly k positives, drawn without replacement with
  // probability proportional to exp(risk logit).
  const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * class_balance));
  std::vector<std::pair<double, std::size_t>> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    keys[i] = {stroke_logit(records[i]) - std::log(-std::log(u)), i};
  }
  std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t i = 0; i < k; ++i) records[keys[i].second].stroke = 1;
  return records;
}

}  // namespace strokeml
