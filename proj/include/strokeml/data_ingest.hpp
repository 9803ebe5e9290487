#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "strokeml/features.hpp"
#include "strokeml/matrix.hpp"

namespace strokeml {

/// One patient row of the stroke EHR table, with categorical fields kept as
/// their source strings.
struct EHRRecord {
  std::string id;
  std::string gender;
  double age = 0.0;
  int hypertension = 0;
  int heart_disease = 0;
  std::string ever_married;
  std::string work_type;
  std::string residence_type;
  double avg_glucose_level = 0.0;
  std::optional<double> bmi;
  std::string smoking_status;
  int stroke = 0;

  friend bool operator==(const EHRRecord&, const EHRRecord&) = default;
};

/// Level used when smoking status is blank in the source file.
inline constexpr std::string_view kUnknownSmoking = "Unknown";

/// Header expected in the input CSV; matched case-insensitively, any order.
std::vector<std::string> default_schema();

struct RejectedRow {
  std::size_t row = 0;  ///< 1-based data row number (header excluded)
  std::string column;
  std::string reason;
};

struct ParseResult {
  std::vector<EHRRecord> records;
  std::vector<RejectedRow> rejected;
};

/// Reads the EHR CSV. Rows that cannot be parsed or violate the record
/// invariants are listed in `rejected` instead of aborting the read, unless
/// `strict` is set, in which case the first such row throws UnparseableValue.
/// Missing BMI ("N/A", "NA" or blank) is kept as an empty optional; blank
/// smoking status becomes "Unknown".
ParseResult parse_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& schema = default_schema(),
                      bool strict = false);

/// Same as parse_csv, reading from an in-memory CSV document.
ParseResult parse_csv_text(std::string_view text,
                           const std::vector<std::string>& schema = default_schema(),
                           bool strict = false);

/// Writes records back out in the Kaggle column layout.
std::string to_csv(std::span<const EHRRecord> records);

/// Integer codes for the categorical columns plus the BMI imputation value.
///
/// Levels are ordered case-insensitively by name, so codes do not depend on
/// row order. For the binary columns this gives Female/No/Rural = 0 and
/// Male/Yes/Urban = 1.
struct EncodingMap {
  struct Categorical {
    Feature feature;
    std::vector<std::string> levels;  ///< code = position

    std::optional<int> code_of(std::string_view level) const;
  };

  std::vector<Categorical> categoricals;
  double bmi_imputation = 0.0;
  std::size_t bmi_observed = 0;

  const Categorical& categorical(Feature f) const;
  const std::string& decode(Feature f, int code) const;

  nlohmann::json to_json() const;
  static EncodingMap from_json(const nlohmann::json& j);
  /// FNV-1a digest of the canonical JSON form, as 16 hex digits.
  std::string digest() const;
};

EncodingMap fit_encoding(std::span<const EHRRecord> records);

/// Numeric design matrix with binary labels. Also used for any column subset
/// or projection of the ten encoded features; `feature_names` labels columns.
struct EncodedMatrix {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  /// Index of each row in the originally encoded table (row identity).
  std::vector<std::size_t> row_ids;
  std::string source;
  std::string encoding_digest;

  std::size_t rows() const noexcept { return features.rows(); }
  std::size_t cols() const noexcept { return features.cols(); }
  std::size_t count_label(int label) const;

  EncodedMatrix select_rows(std::span<const std::size_t> rows) const;
  EncodedMatrix select_columns(std::span<const std::size_t> cols) const;
  EncodedMatrix select_features(const std::vector<Feature>& features) const;

  /// Canonical CSV: header of feature names + "stroke", shortest round-trip
  /// number formatting.
  std::string to_csv() const;
};

EncodedMatrix encode(std::span<const EHRRecord> records, const EncodingMap& map,
                     std::string source = {});

/// Inverse of the categorical encoding for one encoded row.
EHRRecord decode_row(const EncodedMatrix& data, std::size_t row, const EncodingMap& map);

/// Draws a synthetic cohort shaped like the public stroke table: realistic
/// age-dependent comorbidity, marriage and work patterns, about 4% missing
/// BMI, and exactly round(n * class_balance) stroke-positive rows chosen with
/// probability increasing in a clinical risk score.
std::vector<EHRRecord> synthesize(std::size_t n, double class_balance, std::uint64_t seed);

}  // namespace strokeml
