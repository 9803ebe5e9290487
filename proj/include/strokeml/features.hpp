#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace strokeml {

/// The ten model inputs, in the fixed column order of every encoded matrix.
enum class Feature : std::size_t {
  Gender = 0,
  Age,
  Hypertension,
  HeartDisease,
  EverMarried,
  WorkType,
  ResidenceType,
  AvgGlucose,
  Bmi,
  SmokingStatus,
};

inline constexpr std::size_t kFeatureCount = 10;

inline constexpr std::array<Feature, kFeatureCount> kAllFeatures = {
    Feature::Gender,        Feature::Age,        Feature::Hypertension, Feature::HeartDisease,
    Feature::EverMarried,   Feature::WorkType,   Feature::ResidenceType, Feature::AvgGlucose,
    Feature::Bmi,           Feature::SmokingStatus,
};

/// Column names as they appear in the source CSV header (lower-cased).
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "gender",         "age",       "hypertension",   "heart_disease",     "ever_married",
    "work_type",      "residence_type", "avg_glucose_level", "bmi",       "smoking_status",
};

/// Short symbols used in reports and on the command line.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureSymbols = {
    "G", "A", "HT", "HD", "M", "W", "RT", "AG", "BMI", "SS",
};

constexpr std::size_t index_of(Feature f) { return static_cast<std::size_t>(f); }
constexpr std::string_view name_of(Feature f) { return kFeatureNames[index_of(f)]; }
constexpr std::string_view symbol_of(Feature f) { return kFeatureSymbols[index_of(f)]; }

/// Accepts a column name or a symbol, case-insensitively.
std::optional<Feature> parse_feature(std::string_view text);

std::vector<std::string> feature_names(const std::vector<Feature>& features);

}  // namespace strokeml
