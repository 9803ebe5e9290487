#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "strokeml/data_ingest.hpp"
#include "strokeml/matrix.hpp"

namespace strokeml {

struct EigenDecomposition {
  std::vector<double> values;  ///< descending
  Matrix vectors;              ///< column i is the unit eigenvector for values[i]
  int sweeps = 0;
};

struct JacobiOptions {
  /// Converged when the off-diagonal Frobenius norm falls below
  /// tolerance * max(1, ||C||_F).
  double tolerance = 1e-12;
  int max_sweeps = 100;
  double symmetry_tolerance = 1e-10;
};

/// Cyclic Jacobi eigensolver for a real symmetric matrix.
EigenDecomposition eig_sym(const Matrix& c, const JacobiOptions& options = {});

struct StandardizedMatrix {
  Matrix z;
  std::vector<double> means;
  std::vector<double> sds;  ///< sample standard deviations (n - 1)
  std::vector<std::string> names;
};

StandardizedMatrix standardize(const EncodedMatrix& data);

struct PCAModel {
  std::vector<std::string> names;
  std::vector<double> means;
  std::vector<double> sds;
  std::vector<double> eigenvalues;  ///< descending
  Matrix loadings;                  ///< p x p, column i = component i

  std::size_t dims() const noexcept { return eigenvalues.size(); }
  std::vector<double> explained_ratio() const;
  double cumulative_ratio(std::size_t k) const;

  nlohmann::json to_json() const;
  friend bool operator==(const PCAModel&, const PCAModel&) = default;
};

/// Standardize, sample covariance, Jacobi eigendecomposition. Each loading
/// column is signed so its largest-magnitude entry is positive.
PCAModel fit_pca(const EncodedMatrix& data);

struct LoadingRow {
  std::string feature;
  double pc1 = 0.0;
  double pc2 = 0.0;
  bool strong_pc1 = false;
  bool strong_pc2 = false;
};

/// Threshold for a "strong" loading: the magnitude each of ten features
/// would have if a unit loading vector were spread evenly, sqrt(1/10).
inline constexpr double kStrongLoadingThreshold = 0.31;

std::vector<LoadingRow> loadings_report(const PCAModel& model, double threshold = kStrongLoadingThreshold);

struct BiplotArrow {
  std::string feature;
  double x = 0.0;  ///< loading on PC1 * sqrt(lambda1)
  double y = 0.0;  ///< loading on PC2 * sqrt(lambda2)
};

std::vector<BiplotArrow> biplot_coords(const PCAModel& model);

struct ScoreMatrix {
  Matrix scores;             ///< n x k
  std::vector<double> cos2;  ///< quality of representation on PC1-PC2
};

/// Projects data with the model's own standardization parameters.
ScoreMatrix transform(const PCAModel& model, const EncodedMatrix& data, std::size_t k);

/// Same projection, packaged as a design matrix with columns PC1..PCk.
EncodedMatrix project(const PCAModel& model, const EncodedMatrix& data, std::size_t k);

std::string scree_csv(const PCAModel& model);
std::string loadings_csv(const std::vector<LoadingRow>& rows);
std::string biplot_csv(const std::vector<BiplotArrow>& arrows);
std::string scores_csv(const ScoreMatrix& scores, const std::vector<int>& labels);

}  // namespace strokeml
