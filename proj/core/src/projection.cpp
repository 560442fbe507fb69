#include "grasp/projection.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace grasp {

ProjectionMethod projection_method_from_string(const std::string& s) {
  if (s == "in-repo-linear" || s == "linear" || s == "pca") return ProjectionMethod::linear;
  if (s == "precomputed-import" || s == "precomputed") return ProjectionMethod::precomputed;
  throw ProjectionError("unknown projection method '" + s + "'");
}

std::vector<Point> project_linear(const std::vector<EmbeddingVector>& vectors, std::size_t target_dimension) {
  if (vectors.empty()) throw ProjectionError("cannot project an empty set of vectors");
  const std::size_t dim = vectors.front().dimension();
  for (const auto& v : vectors) {
    if (v.dimension() != dim) throw ProjectionError("vectors have differing dimensions");
  }
  if (target_dimension < 2) throw ProjectionError("target dimension must be >= 2");
  if (target_dimension > dim) {
    throw ProjectionError("target dimension " + std::to_string(target_dimension) + " exceeds input dimension " +
                          std::to_string(dim));
  }

  const auto n = static_cast<Eigen::Index>(vectors.size());
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(vectors[i].values.data(), d);
  }
  x.rowwise() -= x.colwise().mean();

  const Eigen::MatrixXd cov = (x.transpose() * x) / std::max<double>(1.0, static_cast<double>(n - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw ProjectionError("eigendecomposition failed");

  // Eigenvalues ascend; take the last target_dimension columns in reverse.
  const auto k = static_cast<Eigen::Index>(target_dimension);
  Eigen::MatrixXd basis(d, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    basis.col(c) = v;
  }

  const Eigen::MatrixXd y = x * basis;
  std::vector<Point> out(vectors.size(), Point(target_dimension));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < k; ++c) out[i][c] = y(i, c);
  }
  return out;
}

std::vector<Point> load_points(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProjectionError("cannot open projection file " + path.string());
  std::vector<Point> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    Point p;
    double v = 0;
    while (ss >> v) p.push_back(v);
    if (!ss.eof()) {
      throw ProjectionError(path.string() + ":" + std::to_string(lineno) + ": not a number");
    }
    if (p.empty()) continue;
    for (double x : p) {
      if (!std::isfinite(x)) throw ProjectionError(path.string() + ":" + std::to_string(lineno) + ": non-finite value");
    }
    if (!rows.empty() && p.size() != rows.front().size()) {
      throw ProjectionError(path.string() + ":" + std::to_string(lineno) + ": row has " + std::to_string(p.size()) +
                            " values, expected " + std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(p));
  }
  return rows;
}

void save_points(const std::filesystem::path& path, const std::vector<Point>& points) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ProjectionError("cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& p : points) {
    for (std::size_t i = 0; i < p.size(); ++i) out << (i ? " " : "") << p[i];
    out << '\n';
  }
}

std::vector<Point> import_projection(const std::filesystem::path& path, std::size_t expected_rows,
                                     std::size_t expected_dimension) {
  auto rows = load_points(path);
  if (rows.size() != expected_rows) {
    throw ProjectionError("projection file " + path.string() + " has " + std::to_string(rows.size()) +
                          " rows for " + std::to_string(expected_rows) + " inputs");
  }
  if (expected_dimension != 0 && !rows.empty() && rows.front().size() != expected_dimension) {
    throw ProjectionError("projection file " + path.string() + " has dimension " +
                          std::to_string(rows.front().size()) + ", expected " + std::to_string(expected_dimension));
  }
  return rows;
}

std::vector<Point> project(const std::vector<EmbeddingVector>& vectors, const ProjectionConfig& cfg) {
  if (cfg.method == ProjectionMethod::precomputed) {
    return import_projection(cfg.precomputed_path, vectors.size(), cfg.target_dimension);
  }
  return project_linear(vectors, cfg.target_dimension);
}

}  // namespace grasp
