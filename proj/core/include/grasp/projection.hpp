#pragma once

#include "grasp/llm_client.hpp"

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace grasp {

using Point = std::vector<double>;

enum class ProjectionMethod { linear, precomputed };

ProjectionMethod projection_method_from_string(const std::string& s);

struct ProjectionConfig {
  ProjectionMethod method = ProjectionMethod::linear;
  std::size_t target_dimension = 20;
  std::filesystem::path precomputed_path;  // used by ProjectionMethod::precomputed
};

class ProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Principal-component projection: centers the data and maps it onto the top
/// `target_dimension` eigenvectors of the covariance matrix. Each direction's
/// sign is fixed so its largest-magnitude coordinate is positive.
std::vector<Point> project_linear(const std::vector<EmbeddingVector>& vectors, std::size_t target_dimension);

/// Whitespace-separated rows, one per example.
std::vector<Point> load_points(const std::filesystem::path& path);
void save_points(const std::filesystem::path& path, const std::vector<Point>& points);

/// Dispatches on cfg.method. For precomputed imports `vectors` is only used
/// for its count, which must match the file's row count.
std::vector<Point> project(const std::vector<EmbeddingVector>& vectors, const ProjectionConfig& cfg);

/// Precomputed import validated against an expected row count.
std::vector<Point> import_projection(const std::filesystem::path& path, std::size_t expected_rows,
                                     std::size_t expected_dimension);

}  // namespace grasp
