#pragma once

#include "egvq/types.hpp"

#include <filesystem>

namespace egvq {

enum class InitMethod { kmeans_plus_plus, random_sample };

std::string to_string(InitMethod init);
InitMethod init_method_from_string(const std::string& name);

struct TrainConfig {
  int max_iterations = 25;
  double convergence_tolerance = 1e-4;  // relative inertia change
  std::uint64_t seed = 0;
  InitMethod init = InitMethod::kmeans_plus_plus;
};

struct QuantizeResult {
  VectorX<std::uint32_t> indices;
  Matrix quantized;
};

/// Nearest codeword per row under squared Euclidean distance, ties broken
/// by the lowest codeword index. Distances accumulate in double regardless
/// of storage precision. Bumps the codebook's usage counters, one count
/// per row.
QuantizeResult quantize(const Codebook& codebook, const Eigen::Ref<const Matrix>& vectors);

/// Assignment core shared by quantize and the trainer: for every row of
/// `vectors` finds the nearest row of `codewords`. `sq_dists`, when
/// non-null, receives the squared distances clamped to be nonnegative.
void assign_nearest(const Eigen::Ref<const MatrixX<double>>& vectors,
                    const Eigen::Ref<const MatrixX<double>>& codewords,
                    VectorX<std::uint32_t>& indices, Eigen::VectorXd* sq_dists = nullptr);

struct TrainStats {
  std::vector<double> inertia;  // one entry per assignment pass
  int iterations = 0;
  bool converged = false;
};

/// Offline k-means: seeded initialization followed by Lloyd iterations
/// until the relative inertia change drops below the tolerance or
/// max_iterations is reached. Empty clusters are reseeded to the point
/// with the largest current quantization error. Deterministic for a given
/// seed and input.
Codebook train_codebook(const Eigen::Ref<const Matrix>& vectors, Index codebook_size,
                        const TrainConfig& config, TrainStats* stats = nullptr);

/// Diagnostic scalar: weight * mean squared quantization error.
template <typename DerivedA, typename DerivedB>
double commitment_loss(const Eigen::MatrixBase<DerivedA>& vectors,
                       const Eigen::MatrixBase<DerivedB>& quantized, double weight) {
  if (vectors.rows() != quantized.rows() || vectors.cols() != quantized.cols()) {
    throw std::invalid_argument("commitment_loss: shape mismatch");
  }
  if (weight < 0 || !std::isfinite(weight)) {
    throw std::invalid_argument("commitment_loss: weight must be finite and >= 0");
  }
  if (vectors.rows() == 0) return 0.0;
  const double mse = (vectors.template cast<double>() - quantized.template cast<double>())
                         .squaredNorm() /
                     static_cast<double>(vectors.rows());
  return weight * mse;
}

/// Codebook file: magic "EGVQCB1\0", u32 N, u32 d (little-endian), then
/// N*d little-endian 32-bit floats, row-major.
void write_codebook(const Codebook& codebook, const std::filesystem::path& path);
Codebook read_codebook(const std::filesystem::path& path);

}  // namespace egvq
