#include "egvq/vq.hpp"

#include "egvq/rng.hpp"
#include "wire.hpp"

#include <algorithm>
#include <limits>

namespace egvq {

std::string to_string(InitMethod init) {
  return init == InitMethod::kmeans_plus_plus ? "kmeans_plus_plus" : "random_sample";
}

InitMethod init_method_from_string(const std::string& name) {
  if (name == "kmeans_plus_plus" || name == "kmeans++") return InitMethod::kmeans_plus_plus;
  if (name == "random_sample" || name == "random") return InitMethod::random_sample;
  throw std::invalid_argument("unknown init method: " + name);
}

void assign_nearest(const Eigen::Ref<const MatrixX<double>>& vectors,
                    const Eigen::Ref<const MatrixX<double>>& codewords,
                    VectorX<std::uint32_t>& indices, Eigen::VectorXd* sq_dists) {
  if (vectors.cols() != codewords.cols()) {
    throw std::invalid_argument("assign_nearest: dimension mismatch");
  }
  const Index num_vectors = vectors.rows();
  const Index num_codewords = codewords.rows();
  indices.resize(num_vectors);
  if (sq_dists != nullptr) sq_dists->resize(num_vectors);
  if (num_vectors == 0) return;

  // ||x - c||^2 = ||x||^2 - 2 x.c + ||c||^2, with the cross terms from one
  // GEMM per row block. Scanning codewords in ascending order with a
  // strict < keeps ties on the lowest index.
  const Eigen::VectorXd codeword_sq = codewords.rowwise().squaredNorm();
  const Eigen::VectorXd vector_sq = vectors.rowwise().squaredNorm();

  constexpr Index kBlock = 1024;
  MatrixX<double> cross(std::min(kBlock, num_vectors), num_codewords);
  for (Index start = 0; start < num_vectors; start += kBlock) {
    const Index rows = std::min(kBlock, num_vectors - start);
    cross.topRows(rows).noalias() = vectors.middleRows(start, rows) * codewords.transpose();
    for (Index r = 0; r < rows; ++r) {
      const double x_sq = vector_sq[start + r];
      const double* cross_row = cross.row(r).data();
      Index best = 0;
      double best_dist = x_sq - 2.0 * cross_row[0] + codeword_sq[0];
      for (Index i = 1; i < num_codewords; ++i) {
        const double dist = x_sq - 2.0 * cross_row[i] + codeword_sq[i];
        if (dist < best_dist) {
          best_dist = dist;
          best = i;
        }
      }
      indices[start + r] = static_cast<std::uint32_t>(best);
      if (sq_dists != nullptr) (*sq_dists)[start + r] = std::max(0.0, best_dist);
    }
  }
}

QuantizeResult quantize(const Codebook& codebook, const Eigen::Ref<const Matrix>& vectors) {
  if (vectors.cols() != codebook.dim()) {
    throw std::invalid_argument("quantize: dimension mismatch");
  }
  const MatrixX<double> points = vectors.cast<double>();
  const MatrixX<double> codewords = codebook.codewords().cast<double>();

  QuantizeResult result;
  assign_nearest(points, codewords, result.indices);
  result.quantized.resize(vectors.rows(), vectors.cols());
  for (Index m = 0; m < vectors.rows(); ++m) {
    const std::uint32_t idx = result.indices[m];
    result.quantized.row(m) = codebook.codewords().row(idx);
    codebook.record_usage(idx);
  }
  return result;
}

namespace {

MatrixX<double> init_centers(const MatrixX<double>& points, Index codebook_size,
                             const TrainConfig& config) {
  const Index num_points = points.rows();
  MatrixX<double> centers(codebook_size, points.cols());
  Xoshiro256pp rng(config.seed);

  if (config.init == InitMethod::random_sample) {
    // Partial Fisher-Yates: first N entries of a random permutation.
    std::vector<Index> order(static_cast<std::size_t>(num_points));
    for (Index i = 0; i < num_points; ++i) order[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < codebook_size; ++i) {
      const Index j =
          i + static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(num_points - i)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      centers.row(i) = points.row(order[static_cast<std::size_t>(i)]);
    }
    return centers;
  }

  // k-means++: subsequent centers drawn with probability proportional to
  // the current squared distance to the nearest chosen center.
  centers.row(0) = points.row(static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(num_points))));
  Eigen::VectorXd min_sq =
      (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (Index i = 1; i < codebook_size; ++i) {
    const double total = min_sq.sum();
    Index pick = 0;
    if (total > 0.0) {
      const double target = rng.next_double() * total;
      double acc = 0.0;
      pick = num_points - 1;
      for (Index m = 0; m < num_points; ++m) {
        acc += min_sq[m];
        if (target < acc) {
          pick = m;
          break;
        }
      }
    } else {
      // All remaining mass is zero (duplicated data); fall back to uniform.
      pick = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(num_points)));
    }
    centers.row(i) = points.row(pick);
    min_sq = min_sq.cwiseMin((points.rowwise() - centers.row(i)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

Codebook train_codebook(const Eigen::Ref<const Matrix>& vectors, Index codebook_size,
                        const TrainConfig& config, TrainStats* stats) {
  const Index num_points = vectors.rows();
  const Index dim = vectors.cols();
  if (codebook_size < 1 || dim < 1) {
    throw std::invalid_argument("train_codebook: need codebook_size >= 1 and dim >= 1");
  }
  if (config.max_iterations < 1) {
    throw std::invalid_argument("train_codebook: max_iterations must be >= 1");
  }
  if (config.convergence_tolerance < 0 || !std::isfinite(config.convergence_tolerance)) {
    throw std::invalid_argument("train_codebook: tolerance must be finite and >= 0");
  }
  if (num_points < codebook_size) {
    throw std::invalid_argument("train_codebook: insufficient training vectors");
  }
  if (!vectors.allFinite()) {
    throw std::invalid_argument("train_codebook: non-finite training vectors");
  }

  const MatrixX<double> points = vectors.cast<double>();
  MatrixX<double> centers = init_centers(points, codebook_size, config);

  if (stats != nullptr) *stats = TrainStats{};
  VectorX<std::uint32_t> assignment;
  Eigen::VectorXd sq_dists;
  MatrixX<double> sums(codebook_size, dim);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(codebook_size));

  double prev_inertia = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    assign_nearest(points, centers, assignment, &sq_dists);
    const double inertia = sq_dists.sum();
    if (stats != nullptr) {
      stats->inertia.push_back(inertia);
      stats->iterations = iter;
    }
    if (std::isfinite(prev_inertia) && inertia > prev_inertia * (1.0 + 1e-9) + 1e-12) {
      throw std::logic_error("train_codebook: inertia increased across Lloyd iterations");
    }
    if (std::isfinite(prev_inertia) && prev_inertia - inertia <= config.convergence_tolerance * prev_inertia) {
      if (stats != nullptr) stats->converged = true;
      break;
    }
    prev_inertia = inertia;
    if (iter == config.max_iterations) break;

    sums.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (Index m = 0; m < num_points; ++m) {
      sums.row(assignment[m]) += points.row(m);
      ++counts[assignment[m]];
    }
    for (Index i = 0; i < codebook_size; ++i) {
      if (counts[static_cast<std::size_t>(i)] > 0) {
        centers.row(i) =
            sums.row(i) / static_cast<double>(counts[static_cast<std::size_t>(i)]);
      } else {
        // Reseed a dead codeword to the worst-quantized point; zeroing its
        // distance keeps further empty clusters from picking it again.
        Index worst = 0;
        sq_dists.maxCoeff(&worst);
        centers.row(i) = points.row(worst);
        sq_dists[worst] = 0.0;
      }
    }
  }

  return Codebook(centers.cast<Scalar>());
}

namespace {
constexpr char kCodebookMagic[] = "EGVQCB1";  // 8 bytes with the trailing NUL
}

void write_codebook(const Codebook& codebook, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(16 + static_cast<std::size_t>(codebook.size() * codebook.dim()) * 4);
  bytes.insert(bytes.end(), kCodebookMagic, kCodebookMagic + 8);
  wire::put_u32(bytes, static_cast<std::uint32_t>(codebook.size()));
  wire::put_u32(bytes, static_cast<std::uint32_t>(codebook.dim()));
  const Matrix& words = codebook.codewords();
  for (Index i = 0; i < words.rows(); ++i) {
    for (Index j = 0; j < words.cols(); ++j) {
      wire::put_f32(bytes, words(i, j));
    }
  }
  wire::write_file(path, bytes);
}

Codebook read_codebook(const std::filesystem::path& path) {
  const auto bytes = wire::read_file(path);
  wire::Reader reader(bytes.data(), bytes.size(), "codebook " + path.string());
  reader.expect_magic(kCodebookMagic, 8);
  const std::uint32_t n = reader.get_u32();
  const std::uint32_t d = reader.get_u32();
  if (n < 1 || d < 1) {
    throw std::runtime_error("codebook " + path.string() + ": empty shape");
  }
  Matrix words(static_cast<Index>(n), static_cast<Index>(d));
  for (Index i = 0; i < words.rows(); ++i) {
    for (Index j = 0; j < words.cols(); ++j) {
      words(i, j) = reader.get_f32();
    }
  }
  if (reader.remaining() != 0) {
    throw std::runtime_error("codebook " + path.string() + ": trailing bytes");
  }
  return Codebook(std::move(words));
}

}  // namespace egvq
