#pragma once

// Independent reference implementations used only by tests: plain-loop
// nearest neighbor, a naive greedy residual chain, two-pass statistics and
// an exhaustive split scan. These deliberately avoid the library's
// assignment and accumulation code paths.

#include "egvq/quantizers.hpp"
#include "egvq/rng.hpp"
#include "egvq/types.hpp"

#include <cstdint>
#include <vector>

namespace egvq::testing {

inline std::uint32_t brute_nearest(const Matrix& codewords,
                                   const Eigen::Ref<const Vector>& point) {
  std::uint32_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < codewords.rows(); ++i) {
    double dist = 0.0;
    for (Index j = 0; j < codewords.cols(); ++j) {
      const double diff =
          static_cast<double>(point[j]) - static_cast<double>(codewords(i, j));
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<std::uint32_t>(i);
    }
  }
  return best;
}

struct NaiveEncodeResult {
  IndexMatrix indices;  // group-major (g, s) columns
  Matrix reconstruction;
};

// Per-frame greedy residual chain: scalar loops, residual recomputed as
// slice minus the running reconstruction.
inline NaiveEncodeResult naive_grouped_encode(const TrainedQuantizer& quantizer,
                                              const FeatureMatrix& features) {
  const QuantizerSpec& spec = quantizer.spec();
  NaiveEncodeResult result;
  result.indices.resize(features.frames(), spec.total_codebooks());
  result.reconstruction.resize(features.frames(), features.channels());

  Matrix working = features.values();
  if (quantizer.centered()) {
    working.rowwise() -= quantizer.channel_means().transpose();
  }
  for (Index t = 0; t < features.frames(); ++t) {
    for (int g = 0; g < spec.num_groups; ++g) {
      const auto range = quantizer.partition().range(g);
      Vector slice(range.size());
      for (Index j = 0; j < range.size(); ++j) slice[j] = working(t, range.begin + j);
      Vector recon = Vector::Zero(range.size());
      for (int s = 0; s < spec.depth; ++s) {
        Vector residual(range.size());
        for (Index j = 0; j < range.size(); ++j) residual[j] = slice[j] - recon[j];
        const std::uint32_t idx =
            brute_nearest(quantizer.codebook(g, s).codewords(), residual);
        result.indices(t, g * spec.depth + s) = idx;
        for (Index j = 0; j < range.size(); ++j) {
          recon[j] += quantizer.codebook(g, s).codewords()(idx, j);
        }
      }
      for (Index j = 0; j < range.size(); ++j) {
        result.reconstruction(t, range.begin + j) = recon[j];
      }
    }
  }
  if (quantizer.centered()) {
    result.reconstruction.rowwise() += quantizer.channel_means().transpose();
  }
  return result;
}

// Plain single-codebook residual chain over the full channel width.
inline IndexMatrix naive_rvq_encode(const std::vector<Codebook>& chain,
                                    const FeatureMatrix& features) {
  IndexMatrix indices(features.frames(), static_cast<Index>(chain.size()));
  for (Index t = 0; t < features.frames(); ++t) {
    Vector slice = features.values().row(t);
    Vector recon = Vector::Zero(slice.size());
    for (std::size_t s = 0; s < chain.size(); ++s) {
      const Vector residual = slice - recon;
      const std::uint32_t idx = brute_nearest(chain[s].codewords(), residual);
      indices(t, static_cast<Index>(s)) = idx;
      recon += chain[s].codewords().row(idx);
    }
  }
  return indices;
}

inline VarianceProfile two_pass_stats(const FeatureMatrix& features) {
  const Index channels = features.channels();
  const double frames = static_cast<double>(features.frames());
  Eigen::VectorXd means = Eigen::VectorXd::Zero(channels);
  for (Index t = 0; t < features.frames(); ++t) {
    for (Index k = 0; k < channels; ++k) {
      means[k] += static_cast<double>(features.values()(t, k));
    }
  }
  means /= frames;
  Eigen::VectorXd variances = Eigen::VectorXd::Zero(channels);
  for (Index t = 0; t < features.frames(); ++t) {
    for (Index k = 0; k < channels; ++k) {
      const double diff = static_cast<double>(features.values()(t, k)) - means[k];
      variances[k] += diff * diff;
    }
  }
  variances /= frames;
  return VarianceProfile(means, variances, features.frames());
}

// Smallest k (channel count) whose prefix holds at least half the total
// variance; each prefix sum recomputed from scratch.
inline Index exhaustive_split_boundary(const Eigen::VectorXd& variances) {
  const double half = variances.sum() / 2.0;
  for (Index k = 1; k <= variances.size(); ++k) {
    if (variances.head(k).sum() >= half) return k;
  }
  return variances.size();
}

inline Eigen::VectorXd random_variances(Xoshiro256pp& rng, Index channels, double low,
                                        double high) {
  Eigen::VectorXd v(channels);
  for (Index k = 0; k < channels; ++k) {
    v[k] = low + (high - low) * rng.next_double();
  }
  return v;
}

inline Matrix random_matrix(Xoshiro256pp& rng, Index rows, Index cols, double scale) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = static_cast<Scalar>((2.0 * rng.next_double() - 1.0) * scale);
    }
  }
  return m;
}

inline bool bit_identical(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) != b(i, j)) return false;
    }
  }
  return true;
}

}  // namespace egvq::testing
