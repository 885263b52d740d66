#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace egvq {

inline constexpr const char* kVersion = "0.1.0";

// Storage scalar for features and codewords. The on-disk formats hold
// 32-bit floats; keeping the in-memory scalar identical makes file
// roundtrips bit-exact. Distance and statistics accumulation is always
// carried out in double.
using Scalar = float;

template <typename S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Matrix = MatrixX<Scalar>;
using Vector = VectorX<Scalar>;
using Index = Eigen::Index;
using IndexMatrix = MatrixX<std::uint32_t>;

/// T x C matrix of latent activations, row = frame, column = channel.
/// Construction rejects empty or non-finite data; instances are
/// immutable afterwards.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(Matrix values);

  Index frames() const { return values_.rows(); }
  Index channels() const { return values_.cols(); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

/// Contiguous half-open channel ranges covering [0, C) with no gaps or
/// overlaps. `boundaries` holds the G-1 interior split indices, strictly
/// increasing and inside (0, C), so every group is nonempty.
class GroupPartition {
 public:
  struct Range {
    Index begin = 0;
    Index end = 0;
    Index size() const { return end - begin; }
    bool operator==(const Range&) const = default;
  };

  GroupPartition(std::vector<Index> boundaries, Index num_channels);

  static GroupPartition single(Index num_channels);
  // Equal-size contiguous ranges; when C % G != 0 the last C % G groups
  // receive one extra channel each.
  static GroupPartition even(Index num_channels, int num_groups);

  int group_count() const { return static_cast<int>(boundaries_.size()) + 1; }
  Index channels() const { return num_channels_; }
  Range range(int group) const;
  const std::vector<Index>& boundaries() const { return boundaries_; }

  bool operator==(const GroupPartition&) const = default;

 private:
  std::vector<Index> boundaries_;
  Index num_channels_ = 0;
};

/// Per-channel first and second moments over a corpus. Variances are
/// population variances (divisor T).
struct VarianceProfile {
  Eigen::VectorXd means;
  Eigen::VectorXd variances;
  std::int64_t frame_count = 0;

  VarianceProfile() = default;
  VarianceProfile(Eigen::VectorXd means_in, Eigen::VectorXd variances_in,
                  std::int64_t frames);

  Index channels() const { return variances.size(); }
};

/// N x d codeword table. Usage counters are evaluation bookkeeping: they
/// are mutable, reset per run, and owned by a single evaluation pass at a
/// time; everything else is immutable after construction.
class Codebook {
 public:
  explicit Codebook(Matrix codewords);

  Index size() const { return codewords_.rows(); }
  Index dim() const { return codewords_.cols(); }
  const Matrix& codewords() const { return codewords_; }

  const std::vector<std::int64_t>& usage_counts() const { return usage_counts_; }
  void reset_usage() const;
  void record_usage(std::uint32_t index) const { ++usage_counts_[index]; }

 private:
  Matrix codewords_;
  mutable std::vector<std::int64_t> usage_counts_;
};

enum class PartitionMode { even, entropy_guided, explicit_ranges };

std::string to_string(PartitionMode mode);
PartitionMode partition_mode_from_string(const std::string& name);

/// Topology of a (grouped) residual quantizer: G groups x D stages with N
/// codewords per codebook. N must be a power of two so each index packs
/// to a whole number of bits.
struct QuantizerSpec {
  int num_groups = 1;
  int depth = 1;
  Index codebook_size = 2;
  PartitionMode partition = PartitionMode::even;
  std::optional<GroupPartition> explicit_partition;
  double commitment_weight = 1.0;

  int total_codebooks() const { return num_groups * depth; }
  int bits_per_index() const;
  int bits_per_frame() const { return total_codebooks() * bits_per_index(); }
};

/// Returns `spec` unchanged if it is structurally sound for a C-channel
/// input; throws std::invalid_argument otherwise.
const QuantizerSpec& validate_spec(const QuantizerSpec& spec, Index num_channels);

}  // namespace egvq
