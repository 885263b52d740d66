#include "egvq/types.hpp"

#include <bit>

namespace egvq {

FeatureMatrix::FeatureMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw std::invalid_argument("FeatureMatrix: need at least 1 frame and 1 channel");
  }
  if (!values_.allFinite()) {
    throw std::invalid_argument("FeatureMatrix: non-finite entries");
  }
}

GroupPartition::GroupPartition(std::vector<Index> boundaries, Index num_channels)
    : boundaries_(std::move(boundaries)), num_channels_(num_channels) {
  if (num_channels_ < 1) {
    throw std::invalid_argument("GroupPartition: need at least 1 channel");
  }
  Index prev = 0;
  for (Index b : boundaries_) {
    if (b <= prev || b >= num_channels_) {
      throw std::invalid_argument(
          "GroupPartition: boundaries must be strictly increasing inside (0, C)");
    }
    prev = b;
  }
}

GroupPartition GroupPartition::single(Index num_channels) {
  return GroupPartition({}, num_channels);
}

GroupPartition GroupPartition::even(Index num_channels, int num_groups) {
  if (num_groups < 1) {
    throw std::invalid_argument("GroupPartition::even: need at least 1 group");
  }
  if (num_channels < num_groups) {
    throw std::invalid_argument("GroupPartition::even: more groups than channels");
  }
  const Index base = num_channels / num_groups;
  const Index remainder = num_channels % num_groups;
  std::vector<Index> boundaries;
  boundaries.reserve(static_cast<std::size_t>(num_groups - 1));
  Index cursor = 0;
  for (int g = 0; g + 1 < num_groups; ++g) {
    // The last `remainder` groups take one extra channel each.
    cursor += base + (g >= num_groups - static_cast<int>(remainder) ? 1 : 0);
    boundaries.push_back(cursor);
  }
  return GroupPartition(std::move(boundaries), num_channels);
}

GroupPartition::Range GroupPartition::range(int group) const {
  if (group < 0 || group >= group_count()) {
    throw std::out_of_range("GroupPartition: group index out of range");
  }
  const Index begin = group == 0 ? 0 : boundaries_[static_cast<std::size_t>(group - 1)];
  const Index end = group == group_count() - 1
                        ? num_channels_
                        : boundaries_[static_cast<std::size_t>(group)];
  return Range{begin, end};
}

VarianceProfile::VarianceProfile(Eigen::VectorXd means_in, Eigen::VectorXd variances_in,
                                 std::int64_t frames)
    : means(std::move(means_in)), variances(std::move(variances_in)), frame_count(frames) {
  if (means.size() != variances.size()) {
    throw std::invalid_argument("VarianceProfile: means/variances length mismatch");
  }
  if (variances.size() < 1) {
    throw std::invalid_argument("VarianceProfile: empty profile");
  }
  if (!means.allFinite() || !variances.allFinite() || (variances.array() < 0.0).any()) {
    throw std::invalid_argument("VarianceProfile: variances must be finite and >= 0");
  }
}

Codebook::Codebook(Matrix codewords)
    : codewords_(std::move(codewords)),
      usage_counts_(static_cast<std::size_t>(codewords_.rows()), 0) {
  if (codewords_.rows() < 1 || codewords_.cols() < 1) {
    throw std::invalid_argument("Codebook: need at least 1 codeword of dimension >= 1");
  }
  if (!codewords_.allFinite()) {
    throw std::invalid_argument("Codebook: non-finite codeword entries");
  }
}

void Codebook::reset_usage() const {
  std::fill(usage_counts_.begin(), usage_counts_.end(), 0);
}

std::string to_string(PartitionMode mode) {
  switch (mode) {
    case PartitionMode::even:
      return "even";
    case PartitionMode::entropy_guided:
      return "entropy_guided";
    case PartitionMode::explicit_ranges:
      return "explicit";
  }
  throw std::logic_error("unknown PartitionMode");
}

PartitionMode partition_mode_from_string(const std::string& name) {
  if (name == "even") return PartitionMode::even;
  if (name == "entropy_guided" || name == "entropy-guided" || name == "entropy") {
    return PartitionMode::entropy_guided;
  }
  if (name == "explicit") return PartitionMode::explicit_ranges;
  throw std::invalid_argument("unknown partition mode: " + name);
}

int QuantizerSpec::bits_per_index() const {
  const auto n = static_cast<std::uint64_t>(codebook_size);
  if (codebook_size < 2 || !std::has_single_bit(n)) {
    throw std::invalid_argument("QuantizerSpec: codebook size must be a power of two >= 2");
  }
  return std::countr_zero(n);
}

const QuantizerSpec& validate_spec(const QuantizerSpec& spec, Index num_channels) {
  if (spec.num_groups < 1 || spec.depth < 1) {
    throw std::invalid_argument("QuantizerSpec: groups and depth must be >= 1");
  }
  spec.bits_per_index();  // power-of-two check
  if (spec.commitment_weight < 0 || !std::isfinite(spec.commitment_weight)) {
    throw std::invalid_argument("QuantizerSpec: commitment weight must be finite and >= 0");
  }
  if (num_channels < spec.num_groups) {
    throw std::invalid_argument("QuantizerSpec: more groups than channels");
  }
  if (spec.partition == PartitionMode::explicit_ranges) {
    if (!spec.explicit_partition.has_value()) {
      throw std::invalid_argument("QuantizerSpec: explicit partition missing");
    }
    const GroupPartition& p = *spec.explicit_partition;
    if (p.group_count() != spec.num_groups) {
      throw std::invalid_argument("QuantizerSpec: partition group count != num_groups");
    }
    if (p.channels() != num_channels) {
      throw std::invalid_argument("QuantizerSpec: partition does not cover the channel count");
    }
  }
  return spec;
}

}  // namespace egvq
