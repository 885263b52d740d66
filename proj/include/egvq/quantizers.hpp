#pragma once

#include "egvq/entropy_split.hpp"
#include "egvq/types.hpp"
#include "egvq/vq.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace egvq {

/// Code indices for T frames, one column per (group, stage) pair in
/// group-major order: g0s0, g0s1, ..., g1s0, ... This layout is normative
/// for the bitstream.
struct CodeFrame {
  IndexMatrix indices;
  int num_groups = 1;
  int depth = 1;

  Index frames() const { return indices.rows(); }
  int column(int group, int stage) const { return group * depth + stage; }
};

/// Residual energies captured while encoding, summed over all groups and
/// frames. residual_energy[s] is the total squared residual norm after
/// stages 0..s; with all stages applied it equals the squared
/// reconstruction error.
struct EncodeTrace {
  Eigen::VectorXd residual_energy;
  double input_energy = 0.0;
};

/// A residual quantizer with trained codebooks: RVQ when the partition is
/// a single group, GRVQ/EG-GRVQ when channels are split into independent
/// per-group residual chains.
class TrainedQuantizer {
 public:
  TrainedQuantizer(QuantizerSpec spec, GroupPartition partition,
                   std::vector<std::vector<Codebook>> codebooks,
                   std::optional<Vector> channel_means = std::nullopt,
                   std::optional<SplitReport> split_report = std::nullopt);

  const QuantizerSpec& spec() const { return spec_; }
  const GroupPartition& partition() const { return partition_; }
  Index channels() const { return partition_.channels(); }
  const Codebook& codebook(int group, int stage) const;

  bool centered() const { return channel_means_.has_value(); }
  const Vector& channel_means() const;
  const std::optional<SplitReport>& split_report() const { return split_report_; }

  void reset_usage() const;

 private:
  QuantizerSpec spec_;
  GroupPartition partition_;
  std::vector<std::vector<Codebook>> codebooks_;  // [group][stage]
  std::optional<Vector> channel_means_;
  std::optional<SplitReport> split_report_;
};

/// Trains one codebook per (group, stage): stage 0 on the group's channel
/// slice, later stages on the running residual. The partition comes from
/// spec.partition: explicit ranges, an even split, or the entropy-guided
/// split computed from these features. With `center` set, training-set
/// channel means are subtracted before quantization and restored on
/// decode.
TrainedQuantizer train_quantizer(const FeatureMatrix& features, const QuantizerSpec& spec,
                                 const TrainConfig& config, bool center = false);

/// Greedy per-stage nearest-neighbor residual encoding, groups independent.
CodeFrame encode(const TrainedQuantizer& quantizer, const FeatureMatrix& features,
                 EncodeTrace* trace = nullptr);

/// Sum of the selected codewords per group, stages below `depth_limit`,
/// concatenated in channel order.
FeatureMatrix partial_decode(const TrainedQuantizer& quantizer, const CodeFrame& codes,
                             int depth_limit);

FeatureMatrix decode(const TrainedQuantizer& quantizer, const CodeFrame& codes);

/// Directory layout: spec.json + partition.json + one g{g}_s{s}.cb
/// codebook file per (group, stage).
void save_quantizer(const TrainedQuantizer& quantizer, const std::filesystem::path& dir);
TrainedQuantizer load_quantizer(const std::filesystem::path& dir);

}  // namespace egvq
