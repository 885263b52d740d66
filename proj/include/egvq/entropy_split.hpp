#pragma once

#include "egvq/types.hpp"

#include <json.hpp>

#include <utility>

namespace egvq {

/// A frozen channel partition together with the variance mass carried by
/// each group. Computed once from training-set statistics; no per-frame
/// adaptation is exposed.
struct SplitReport {
  GroupPartition partition;
  Eigen::VectorXd group_shares;  // fractions of total variance, sum to 1
  double total_variance = 0.0;
  // The two-group rule generalizes to equal cumulative-variance quantiles;
  // splits with more than two groups are marked as such an extension.
  bool quantile_extension = false;
};

/// Streaming per-channel mean/variance accumulator (Welford, vectorized
/// over channels). Partial accumulators from disjoint frame shards merge
/// into the same result as a single pass, up to rounding.
class ChannelStatsAccumulator {
 public:
  explicit ChannelStatsAccumulator(Index num_channels);

  Index channels() const { return mean_.size(); }
  std::int64_t count() const { return count_; }

  template <typename Derived>
  void add_frame(const Eigen::MatrixBase<Derived>& frame) {
    if (frame.size() != mean_.size()) {
      throw std::invalid_argument("ChannelStatsAccumulator: channel count mismatch");
    }
    ++count_;
    const Eigen::ArrayXd x =
        frame.derived().template cast<double>().reshaped().array();
    const Eigen::ArrayXd delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  void add(const FeatureMatrix& features);
  void merge(const ChannelStatsAccumulator& other);

  /// Population statistics (variance divisor T). Requires count() >= 1.
  VarianceProfile finalize() const;

 private:
  std::int64_t count_ = 0;
  Eigen::ArrayXd mean_;
  Eigen::ArrayXd m2_;
};

/// Single-pass per-channel statistics of a corpus.
VarianceProfile compute_channel_stats(const FeatureMatrix& features);

/// Gaussian differential entropy, 0.5 * ln(2*pi*e*variance), in nats.
/// Throws std::domain_error for variance <= 0.
double differential_entropy(double variance);

/// Partitions channels so that each group carries an equal share of total
/// variance: group boundaries are the smallest indices at which cumulative
/// variance first reaches g/G of the total. For G = 2 this is the smallest
/// k* with sum_{i<=k*} var_i >= half the total.
SplitReport entropy_split(const VarianceProfile& profile, int num_groups);

/// (left, right) fractions of total variance on each side of `boundary`.
std::pair<double, double> variance_share(const VarianceProfile& profile, Index boundary);

nlohmann::json split_report_to_json(const SplitReport& report);
SplitReport split_report_from_json(const nlohmann::json& j);

}  // namespace egvq
