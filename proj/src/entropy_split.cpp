#include "egvq/entropy_split.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace egvq {

ChannelStatsAccumulator::ChannelStatsAccumulator(Index num_channels)
    : mean_(Eigen::ArrayXd::Zero(num_channels)), m2_(Eigen::ArrayXd::Zero(num_channels)) {
  if (num_channels < 1) {
    throw std::invalid_argument("ChannelStatsAccumulator: need at least 1 channel");
  }
}

void ChannelStatsAccumulator::add(const FeatureMatrix& features) {
  for (Index t = 0; t < features.frames(); ++t) {
    add_frame(features.values().row(t));
  }
}

void ChannelStatsAccumulator::merge(const ChannelStatsAccumulator& other) {
  if (other.channels() != channels()) {
    throw std::invalid_argument("ChannelStatsAccumulator::merge: channel count mismatch");
  }
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  // Chan et al. parallel combination.
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const Eigen::ArrayXd delta = other.mean_ - mean_;
  mean_ += delta * (nb / n);
  m2_ += other.m2_ + delta.square() * (na * nb / n);
  count_ += other.count_;
}

VarianceProfile ChannelStatsAccumulator::finalize() const {
  if (count_ < 1) {
    throw std::invalid_argument("ChannelStatsAccumulator: no frames accumulated");
  }
  const Eigen::VectorXd variances = (m2_ / static_cast<double>(count_)).matrix();
  return VarianceProfile(mean_.matrix(), variances, count_);
}

VarianceProfile compute_channel_stats(const FeatureMatrix& features) {
  ChannelStatsAccumulator acc(features.channels());
  acc.add(features);
  return acc.finalize();
}

double differential_entropy(double variance) {
  if (!(variance > 0.0)) {
    throw std::domain_error("differential_entropy: variance must be > 0");
  }
  return 0.5 * std::log(2.0 * std::numbers::pi_v<double> * std::numbers::e_v<double> *
                        variance);
}

SplitReport entropy_split(const VarianceProfile& profile, int num_groups) {
  const Index channels = profile.channels();
  if (num_groups < 1) {
    throw std::invalid_argument("entropy_split: need at least 1 group");
  }
  if (num_groups > channels) {
    throw std::invalid_argument("entropy_split: more groups than channels");
  }

  // Left-to-right prefix sums; the final entry is the total every
  // threshold is measured against.
  std::vector<double> cumulative(static_cast<std::size_t>(channels));
  double running = 0.0;
  for (Index k = 0; k < channels; ++k) {
    running += profile.variances[k];
    cumulative[static_cast<std::size_t>(k)] = running;
  }
  const double total = cumulative.back();
  if (!(total > 0.0)) {
    throw std::invalid_argument("entropy_split: degenerate profile (zero total variance)");
  }

  std::vector<Index> boundaries;
  boundaries.reserve(static_cast<std::size_t>(num_groups - 1));
  Index k = 0;  // candidate channel index, shared across thresholds
  Index prev_boundary = 0;
  for (int g = 1; g < num_groups; ++g) {
    const double threshold =
        total * (static_cast<double>(g) / static_cast<double>(num_groups));
    while (k < channels - 1 && cumulative[static_cast<std::size_t>(k)] < threshold) {
      ++k;
    }
    const Index boundary = k + 1;  // channels consumed by the prefix
    if (boundary == prev_boundary || boundary >= channels) {
      // Either one channel holds >= 2/G of the mass or the prefix ate
      // every channel; some group would come out empty.
      throw std::invalid_argument("entropy_split: cannot form nonempty groups");
    }
    boundaries.push_back(boundary);
    prev_boundary = boundary;
  }

  GroupPartition partition(std::move(boundaries), channels);
  Eigen::VectorXd shares(num_groups);
  for (int g = 0; g < num_groups; ++g) {
    const auto range = partition.range(g);
    const double upper = cumulative[static_cast<std::size_t>(range.end - 1)];
    const double lower =
        range.begin == 0 ? 0.0 : cumulative[static_cast<std::size_t>(range.begin - 1)];
    shares[g] = (upper - lower) / total;
  }

  SplitReport report{std::move(partition), std::move(shares), total, num_groups > 2};
  return report;
}

std::pair<double, double> variance_share(const VarianceProfile& profile, Index boundary) {
  if (boundary <= 0 || boundary >= profile.channels()) {
    throw std::invalid_argument("variance_share: boundary out of range");
  }
  double left = 0.0;
  double total = 0.0;
  for (Index k = 0; k < profile.channels(); ++k) {
    total += profile.variances[k];
    if (k < boundary) left = total;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("variance_share: degenerate profile (zero total variance)");
  }
  const double left_share = left / total;
  return {left_share, 1.0 - left_share};
}

nlohmann::json split_report_to_json(const SplitReport& report) {
  nlohmann::json j;
  j["num_channels"] = report.partition.channels();
  j["boundaries"] = report.partition.boundaries();
  std::vector<Index> sizes;
  for (int g = 0; g < report.partition.group_count(); ++g) {
    sizes.push_back(report.partition.range(g).size());
  }
  j["group_sizes"] = sizes;
  j["group_shares"] =
      std::vector<double>(report.group_shares.begin(), report.group_shares.end());
  j["total_variance"] = report.total_variance;
  j["quantile_extension"] = report.quantile_extension;
  return j;
}

SplitReport split_report_from_json(const nlohmann::json& j) {
  GroupPartition partition(j.at("boundaries").get<std::vector<Index>>(),
                           j.at("num_channels").get<Index>());
  const auto shares_vec = j.at("group_shares").get<std::vector<double>>();
  Eigen::VectorXd shares =
      Eigen::Map<const Eigen::VectorXd>(shares_vec.data(), static_cast<Index>(shares_vec.size()));
  if (shares.size() != partition.group_count()) {
    throw std::invalid_argument("SplitReport: share count != group count");
  }
  return SplitReport{std::move(partition), std::move(shares),
                     j.at("total_variance").get<double>(),
                     j.value("quantile_extension", false)};
}

}  // namespace egvq
