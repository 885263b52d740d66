#pragma once

#include "egvq/types.hpp"

#include <json.hpp>

#include <filesystem>

namespace egvq {

enum class ProfileKind { uniform, power_law, explicit_values };

/// Target per-channel variance profile for synthetic corpora.
struct VarianceSpec {
  ProfileKind kind = ProfileKind::uniform;
  double value = 1.0;     // uniform variance, or power-law v0
  double exponent = 1.0;  // power-law alpha
  Eigen::VectorXd values; // explicit per-channel variances

  static VarianceSpec uniform(double variance);
  // v_k = v0 / (k + 1)^alpha with zero-based k.
  static VarianceSpec power_law(double v0, double alpha);
  static VarianceSpec explicit_values_of(Eigen::VectorXd variances);

  Eigen::VectorXd target_variances(Index num_channels) const;
};

/// Zero-mean Gaussian frames with a diagonal variance profile, plus an
/// optional shared factor that correlates channels and an optional
/// constant per-corpus mean offset. Frame t is generated from a stream
/// derived deterministically from (seed, t), so generation can be sharded
/// by frame without changing the output.
struct SyntheticConfig {
  Index num_channels = 1;
  Index num_frames = 1;
  VarianceSpec profile;
  double correlation = 0.0;  // shared-factor loading rho in [0, 1)
  std::uint64_t seed = 0;
  double mean_offset = 0.0;
};

FeatureMatrix generate(const SyntheticConfig& config);

nlohmann::json synthetic_config_to_json(const SyntheticConfig& config);
SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);

/// .egft file: magic "EGVQFT1\0", u32 T, u32 C (little-endian), then T*C
/// little-endian 32-bit floats, frame-major. read_features also accepts a
/// CSV with header row "c0,c1,..." and one row per frame.
void write_features(const FeatureMatrix& features, const std::filesystem::path& path);
FeatureMatrix read_features(const std::filesystem::path& path);

}  // namespace egvq
