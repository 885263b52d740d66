#include "egvq/data.hpp"

#include "egvq/rng.hpp"
#include "wire.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace egvq {

VarianceSpec VarianceSpec::uniform(double variance) {
  VarianceSpec spec;
  spec.kind = ProfileKind::uniform;
  spec.value = variance;
  return spec;
}

VarianceSpec VarianceSpec::power_law(double v0, double alpha) {
  VarianceSpec spec;
  spec.kind = ProfileKind::power_law;
  spec.value = v0;
  spec.exponent = alpha;
  return spec;
}

VarianceSpec VarianceSpec::explicit_values_of(Eigen::VectorXd variances) {
  VarianceSpec spec;
  spec.kind = ProfileKind::explicit_values;
  spec.values = std::move(variances);
  return spec;
}

Eigen::VectorXd VarianceSpec::target_variances(Index num_channels) const {
  if (num_channels < 1) {
    throw std::invalid_argument("VarianceSpec: need at least 1 channel");
  }
  Eigen::VectorXd target(num_channels);
  switch (kind) {
    case ProfileKind::uniform:
      if (!(value > 0.0)) {
        throw std::invalid_argument("VarianceSpec: uniform variance must be > 0");
      }
      target.setConstant(value);
      break;
    case ProfileKind::power_law:
      if (!(value > 0.0) || !std::isfinite(exponent)) {
        throw std::invalid_argument("VarianceSpec: power law needs v0 > 0, finite alpha");
      }
      for (Index k = 0; k < num_channels; ++k) {
        target[k] = value / std::pow(static_cast<double>(k + 1), exponent);
      }
      break;
    case ProfileKind::explicit_values:
      if (values.size() != num_channels) {
        throw std::invalid_argument("VarianceSpec: explicit profile length != channels");
      }
      if ((values.array() <= 0.0).any() || !values.allFinite()) {
        throw std::invalid_argument("VarianceSpec: explicit variances must be finite, > 0");
      }
      target = values;
      break;
  }
  return target;
}

FeatureMatrix generate(const SyntheticConfig& config) {
  if (config.num_frames < 1) {
    throw std::invalid_argument("generate: need at least 1 frame");
  }
  if (!(config.correlation >= 0.0 && config.correlation < 1.0)) {
    throw std::invalid_argument("generate: correlation must be in [0, 1)");
  }
  if (!std::isfinite(config.mean_offset)) {
    throw std::invalid_argument("generate: mean offset must be finite");
  }
  const Eigen::VectorXd sigmas =
      config.profile.target_variances(config.num_channels).cwiseSqrt();
  const double own_loading = std::sqrt(1.0 - config.correlation);
  const double shared_loading = std::sqrt(config.correlation);

  Matrix values(config.num_frames, config.num_channels);
  for (Index t = 0; t < config.num_frames; ++t) {
    // Per-frame stream: splitmix64-expanded from seed + (t+1)*golden.
    const std::uint64_t frame_seed =
        config.seed + (static_cast<std::uint64_t>(t) + 1) * 0x9e3779b97f4a7c15ULL;
    GaussianStream stream(frame_seed);
    const double shared = stream.next();
    for (Index k = 0; k < config.num_channels; ++k) {
      const double own = stream.next();
      const double sample =
          (own_loading * own + shared_loading * shared) * sigmas[k] + config.mean_offset;
      values(t, k) = static_cast<Scalar>(sample);
    }
  }
  return FeatureMatrix(std::move(values));
}

nlohmann::json synthetic_config_to_json(const SyntheticConfig& config) {
  nlohmann::json profile;
  switch (config.profile.kind) {
    case ProfileKind::uniform:
      profile = {{"kind", "uniform"}, {"variance", config.profile.value}};
      break;
    case ProfileKind::power_law:
      profile = {{"kind", "power_law"},
                 {"v0", config.profile.value},
                 {"alpha", config.profile.exponent}};
      break;
    case ProfileKind::explicit_values:
      profile = {{"kind", "explicit"},
                 {"variances", std::vector<double>(config.profile.values.begin(),
                                                   config.profile.values.end())}};
      break;
  }
  return nlohmann::json{{"num_channels", config.num_channels},
                        {"num_frames", config.num_frames},
                        {"profile", profile},
                        {"correlation", config.correlation},
                        {"seed", config.seed},
                        {"mean_offset", config.mean_offset}};
}

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
  SyntheticConfig config;
  config.num_channels = j.at("num_channels").get<Index>();
  config.num_frames = j.at("num_frames").get<Index>();
  const nlohmann::json& profile = j.at("profile");
  const std::string kind = profile.at("kind").get<std::string>();
  if (kind == "uniform") {
    config.profile = VarianceSpec::uniform(profile.at("variance").get<double>());
  } else if (kind == "power_law") {
    config.profile = VarianceSpec::power_law(profile.at("v0").get<double>(),
                                             profile.at("alpha").get<double>());
  } else if (kind == "explicit") {
    const auto values = profile.at("variances").get<std::vector<double>>();
    config.profile = VarianceSpec::explicit_values_of(
        Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size())));
  } else {
    throw std::invalid_argument("unknown variance profile kind: " + kind);
  }
  config.correlation = j.value("correlation", 0.0);
  config.seed = j.value("seed", std::uint64_t{0});
  config.mean_offset = j.value("mean_offset", 0.0);
  return config;
}

namespace {
constexpr char kFeatureMagic[] = "EGVQFT1";  // 8 bytes with the trailing NUL

FeatureMatrix read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("features " + path.string() + ": empty file");
  }
  // Header "c0,c1,..." fixes the channel count.
  Index channels = 0;
  {
    std::stringstream header(line);
    std::string token;
    while (std::getline(header, token, ',')) {
      const std::string expected = "c" + std::to_string(channels);
      if (token != expected) {
        throw std::runtime_error("features " + path.string() +
                                 ": bad CSV header (expected " + expected + ", got '" +
                                 token + "')");
      }
      ++channels;
    }
  }
  if (channels < 1) {
    throw std::runtime_error("features " + path.string() + ": no channels in header");
  }

  std::vector<Scalar> entries;
  Index frames = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string token;
    Index columns = 0;
    while (std::getline(row, token, ',')) {
      std::size_t consumed = 0;
      double parsed = 0;
      try {
        parsed = std::stod(token, &consumed);
      } catch (const std::exception&) {
        throw std::runtime_error("features " + path.string() + ": bad number '" + token + "'");
      }
      if (consumed != token.size()) {
        throw std::runtime_error("features " + path.string() + ": bad number '" + token + "'");
      }
      entries.push_back(static_cast<Scalar>(parsed));
      ++columns;
    }
    if (columns != channels) {
      throw std::runtime_error("features " + path.string() + ": row " +
                               std::to_string(frames + 1) + " has " + std::to_string(columns) +
                               " columns, expected " + std::to_string(channels));
    }
    ++frames;
  }
  if (frames < 1) {
    throw std::runtime_error("features " + path.string() + ": no data rows");
  }
  return FeatureMatrix(
      Eigen::Map<const Matrix>(entries.data(), frames, channels));
}

}  // namespace

void write_features(const FeatureMatrix& features, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(16 + static_cast<std::size_t>(features.frames() * features.channels()) * 4);
  bytes.insert(bytes.end(), kFeatureMagic, kFeatureMagic + 8);
  wire::put_u32(bytes, static_cast<std::uint32_t>(features.frames()));
  wire::put_u32(bytes, static_cast<std::uint32_t>(features.channels()));
  const Matrix& values = features.values();
  for (Index t = 0; t < values.rows(); ++t) {
    for (Index k = 0; k < values.cols(); ++k) {
      wire::put_f32(bytes, values(t, k));
    }
  }
  wire::write_file(path, bytes);
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  const auto bytes = wire::read_file(path);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kFeatureMagic, 8) == 0) {
    wire::Reader reader(bytes.data(), bytes.size(), "features " + path.string());
    reader.expect_magic(kFeatureMagic, 8);
    const std::uint32_t frames = reader.get_u32();
    const std::uint32_t channels = reader.get_u32();
    if (frames < 1 || channels < 1) {
      throw std::runtime_error("features " + path.string() + ": empty shape");
    }
    const std::uint64_t expected =
        static_cast<std::uint64_t>(frames) * channels * 4;
    if (reader.remaining() < expected) {
      throw std::runtime_error("features " + path.string() + ": truncated");
    }
    if (reader.remaining() > expected) {
      throw std::runtime_error("features " + path.string() + ": trailing bytes");
    }
    Matrix values(static_cast<Index>(frames), static_cast<Index>(channels));
    for (Index t = 0; t < values.rows(); ++t) {
      for (Index k = 0; k < values.cols(); ++k) {
        values(t, k) = reader.get_f32();
      }
    }
    return FeatureMatrix(std::move(values));
  }
  return read_features_csv(path);
}

}  // namespace egvq
