#include "egvq/quantizers.hpp"

#include "egvq/rng.hpp"

#include <fstream>

namespace egvq {

TrainedQuantizer::TrainedQuantizer(QuantizerSpec spec, GroupPartition partition,
                                   std::vector<std::vector<Codebook>> codebooks,
                                   std::optional<Vector> channel_means,
                                   std::optional<SplitReport> split_report)
    : spec_(std::move(spec)),
      partition_(std::move(partition)),
      codebooks_(std::move(codebooks)),
      channel_means_(std::move(channel_means)),
      split_report_(std::move(split_report)) {
  if (partition_.group_count() != spec_.num_groups) {
    throw std::invalid_argument("TrainedQuantizer: partition group count != spec");
  }
  if (static_cast<int>(codebooks_.size()) != spec_.num_groups) {
    throw std::invalid_argument("TrainedQuantizer: expected one codebook chain per group");
  }
  for (int g = 0; g < spec_.num_groups; ++g) {
    const auto& chain = codebooks_[static_cast<std::size_t>(g)];
    if (static_cast<int>(chain.size()) != spec_.depth) {
      throw std::invalid_argument("TrainedQuantizer: codebook chain depth != spec");
    }
    const Index width = partition_.range(g).size();
    for (const Codebook& cb : chain) {
      if (cb.dim() != width) {
        throw std::invalid_argument("TrainedQuantizer: codebook dimension != group width");
      }
      if (cb.size() != spec_.codebook_size) {
        throw std::invalid_argument("TrainedQuantizer: codebook size != spec");
      }
    }
  }
  if (channel_means_ && channel_means_->size() != partition_.channels()) {
    throw std::invalid_argument("TrainedQuantizer: channel means length != channel count");
  }
}

const Codebook& TrainedQuantizer::codebook(int group, int stage) const {
  if (group < 0 || group >= spec_.num_groups || stage < 0 || stage >= spec_.depth) {
    throw std::out_of_range("TrainedQuantizer: codebook index out of range");
  }
  return codebooks_[static_cast<std::size_t>(group)][static_cast<std::size_t>(stage)];
}

const Vector& TrainedQuantizer::channel_means() const {
  if (!channel_means_) {
    throw std::logic_error("TrainedQuantizer: no channel means (not centered)");
  }
  return *channel_means_;
}

void TrainedQuantizer::reset_usage() const {
  for (const auto& chain : codebooks_) {
    for (const Codebook& cb : chain) cb.reset_usage();
  }
}

namespace {

GroupPartition resolve_partition(const FeatureMatrix& features, const QuantizerSpec& spec,
                                 std::optional<SplitReport>& report_out) {
  switch (spec.partition) {
    case PartitionMode::explicit_ranges:
      return *spec.explicit_partition;
    case PartitionMode::even:
      return GroupPartition::even(features.channels(), spec.num_groups);
    case PartitionMode::entropy_guided: {
      SplitReport report = entropy_split(compute_channel_stats(features), spec.num_groups);
      GroupPartition partition = report.partition;
      report_out = std::move(report);
      return partition;
    }
  }
  throw std::logic_error("unknown PartitionMode");
}

}  // namespace

TrainedQuantizer train_quantizer(const FeatureMatrix& features, const QuantizerSpec& spec,
                                 const TrainConfig& config, bool center) {
  validate_spec(spec, features.channels());

  std::optional<SplitReport> split_report;
  GroupPartition partition = resolve_partition(features, spec, split_report);

  std::optional<Vector> means;
  Matrix working = features.values();
  if (center) {
    const VarianceProfile profile = compute_channel_stats(features);
    means = profile.means.cast<Scalar>();
    working.rowwise() -= means->transpose();
  }

  std::vector<std::vector<Codebook>> codebooks;
  codebooks.reserve(static_cast<std::size_t>(spec.num_groups));
  for (int g = 0; g < spec.num_groups; ++g) {
    const auto range = partition.range(g);
    const Matrix slice = working.middleCols(range.begin, range.size());
    Matrix reconstruction = Matrix::Zero(slice.rows(), slice.cols());

    std::vector<Codebook> chain;
    chain.reserve(static_cast<std::size_t>(spec.depth));
    for (int s = 0; s < spec.depth; ++s) {
      // Independent seed per (group, stage) so group-parallel training
      // would reproduce the sequential result.
      TrainConfig stage_config = config;
      stage_config.seed =
          derive_seed(config.seed, static_cast<std::uint64_t>(g) * 0x10000u +
                                       static_cast<std::uint64_t>(s));
      const Matrix residual = slice - reconstruction;
      Codebook codebook = train_codebook(residual, spec.codebook_size, stage_config);
      const QuantizeResult quantized = quantize(codebook, residual);
      reconstruction += quantized.quantized;
      codebook.reset_usage();  // training passes are not evaluation passes
      chain.push_back(std::move(codebook));
    }
    codebooks.push_back(std::move(chain));
  }

  return TrainedQuantizer(spec, std::move(partition), std::move(codebooks), std::move(means),
                          std::move(split_report));
}

CodeFrame encode(const TrainedQuantizer& quantizer, const FeatureMatrix& features,
                 EncodeTrace* trace) {
  if (features.channels() != quantizer.channels()) {
    throw std::invalid_argument("encode: channel count mismatch");
  }
  const QuantizerSpec& spec = quantizer.spec();
  const Index frames = features.frames();

  Matrix working = features.values();
  if (quantizer.centered()) {
    working.rowwise() -= quantizer.channel_means().transpose();
  }
  if (trace != nullptr) {
    trace->residual_energy = Eigen::VectorXd::Zero(spec.depth);
    trace->input_energy = features.values().cast<double>().squaredNorm();
  }

  CodeFrame codes;
  codes.num_groups = spec.num_groups;
  codes.depth = spec.depth;
  codes.indices.resize(frames, spec.total_codebooks());

  for (int g = 0; g < spec.num_groups; ++g) {
    const auto range = quantizer.partition().range(g);
    const Matrix slice = working.middleCols(range.begin, range.size());
    // The running residual is always recomputed as slice - reconstruction,
    // so it telescopes bit-exactly against partial_decode.
    Matrix reconstruction = Matrix::Zero(slice.rows(), slice.cols());
    for (int s = 0; s < spec.depth; ++s) {
      const Matrix residual = slice - reconstruction;
      const QuantizeResult quantized = quantize(quantizer.codebook(g, s), residual);
      reconstruction += quantized.quantized;
      codes.indices.col(codes.column(g, s)) = quantized.indices;
      if (trace != nullptr) {
        trace->residual_energy[s] +=
            (slice - reconstruction).cast<double>().squaredNorm();
      }
    }
  }
  return codes;
}

FeatureMatrix partial_decode(const TrainedQuantizer& quantizer, const CodeFrame& codes,
                             int depth_limit) {
  const QuantizerSpec& spec = quantizer.spec();
  if (depth_limit < 1 || depth_limit > spec.depth) {
    throw std::invalid_argument("partial_decode: depth_limit out of range");
  }
  if (codes.num_groups != spec.num_groups || codes.depth != spec.depth ||
      codes.indices.cols() != spec.total_codebooks()) {
    throw std::invalid_argument("partial_decode: code layout does not match quantizer");
  }
  if (codes.frames() < 1) {
    throw std::invalid_argument("partial_decode: empty code frame");
  }
  const Index frames = codes.frames();

  Matrix output(frames, quantizer.channels());
  for (int g = 0; g < spec.num_groups; ++g) {
    const auto range = quantizer.partition().range(g);
    Matrix reconstruction = Matrix::Zero(frames, range.size());
    for (int s = 0; s < depth_limit; ++s) {
      const Codebook& cb = quantizer.codebook(g, s);
      const auto column = codes.indices.col(codes.column(g, s));
      for (Index t = 0; t < frames; ++t) {
        const std::uint32_t idx = column[t];
        if (idx >= static_cast<std::uint32_t>(cb.size())) {
          throw std::out_of_range("partial_decode: code index out of range");
        }
        reconstruction.row(t) += cb.codewords().row(idx);
      }
    }
    output.middleCols(range.begin, range.size()) = reconstruction;
  }
  if (quantizer.centered()) {
    output.rowwise() += quantizer.channel_means().transpose();
  }
  return FeatureMatrix(std::move(output));
}

FeatureMatrix decode(const TrainedQuantizer& quantizer, const CodeFrame& codes) {
  return partial_decode(quantizer, codes, quantizer.spec().depth);
}

namespace {

nlohmann::json spec_to_json(const QuantizerSpec& spec) {
  nlohmann::json j;
  j["num_groups"] = spec.num_groups;
  j["depth"] = spec.depth;
  j["codebook_size"] = spec.codebook_size;
  j["partition"] = to_string(spec.partition);
  j["commitment_weight"] = spec.commitment_weight;
  return j;
}

}  // namespace

void save_quantizer(const TrainedQuantizer& quantizer, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  nlohmann::json spec_json = spec_to_json(quantizer.spec());
  if (quantizer.centered()) {
    // Means are stored as doubles; float -> double -> float is exact.
    std::vector<double> means(quantizer.channel_means().begin(),
                              quantizer.channel_means().end());
    spec_json["channel_means"] = means;
  }
  std::ofstream spec_out(dir / "spec.json");
  if (!spec_out) {
    throw std::runtime_error("cannot write " + (dir / "spec.json").string());
  }
  spec_out << spec_json.dump(2) << '\n';

  nlohmann::json partition_json;
  if (quantizer.split_report()) {
    partition_json = split_report_to_json(*quantizer.split_report());
  } else {
    partition_json["num_channels"] = quantizer.partition().channels();
    partition_json["boundaries"] = quantizer.partition().boundaries();
    std::vector<Index> sizes;
    for (int g = 0; g < quantizer.partition().group_count(); ++g) {
      sizes.push_back(quantizer.partition().range(g).size());
    }
    partition_json["group_sizes"] = sizes;
  }
  std::ofstream partition_out(dir / "partition.json");
  if (!partition_out) {
    throw std::runtime_error("cannot write " + (dir / "partition.json").string());
  }
  partition_out << partition_json.dump(2) << '\n';

  for (int g = 0; g < quantizer.spec().num_groups; ++g) {
    for (int s = 0; s < quantizer.spec().depth; ++s) {
      const std::string name = "g" + std::to_string(g) + "_s" + std::to_string(s) + ".cb";
      write_codebook(quantizer.codebook(g, s), dir / name);
    }
  }
}

TrainedQuantizer load_quantizer(const std::filesystem::path& dir) {
  std::ifstream spec_in(dir / "spec.json");
  if (!spec_in) {
    throw std::runtime_error("cannot open " + (dir / "spec.json").string());
  }
  const nlohmann::json spec_json = nlohmann::json::parse(spec_in);

  QuantizerSpec spec;
  spec.num_groups = spec_json.at("num_groups").get<int>();
  spec.depth = spec_json.at("depth").get<int>();
  spec.codebook_size = spec_json.at("codebook_size").get<Index>();
  spec.partition = partition_mode_from_string(spec_json.at("partition").get<std::string>());
  spec.commitment_weight = spec_json.at("commitment_weight").get<double>();

  std::ifstream partition_in(dir / "partition.json");
  if (!partition_in) {
    throw std::runtime_error("cannot open " + (dir / "partition.json").string());
  }
  const nlohmann::json partition_json = nlohmann::json::parse(partition_in);
  GroupPartition partition(partition_json.at("boundaries").get<std::vector<Index>>(),
                           partition_json.at("num_channels").get<Index>());
  std::optional<SplitReport> report;
  if (partition_json.contains("group_shares")) {
    report = split_report_from_json(partition_json);
  }
  if (spec.partition == PartitionMode::explicit_ranges) {
    spec.explicit_partition = partition;
  }

  std::optional<Vector> means;
  if (spec_json.contains("channel_means")) {
    const auto values = spec_json.at("channel_means").get<std::vector<double>>();
    Vector m(static_cast<Index>(values.size()));
    for (Index i = 0; i < m.size(); ++i) {
      m[i] = static_cast<Scalar>(values[static_cast<std::size_t>(i)]);
    }
    means = std::move(m);
  }

  std::vector<std::vector<Codebook>> codebooks;
  codebooks.reserve(static_cast<std::size_t>(spec.num_groups));
  for (int g = 0; g < spec.num_groups; ++g) {
    std::vector<Codebook> chain;
    chain.reserve(static_cast<std::size_t>(spec.depth));
    for (int s = 0; s < spec.depth; ++s) {
      const std::string name = "g" + std::to_string(g) + "_s" + std::to_string(s) + ".cb";
      chain.push_back(read_codebook(dir / name));
    }
    codebooks.push_back(std::move(chain));
  }

  return TrainedQuantizer(std::move(spec), std::move(partition), std::move(codebooks),
                          std::move(means), std::move(report));
}

}  // namespace egvq
