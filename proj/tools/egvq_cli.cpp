// Command-line front end: synthesize corpora, inspect channel statistics,
// train grouped residual quantizers, code bitstreams and run comparison
// experiments. Every run emits a JSON summary on stdout and, for commands
// that produce files, a manifest sufficient to reproduce the run.

#include "egvq/bitstream.hpp"
#include "egvq/data.hpp"
#include "egvq/entropy_split.hpp"
#include "egvq/experiment.hpp"
#include "egvq/metrics.hpp"
#include "egvq/quantizers.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json format_magics() {
  return json{{"features", "EGVQFT1\\0"},
              {"codebook", "EGVQCB1\\0"},
              {"stream", "EGVQBS1\\0"}};
}

json base_manifest(const std::string& command, const json& config) {
  return json{{"tool", "egvq"},
              {"version", egvq::kVersion},
              {"command", command},
              {"config", config},
              {"formats", format_magics()}};
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << text;
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return json::parse(in);
}

// ---------------------------------------------------------------- synth --

struct SynthArgs {
  std::string config_path;
  std::string out_path;
  egvq::Index channels = 8;
  egvq::Index frames = 1000;
  std::string profile = "uniform";
  double variance = 1.0;
  double alpha = 1.0;
  std::vector<double> variances;
  double correlation = 0.0;
  std::uint64_t seed = 0;
  double mean_offset = 0.0;
};

int run_synth(const SynthArgs& args) {
  egvq::SyntheticConfig config;
  if (!args.config_path.empty()) {
    config = egvq::synthetic_config_from_json(load_json_file(args.config_path));
  } else {
    config.num_channels = args.channels;
    config.num_frames = args.frames;
    if (args.profile == "uniform") {
      config.profile = egvq::VarianceSpec::uniform(args.variance);
    } else if (args.profile == "power_law") {
      config.profile = egvq::VarianceSpec::power_law(args.variance, args.alpha);
    } else if (args.profile == "explicit") {
      config.profile = egvq::VarianceSpec::explicit_values_of(
          Eigen::Map<const Eigen::VectorXd>(args.variances.data(),
                                            static_cast<egvq::Index>(args.variances.size())));
    } else {
      throw std::invalid_argument("unknown profile: " + args.profile);
    }
    config.correlation = args.correlation;
    config.seed = args.seed;
    config.mean_offset = args.mean_offset;
  }

  const egvq::FeatureMatrix features = egvq::generate(config);
  egvq::write_features(features, args.out_path);

  json manifest = base_manifest("synth", egvq::synthetic_config_to_json(config));
  manifest["outputs"] = {args.out_path};
  write_json_file(fs::path(args.out_path).string() + ".manifest.json", manifest);

  json summary{{"output", args.out_path},
               {"frames", features.frames()},
               {"channels", features.channels()}};
  std::cout << summary.dump() << '\n';
  return 0;
}

// ---------------------------------------------------------------- stats --

int run_stats(const std::string& features_path, int groups, const std::string& out_path,
              const std::string& csv_path) {
  const egvq::FeatureMatrix features = egvq::read_features(features_path);
  const egvq::VarianceProfile profile = egvq::compute_channel_stats(features);
  const egvq::SplitReport report = egvq::entropy_split(profile, groups);

  json result = egvq::split_report_to_json(report);
  result["frames"] = profile.frame_count;
  if (groups >= 2) {
    // Variance share at the even midpoint, for comparison with the
    // entropy-guided boundary.
    const egvq::Index midpoint = features.channels() / 2;
    if (midpoint > 0 && midpoint < features.channels()) {
      const auto [left, right] = egvq::variance_share(profile, midpoint);
      result["even_midpoint"] = {{"boundary", midpoint},
                                 {"left_share", left},
                                 {"right_share", right}};
    }
  }
  result["manifest"] = base_manifest("stats", json{{"features", features_path},
                                                   {"groups", groups}});

  if (!csv_path.empty()) {
    std::string csv = "channel,mean,variance\n";
    for (egvq::Index k = 0; k < profile.channels(); ++k) {
      char line[96];
      std::snprintf(line, sizeof(line), "%lld,%.12g,%.12g\n",
                    static_cast<long long>(k), profile.means[k], profile.variances[k]);
      csv += line;
    }
    write_text_file(csv_path, csv);
  }
  if (!out_path.empty()) {
    write_json_file(out_path, result);
  }
  std::cout << result.dump() << '\n';
  return 0;
}

// ---------------------------------------------------------------- train --

struct TrainArgs {
  std::string features_path;
  std::string out_dir;
  int groups = 2;
  int depth = 2;
  egvq::Index codebook_size = 2048;
  std::string partition = "entropy";
  std::vector<egvq::Index> boundaries;
  double commitment_weight = 1.0;
  std::uint64_t seed = 0;
  int max_iterations = 25;
  double tolerance = 1e-4;
  std::string init = "kmeans_plus_plus";
  bool center = false;
};

int run_train(const TrainArgs& args) {
  const egvq::FeatureMatrix features = egvq::read_features(args.features_path);

  egvq::QuantizerSpec spec;
  spec.num_groups = args.groups;
  spec.depth = args.depth;
  spec.codebook_size = args.codebook_size;
  spec.partition = egvq::partition_mode_from_string(args.partition);
  spec.commitment_weight = args.commitment_weight;
  if (spec.partition == egvq::PartitionMode::explicit_ranges) {
    spec.explicit_partition = egvq::GroupPartition(args.boundaries, features.channels());
  }
  egvq::validate_spec(spec, features.channels());

  egvq::TrainConfig config;
  config.seed = args.seed;
  config.max_iterations = args.max_iterations;
  config.convergence_tolerance = args.tolerance;
  config.init = egvq::init_method_from_string(args.init);

  const egvq::TrainedQuantizer quantizer =
      egvq::train_quantizer(features, spec, config, args.center);
  egvq::save_quantizer(quantizer, args.out_dir);

  json config_json{{"features", args.features_path},
                   {"num_groups", args.groups},
                   {"depth", args.depth},
                   {"codebook_size", args.codebook_size},
                   {"partition", egvq::to_string(spec.partition)},
                   {"commitment_weight", args.commitment_weight},
                   {"seed", args.seed},
                   {"max_iterations", args.max_iterations},
                   {"convergence_tolerance", args.tolerance},
                   {"init", args.init},
                   {"center", args.center}};
  if (!args.boundaries.empty()) config_json["boundaries"] = args.boundaries;
  json manifest = base_manifest("train", config_json);
  manifest["outputs"] = {args.out_dir};
  write_json_file(fs::path(args.out_dir) / "manifest.json", manifest);

  json summary{{"quantizer_dir", args.out_dir},
               {"boundaries", quantizer.partition().boundaries()},
               {"train_frames", features.frames()}};
  if (quantizer.split_report()) {
    summary["split"] = egvq::split_report_to_json(*quantizer.split_report());
  }
  std::cout << summary.dump() << '\n';
  return 0;
}

// ----------------------------------------------------------- encode/decode --

int run_encode(const std::string& quantizer_dir, const std::string& features_path,
               const std::string& out_path, double frame_rate) {
  const egvq::TrainedQuantizer quantizer = egvq::load_quantizer(quantizer_dir);
  const egvq::FeatureMatrix features = egvq::read_features(features_path);
  const egvq::CodeFrame codes = egvq::encode(quantizer, features);
  const egvq::PackedStream stream = egvq::pack(codes, quantizer.spec(), frame_rate);
  egvq::write_stream(stream, out_path);

  json manifest = base_manifest("encode", json{{"quantizer_dir", quantizer_dir},
                                               {"features", features_path},
                                               {"frame_rate_hz", frame_rate}});
  manifest["outputs"] = {out_path};
  write_json_file(out_path + ".manifest.json", manifest);

  json summary{{"stream", out_path},
               {"frames", codes.frames()},
               {"payload_bits", stream.payload_bits()},
               {"bits_per_frame", quantizer.spec().bits_per_frame()},
               {"bitrate_bps", egvq::bitrate(quantizer.spec(), frame_rate)}};
  std::cout << summary.dump() << '\n';
  return 0;
}

int run_decode(const std::string& quantizer_dir, const std::string& stream_path,
               const std::string& out_path, const std::string& reference_path) {
  const egvq::TrainedQuantizer quantizer = egvq::load_quantizer(quantizer_dir);
  const egvq::PackedStream stream = egvq::read_stream(stream_path);
  const egvq::QuantizerSpec& spec = quantizer.spec();
  if (stream.num_groups != spec.num_groups || stream.depth != spec.depth ||
      stream.codebook_size != static_cast<std::uint32_t>(spec.codebook_size)) {
    throw std::runtime_error("stream header does not match the quantizer topology");
  }
  const egvq::FeatureMatrix reconstruction = egvq::decode(quantizer, egvq::unpack(stream));
  egvq::write_features(reconstruction, out_path);

  json summary{{"output", out_path},
               {"frames", reconstruction.frames()},
               {"channels", reconstruction.channels()}};
  if (!reference_path.empty()) {
    const egvq::FeatureMatrix reference = egvq::read_features(reference_path);
    summary["nmse"] = egvq::nmse(reference, reconstruction);
  }

  json manifest = base_manifest("decode", json{{"quantizer_dir", quantizer_dir},
                                               {"stream", stream_path},
                                               {"reference", reference_path}});
  manifest["outputs"] = {out_path};
  write_json_file(out_path + ".manifest.json", manifest);

  std::cout << summary.dump() << '\n';
  return 0;
}

// --------------------------------------------------------------- compare --

int run_compare_cmd(const std::string& config_path, const std::string& out_dir, int jobs) {
  egvq::ExperimentConfig config =
      egvq::experiment_config_from_json(load_json_file(config_path));
  if (jobs > 0) config.jobs = jobs;

  const egvq::ComparisonReport report = egvq::run_compare(config);

  fs::create_directories(out_dir);
  write_text_file(fs::path(out_dir) / "results.csv", egvq::comparison_csv(report));
  const json report_json = egvq::comparison_to_json(report);
  write_json_file(fs::path(out_dir) / "results.json", report_json);

  json manifest = base_manifest("compare", egvq::experiment_config_to_json(config));
  manifest["outputs"] = {(fs::path(out_dir) / "results.csv").string(),
                         (fs::path(out_dir) / "results.json").string()};
  write_json_file(fs::path(out_dir) / "manifest.json", manifest);

  json summary{{"output_dir", out_dir},
               {"cells", report.cells.size()},
               {"summaries", report_json.at("summaries")},
               {"pairwise", report_json.at("pairwise")}};
  std::cout << summary.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-guided grouped residual vector quantization toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic feature corpus");
  synth_cmd->add_option("--config", synth.config_path, "SyntheticConfig JSON file");
  synth_cmd->add_option("--out", synth.out_path, "Output .egft path")->required();
  synth_cmd->add_option("--channels", synth.channels);
  synth_cmd->add_option("--frames", synth.frames);
  synth_cmd->add_option("--profile", synth.profile, "uniform | power_law | explicit");
  synth_cmd->add_option("--variance", synth.variance, "Uniform variance or power-law v0");
  synth_cmd->add_option("--alpha", synth.alpha, "Power-law exponent");
  synth_cmd->add_option("--variances", synth.variances, "Explicit per-channel variances");
  synth_cmd->add_option("--correlation", synth.correlation);
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--mean-offset", synth.mean_offset);

  std::string stats_features, stats_out, stats_csv;
  int stats_groups = 2;
  CLI::App* stats_cmd =
      app.add_subcommand("stats", "Channel statistics and the entropy-guided split");
  stats_cmd->add_option("features", stats_features, ".egft or CSV feature file")->required();
  stats_cmd->add_option("--groups", stats_groups, "Number of groups");
  stats_cmd->add_option("--out", stats_out, "Write the split report JSON here");
  stats_cmd->add_option("--csv", stats_csv, "Write per-channel mean/variance CSV here");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a grouped residual quantizer");
  train_cmd->add_option("features", train.features_path)->required();
  train_cmd->add_option("--out", train.out_dir, "Quantizer output directory")->required();
  train_cmd->add_option("--groups", train.groups);
  train_cmd->add_option("--depth", train.depth);
  train_cmd->add_option("--codebook-size", train.codebook_size);
  train_cmd->add_option("--partition", train.partition, "even | entropy | explicit");
  train_cmd->add_option("--boundaries", train.boundaries, "Explicit split indices");
  train_cmd->add_option("--commitment-weight", train.commitment_weight);
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--max-iters", train.max_iterations);
  train_cmd->add_option("--tol", train.tolerance);
  train_cmd->add_option("--init", train.init, "kmeans_plus_plus | random_sample");
  train_cmd->add_flag("--center", train.center, "Subtract training-set channel means");

  std::string encode_dir, encode_features, encode_out;
  double encode_rate = 12.5;
  CLI::App* encode_cmd = app.add_subcommand("encode", "Encode features to a bitstream");
  encode_cmd->add_option("quantizer", encode_dir, "Trained quantizer directory")->required();
  encode_cmd->add_option("features", encode_features)->required();
  encode_cmd->add_option("out", encode_out, "Output .egvq path")->required();
  encode_cmd->add_option("--frame-rate", encode_rate, "Frames per second");

  std::string decode_dir, decode_stream, decode_out, decode_reference;
  CLI::App* decode_cmd = app.add_subcommand("decode", "Decode a bitstream to features");
  decode_cmd->add_option("quantizer", decode_dir, "Trained quantizer directory")->required();
  decode_cmd->add_option("stream", decode_stream, "Input .egvq path")->required();
  decode_cmd->add_option("out", decode_out, "Output .egft path")->required();
  decode_cmd->add_option("--reference", decode_reference,
                         "Reference features; prints reconstruction NMSE");

  std::string compare_config, compare_out = "compare_out";
  int compare_jobs = 0;
  CLI::App* compare_cmd =
      app.add_subcommand("compare", "Train and evaluate several quantizer variants");
  compare_cmd->add_option("--config", compare_config, "ExperimentConfig JSON file")->required();
  compare_cmd->add_option("--out", compare_out, "Output directory");
  compare_cmd->add_option("--jobs", compare_jobs, "Parallel grid cells (0 = from config)");

  try {
    app.parse(argc, argv);
    if (synth_cmd->parsed()) return run_synth(synth);
    if (stats_cmd->parsed()) return run_stats(stats_features, stats_groups, stats_out, stats_csv);
    if (train_cmd->parsed()) return run_train(train);
    if (encode_cmd->parsed()) {
      return run_encode(encode_dir, encode_features, encode_out, encode_rate);
    }
    if (decode_cmd->parsed()) {
      return run_decode(decode_dir, decode_stream, decode_out, decode_reference);
    }
    if (compare_cmd->parsed()) return run_compare_cmd(compare_config, compare_out, compare_jobs);
    return 1;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help and friends
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << '\n';
    return e.get_exit_code();
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << '\n';
    return 1;
  }
}
