#pragma once

#include "egvq/data.hpp"
#include "egvq/metrics.hpp"
#include "egvq/quantizers.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace egvq {

/// One quantizer configuration under comparison. Explicit partitions are
/// stored as raw boundaries and resolved against the corpus channel count
/// when the experiment runs.
struct SpecVariant {
  std::string name;
  QuantizerSpec spec;
  std::vector<Index> explicit_boundaries;
};

/// Either a synthetic corpus (regenerated per seed) or a feature file
/// (shared across seeds; only the split and training vary).
struct CorpusSource {
  std::optional<SyntheticConfig> synthetic;
  std::optional<std::filesystem::path> features_path;
};

struct ExperimentConfig {
  CorpusSource corpus;
  std::vector<SpecVariant> specs;
  double split_fraction = 0.9;  // train share, frame-wise shuffled split
  std::vector<std::uint64_t> seeds;
  double frame_rate_hz = 12.5;
  int extra_codebooks = 0;  // codebooks counted in the bitrate but coded elsewhere
  TrainConfig train;
  bool center = false;
  int jobs = 1;
};

/// Deterministic frame-wise split: a seeded shuffle of 0..T-1, first
/// floor(fraction*T) frames train, the rest evaluate, both re-sorted
/// ascending.
struct SplitIndices {
  std::vector<Index> train;
  std::vector<Index> eval;
};
SplitIndices split_frames(Index num_frames, double train_fraction, std::uint64_t seed);

struct CellResult {
  std::string spec_name;
  std::uint64_t seed = 0;
  int num_groups = 1;
  int depth = 1;
  Index codebook_size = 2;
  std::vector<Index> boundaries;  // resolved partition, interior splits
  Index train_frames = 0;
  Index eval_frames = 0;
  NmseReport nmse;
  UtilizationReport utilization;
  double bitrate_bps = 0.0;
  double commitment = 0.0;
};

struct SpecSummary {
  std::string name;
  double mean_total_nmse = 0.0;
  double mean_min_utilization = 0.0;
  Eigen::VectorXd mean_cumulative;
};

/// Seed-counted ordering verdicts for every ordered pair of specs.
struct PairwiseVerdict {
  std::string a;
  std::string b;
  int seeds = 0;
  int nmse_le = 0;          // seeds where total NMSE of a <= that of b
  int min_utilization_ge = 0;  // seeds where min utilization of a >= that of b
};

struct ComparisonReport {
  std::vector<CellResult> cells;  // seed-major, then spec order
  std::vector<SpecSummary> summaries;
  std::vector<PairwiseVerdict> pairwise;
};

ComparisonReport run_compare(const ExperimentConfig& config);

std::string comparison_csv(const ComparisonReport& report);
nlohmann::json comparison_to_json(const ComparisonReport& report);

nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

}  // namespace egvq
