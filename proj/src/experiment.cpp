#include "egvq/experiment.hpp"

#include "egvq/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

namespace egvq {

namespace {

// Stream tags for per-seed derivations.
constexpr std::uint64_t kCorpusTag = 1;
constexpr std::uint64_t kSplitTag = 2;
constexpr std::uint64_t kTrainTag = 3;

FeatureMatrix select_frames(const FeatureMatrix& features, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), features.channels());
  for (Index i = 0; i < out.rows(); ++i) {
    out.row(i) = features.values().row(rows[static_cast<std::size_t>(i)]);
  }
  return FeatureMatrix(std::move(out));
}

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.12g", v);
  return buffer;
}

std::string join_indices(const std::vector<Index>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ';';
    out += std::to_string(values[i]);
  }
  return out;
}

std::string join_doubles(const Eigen::VectorXd& values) {
  std::string out;
  for (Index i = 0; i < values.size(); ++i) {
    if (i > 0) out += ';';
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace

SplitIndices split_frames(Index num_frames, double train_fraction, std::uint64_t seed) {
  if (num_frames < 2) {
    throw std::invalid_argument("split_frames: need at least 2 frames");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split_frames: fraction must be in (0, 1)");
  }
  std::vector<Index> order(static_cast<std::size_t>(num_frames));
  for (Index i = 0; i < num_frames; ++i) order[static_cast<std::size_t>(i)] = i;
  Xoshiro256pp rng(seed);
  for (Index i = num_frames - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  Index train_count = static_cast<Index>(train_fraction * static_cast<double>(num_frames));
  train_count = std::clamp<Index>(train_count, 1, num_frames - 1);

  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + train_count);
  split.eval.assign(order.begin() + train_count, order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.eval.begin(), split.eval.end());
  return split;
}

namespace {

CellResult run_cell(const ExperimentConfig& config, const SpecVariant& variant,
                    std::uint64_t seed, const FeatureMatrix& corpus) {
  const SplitIndices split =
      split_frames(corpus.frames(), config.split_fraction, derive_seed(seed, kSplitTag));
  const FeatureMatrix train_set = select_frames(corpus, split.train);
  const FeatureMatrix eval_set = select_frames(corpus, split.eval);

  QuantizerSpec spec = variant.spec;
  if (spec.partition == PartitionMode::explicit_ranges) {
    spec.explicit_partition = GroupPartition(variant.explicit_boundaries, corpus.channels());
  }
  TrainConfig train_config = config.train;
  train_config.seed = derive_seed(seed, kTrainTag);

  const TrainedQuantizer quantizer =
      train_quantizer(train_set, spec, train_config, config.center);

  CellResult cell;
  cell.spec_name = variant.name;
  cell.seed = seed;
  cell.num_groups = spec.num_groups;
  cell.depth = spec.depth;
  cell.codebook_size = spec.codebook_size;
  cell.boundaries = quantizer.partition().boundaries();
  cell.train_frames = train_set.frames();
  cell.eval_frames = eval_set.frames();
  cell.nmse = nmse_report(quantizer, eval_set);
  cell.utilization = utilization_report(quantizer, eval_set);
  cell.bitrate_bps = bitrate(spec, config.frame_rate_hz, config.extra_codebooks);
  cell.commitment = commitment_loss(eval_set.values(),
                                    decode(quantizer, encode(quantizer, eval_set)).values(),
                                    spec.commitment_weight);
  return cell;
}

}  // namespace

ComparisonReport run_compare(const ExperimentConfig& config) {
  if (config.specs.empty()) {
    throw std::invalid_argument("run_compare: need at least one spec");
  }
  if (config.seeds.empty()) {
    throw std::invalid_argument("run_compare: need at least one seed");
  }
  if (!(config.split_fraction > 0.0 && config.split_fraction < 1.0)) {
    throw std::invalid_argument("run_compare: split fraction must be in (0, 1)");
  }
  const bool synthetic = config.corpus.synthetic.has_value();
  if (synthetic == config.corpus.features_path.has_value()) {
    throw std::invalid_argument("run_compare: corpus must be synthetic or a feature file");
  }

  // One corpus per seed: synthetic corpora are regenerated from a
  // seed-derived stream, file corpora are shared.
  std::vector<FeatureMatrix> corpora;
  corpora.reserve(config.seeds.size());
  std::optional<FeatureMatrix> file_corpus;
  if (!synthetic) {
    file_corpus = read_features(*config.corpus.features_path);
  }
  for (const std::uint64_t seed : config.seeds) {
    if (synthetic) {
      SyntheticConfig corpus_config = *config.corpus.synthetic;
      corpus_config.seed = derive_seed(seed, kCorpusTag);
      corpora.push_back(generate(corpus_config));
    } else {
      corpora.push_back(*file_corpus);
    }
  }

  // Grid cells are independent; run them on a small worker pool. Every
  // cell writes only its own slot.
  const std::size_t num_cells = config.seeds.size() * config.specs.size();
  std::vector<CellResult> cells(num_cells);
  std::vector<std::exception_ptr> errors(num_cells);
  std::atomic<std::size_t> next{0};
  const int jobs = std::max(1, config.jobs);
  auto worker = [&]() {
    while (true) {
      const std::size_t cell_index = next.fetch_add(1);
      if (cell_index >= num_cells) return;
      const std::size_t seed_index = cell_index / config.specs.size();
      const std::size_t spec_index = cell_index % config.specs.size();
      try {
        cells[cell_index] = run_cell(config, config.specs[spec_index],
                                     config.seeds[seed_index], corpora[seed_index]);
      } catch (...) {
        errors[cell_index] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }

  ComparisonReport report;
  report.cells = std::move(cells);

  const std::size_t num_specs = config.specs.size();
  const std::size_t num_seeds = config.seeds.size();
  for (std::size_t i = 0; i < num_specs; ++i) {
    SpecSummary summary;
    summary.name = config.specs[i].name;
    summary.mean_cumulative =
        Eigen::VectorXd::Zero(config.specs[i].spec.depth);
    for (std::size_t s = 0; s < num_seeds; ++s) {
      const CellResult& cell = report.cells[s * num_specs + i];
      summary.mean_total_nmse += cell.nmse.total;
      summary.mean_min_utilization += cell.utilization.min();
      summary.mean_cumulative += cell.nmse.cumulative;
    }
    summary.mean_total_nmse /= static_cast<double>(num_seeds);
    summary.mean_min_utilization /= static_cast<double>(num_seeds);
    summary.mean_cumulative /= static_cast<double>(num_seeds);
    report.summaries.push_back(std::move(summary));
  }

  for (std::size_t a = 0; a < num_specs; ++a) {
    for (std::size_t b = 0; b < num_specs; ++b) {
      if (a == b) continue;
      PairwiseVerdict verdict;
      verdict.a = config.specs[a].name;
      verdict.b = config.specs[b].name;
      verdict.seeds = static_cast<int>(num_seeds);
      for (std::size_t s = 0; s < num_seeds; ++s) {
        const CellResult& cell_a = report.cells[s * num_specs + a];
        const CellResult& cell_b = report.cells[s * num_specs + b];
        if (cell_a.nmse.total <= cell_b.nmse.total) ++verdict.nmse_le;
        if (cell_a.utilization.min() >= cell_b.utilization.min()) ++verdict.min_utilization_ge;
      }
      report.pairwise.push_back(std::move(verdict));
    }
  }
  return report;
}

std::string comparison_csv(const ComparisonReport& report) {
  std::string out =
      "spec,seed,num_groups,depth,codebook_size,partition_boundaries,train_frames,"
      "eval_frames,bitrate_bps,total_nmse,cumulative_nmse,min_utilization,"
      "mean_utilization,commitment\n";
  for (const CellResult& cell : report.cells) {
    out += cell.spec_name + "," + std::to_string(cell.seed) + "," +
           std::to_string(cell.num_groups) + "," + std::to_string(cell.depth) + "," +
           std::to_string(cell.codebook_size) + "," + join_indices(cell.boundaries) + "," +
           std::to_string(cell.train_frames) + "," + std::to_string(cell.eval_frames) + "," +
           format_double(cell.bitrate_bps) + "," + format_double(cell.nmse.total) + "," +
           join_doubles(cell.nmse.cumulative) + "," + format_double(cell.utilization.min()) +
           "," + format_double(cell.utilization.mean()) + "," +
           format_double(cell.commitment) + "\n";
  }
  return out;
}

nlohmann::json comparison_to_json(const ComparisonReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const CellResult& cell : report.cells) {
    cells.push_back(
        {{"spec", cell.spec_name},
         {"seed", cell.seed},
         {"num_groups", cell.num_groups},
         {"depth", cell.depth},
         {"codebook_size", cell.codebook_size},
         {"partition_boundaries", cell.boundaries},
         {"train_frames", cell.train_frames},
         {"eval_frames", cell.eval_frames},
         {"bitrate_bps", cell.bitrate_bps},
         {"nmse", nmse_report_to_json(cell.nmse)},
         {"utilization",
          utilization_report_to_json(cell.utilization, cell.num_groups, cell.depth)},
         {"commitment", cell.commitment}});
  }
  nlohmann::json summaries = nlohmann::json::array();
  for (const SpecSummary& summary : report.summaries) {
    summaries.push_back({{"spec", summary.name},
                         {"mean_total_nmse", summary.mean_total_nmse},
                         {"mean_min_utilization", summary.mean_min_utilization},
                         {"mean_cumulative",
                          std::vector<double>(summary.mean_cumulative.begin(),
                                              summary.mean_cumulative.end())}});
  }
  nlohmann::json pairwise = nlohmann::json::array();
  for (const PairwiseVerdict& verdict : report.pairwise) {
    pairwise.push_back({{"a", verdict.a},
                        {"b", verdict.b},
                        {"seeds", verdict.seeds},
                        {"nmse_le", verdict.nmse_le},
                        {"min_utilization_ge", verdict.min_utilization_ge}});
  }
  return nlohmann::json{
      {"cells", std::move(cells)},
      {"summaries", std::move(summaries)},
      {"pairwise", std::move(pairwise)},
  };
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& config) {
  nlohmann::json corpus;
  if (config.corpus.synthetic) {
    corpus["synthetic"] = synthetic_config_to_json(*config.corpus.synthetic);
  }
  if (config.corpus.features_path) {
    corpus["features"] = config.corpus.features_path->string();
  }
  nlohmann::json specs = nlohmann::json::array();
  for (const SpecVariant& variant : config.specs) {
    nlohmann::json spec{{"name", variant.name},
                        {"num_groups", variant.spec.num_groups},
                        {"depth", variant.spec.depth},
                        {"codebook_size", variant.spec.codebook_size},
                        {"partition", to_string(variant.spec.partition)},
                        {"commitment_weight", variant.spec.commitment_weight}};
    if (variant.spec.partition == PartitionMode::explicit_ranges) {
      spec["boundaries"] = variant.explicit_boundaries;
    }
    specs.push_back(std::move(spec));
  }
  return nlohmann::json{{"corpus", std::move(corpus)},
                        {"specs", std::move(specs)},
                        {"split_fraction", config.split_fraction},
                        {"seeds", config.seeds},
                        {"frame_rate_hz", config.frame_rate_hz},
                        {"extra_codebooks", config.extra_codebooks},
                        {"train",
                         {{"max_iterations", config.train.max_iterations},
                          {"convergence_tolerance", config.train.convergence_tolerance},
                          {"init", to_string(config.train.init)}}},
                        {"center", config.center},
                        {"jobs", config.jobs}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig config;
  const nlohmann::json& corpus = j.at("corpus");
  if (corpus.contains("synthetic")) {
    config.corpus.synthetic = synthetic_config_from_json(corpus.at("synthetic"));
  }
  if (corpus.contains("features")) {
    config.corpus.features_path = corpus.at("features").get<std::string>();
  }
  for (const nlohmann::json& spec_json : j.at("specs")) {
    SpecVariant variant;
    variant.name = spec_json.at("name").get<std::string>();
    variant.spec.num_groups = spec_json.at("num_groups").get<int>();
    variant.spec.depth = spec_json.at("depth").get<int>();
    variant.spec.codebook_size = spec_json.at("codebook_size").get<Index>();
    variant.spec.partition =
        partition_mode_from_string(spec_json.at("partition").get<std::string>());
    variant.spec.commitment_weight = spec_json.value("commitment_weight", 1.0);
    if (variant.spec.partition == PartitionMode::explicit_ranges) {
      variant.explicit_boundaries = spec_json.at("boundaries").get<std::vector<Index>>();
    }
    config.specs.push_back(std::move(variant));
  }
  config.split_fraction = j.value("split_fraction", 0.9);
  config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  config.frame_rate_hz = j.value("frame_rate_hz", 12.5);
  config.extra_codebooks = j.value("extra_codebooks", 0);
  if (j.contains("train")) {
    const nlohmann::json& train = j.at("train");
    config.train.max_iterations = train.value("max_iterations", 25);
    config.train.convergence_tolerance = train.value("convergence_tolerance", 1e-4);
    if (train.contains("init")) {
      config.train.init = init_method_from_string(train.at("init").get<std::string>());
    }
  }
  config.center = j.value("center", false);
  config.jobs = j.value("jobs", 1);
  return config;
}

}  // namespace egvq
