#include "egvq/metrics.hpp"

#include <cstdio>
#include <vector>

namespace egvq {

double nmse(const FeatureMatrix& reference, const FeatureMatrix& reconstruction) {
  return nmse(reference.values(), reconstruction.values());
}

NmseReport nmse_report(const TrainedQuantizer& quantizer, const FeatureMatrix& features) {
  if (features.channels() != quantizer.channels()) {
    throw std::invalid_argument("nmse_report: channel count mismatch");
  }
  const int depth = quantizer.spec().depth;
  const CodeFrame codes = encode(quantizer, features);

  NmseReport report;
  report.cumulative.resize(depth);
  report.incremental.resize(depth);
  for (int s = 1; s <= depth; ++s) {
    report.cumulative[s - 1] = nmse(features, partial_decode(quantizer, codes, s));
  }
  if (quantizer.centered()) {
    Matrix mean_recon(features.frames(), features.channels());
    mean_recon.rowwise() = quantizer.channel_means().transpose();
    report.baseline = nmse(features.values(), mean_recon);
  } else {
    report.baseline = 1.0;  // zero reconstruction leaves the full energy
  }
  for (int s = 0; s < depth; ++s) {
    const double before = s == 0 ? report.baseline : report.cumulative[s - 1];
    report.incremental[s] = before - report.cumulative[s];
  }
  report.total = report.cumulative[depth - 1];
  return report;
}

UtilizationReport utilization_from_codes(const CodeFrame& codes, Index codebook_size) {
  if (codes.frames() < 1) {
    throw std::invalid_argument("utilization: need at least 1 frame");
  }
  const Index num_codebooks = codes.indices.cols();
  UtilizationReport report;
  report.per_codebook.resize(num_codebooks);
  report.frames_counted = codes.frames();
  std::vector<bool> seen;
  for (Index c = 0; c < num_codebooks; ++c) {
    seen.assign(static_cast<std::size_t>(codebook_size), false);
    Index distinct = 0;
    for (Index t = 0; t < codes.frames(); ++t) {
      const std::uint32_t idx = codes.indices(t, c);
      if (idx >= static_cast<std::uint32_t>(codebook_size)) {
        throw std::out_of_range("utilization: code index out of range");
      }
      if (!seen[idx]) {
        seen[idx] = true;
        ++distinct;
      }
    }
    report.per_codebook[c] =
        static_cast<double>(distinct) / static_cast<double>(codebook_size);
  }
  return report;
}

UtilizationReport utilization_report(const TrainedQuantizer& quantizer,
                                     const FeatureMatrix& features) {
  quantizer.reset_usage();
  const CodeFrame codes = encode(quantizer, features);
  return utilization_from_codes(codes, quantizer.spec().codebook_size);
}

double bitrate(const QuantizerSpec& spec, double frame_rate_hz, int extra_codebooks) {
  if (!(frame_rate_hz > 0.0) || !std::isfinite(frame_rate_hz)) {
    throw std::invalid_argument("bitrate: frame rate must be finite and > 0");
  }
  if (extra_codebooks < 0) {
    throw std::invalid_argument("bitrate: extra codebook count must be >= 0");
  }
  const double codebooks = static_cast<double>(spec.total_codebooks() + extra_codebooks);
  return codebooks * static_cast<double>(spec.bits_per_index()) * frame_rate_hz;
}

namespace {

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.12g", v);
  return buffer;
}

// Conventional codebook numbering is stage-major across groups: codebook
// k covers group (k-1) % G, stage (k-1) / G.
Index group_major_position(int label, int num_groups, int depth) {
  const int g = (label - 1) % num_groups;
  const int s = (label - 1) / num_groups;
  return static_cast<Index>(g) * depth + s;
}

}  // namespace

std::string nmse_report_csv(const NmseReport& report) {
  std::string out = "stage,cumulative_nmse,incremental_nmse\n";
  for (Index s = 0; s < report.cumulative.size(); ++s) {
    out += std::to_string(s + 1) + "," + format_double(report.cumulative[s]) + "," +
           format_double(report.incremental[s]) + "\n";
  }
  return out;
}

std::string utilization_report_csv(const UtilizationReport& report, int num_groups,
                                   int depth) {
  if (report.per_codebook.size() != static_cast<Index>(num_groups) * depth) {
    throw std::invalid_argument("utilization_report_csv: layout mismatch");
  }
  std::string out = "codebook,utilization\n";
  for (int label = 1; label <= num_groups * depth; ++label) {
    const Index pos = group_major_position(label, num_groups, depth);
    out += std::to_string(label) + "," + format_double(report.per_codebook[pos]) + "\n";
  }
  return out;
}

nlohmann::json nmse_report_to_json(const NmseReport& report) {
  nlohmann::json j;
  j["cumulative"] =
      std::vector<double>(report.cumulative.begin(), report.cumulative.end());
  j["incremental"] =
      std::vector<double>(report.incremental.begin(), report.incremental.end());
  j["baseline"] = report.baseline;
  j["total"] = report.total;
  return j;
}

nlohmann::json utilization_report_to_json(const UtilizationReport& report, int num_groups,
                                          int depth) {
  if (report.per_codebook.size() != static_cast<Index>(num_groups) * depth) {
    throw std::invalid_argument("utilization_report_to_json: layout mismatch");
  }
  nlohmann::json per_codebook = nlohmann::json::array();
  for (int label = 1; label <= num_groups * depth; ++label) {
    const Index pos = group_major_position(label, num_groups, depth);
    per_codebook.push_back({{"codebook", label},
                            {"group", (label - 1) % num_groups},
                            {"stage", (label - 1) / num_groups},
                            {"utilization", report.per_codebook[pos]}});
  }
  nlohmann::json j;
  j["per_codebook"] = std::move(per_codebook);
  j["frames_counted"] = report.frames_counted;
  j["min"] = report.min();
  j["mean"] = report.mean();
  return j;
}

}  // namespace egvq
