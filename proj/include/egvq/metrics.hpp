#pragma once

#include "egvq/quantizers.hpp"
#include "egvq/types.hpp"

#include <json.hpp>

#include <string>

namespace egvq {

/// Normalized mean squared error: ||reference - reconstruction||_F^2 over
/// ||reference||_F^2, accumulated in double. Scale-invariant; undefined
/// (throws) for an identically zero reference.
template <typename DerivedA, typename DerivedB>
double nmse(const Eigen::MatrixBase<DerivedA>& reference,
            const Eigen::MatrixBase<DerivedB>& reconstruction) {
  if (reference.rows() != reconstruction.rows() ||
      reference.cols() != reconstruction.cols()) {
    throw std::invalid_argument("nmse: shape mismatch");
  }
  const double reference_energy = reference.template cast<double>().squaredNorm();
  if (reference_energy == 0.0) {
    throw std::invalid_argument("nmse: undefined for zero reference");
  }
  const double error_energy =
      (reference.template cast<double>() - reconstruction.template cast<double>())
          .squaredNorm();
  return error_energy / reference_energy;
}

double nmse(const FeatureMatrix& reference, const FeatureMatrix& reconstruction);

/// Stage-resolved distortion. cumulative[s] is the NMSE of the
/// reconstruction truncated after stage s+1; incremental[s] is how much
/// stage s+1 lowered it. `baseline` is the NMSE of the zeroth-order
/// reconstruction (zero, or the channel means when the quantizer is
/// centered), so incremental[0] = baseline - cumulative[0].
struct NmseReport {
  Eigen::VectorXd cumulative;
  Eigen::VectorXd incremental;
  double baseline = 1.0;
  double total = 0.0;  // == cumulative[depth - 1]
};

NmseReport nmse_report(const TrainedQuantizer& quantizer, const FeatureMatrix& features);

/// Fraction of each codebook's entries selected at least once over the
/// evaluation corpus, in group-major (group, stage) order.
struct UtilizationReport {
  Eigen::VectorXd per_codebook;
  std::int64_t frames_counted = 0;

  double min() const { return per_codebook.minCoeff(); }
  double mean() const { return per_codebook.mean(); }
};

UtilizationReport utilization_report(const TrainedQuantizer& quantizer,
                                     const FeatureMatrix& features);
UtilizationReport utilization_from_codes(const CodeFrame& codes, Index codebook_size);

/// Fixed-length-index bitrate in bits per second:
/// (G*D + extra_codebooks) * log2(N) * frame_rate.
double bitrate(const QuantizerSpec& spec, double frame_rate_hz, int extra_codebooks = 0);

// Report serialization. CSV columns are fixed: "stage, cumulative_nmse,
// incremental_nmse" and "codebook, utilization". Codebook labels follow
// the conventional stage-major numbering (codebook 1 = group 0 stage 0,
// codebook 2 = group 1 stage 0, ...), while vectors stay group-major.
std::string nmse_report_csv(const NmseReport& report);
std::string utilization_report_csv(const UtilizationReport& report, int num_groups, int depth);
nlohmann::json nmse_report_to_json(const NmseReport& report);
nlohmann::json utilization_report_to_json(const UtilizationReport& report, int num_groups,
                                          int depth);

}  // namespace egvq
