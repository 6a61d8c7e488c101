#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mdk/dataset.hpp"
#include "mdk/model.hpp"
#include "mdk/tensor.hpp"

namespace mdk {

/// One sequence pushed through a test transform and the regressor, with the
/// per-image predictions fused by averaging.
struct SequencePrediction {
    std::string sequence_id;
    std::vector<double> per_image;  // months, one per transformed image
    std::size_t image_count = 0;    // survives CSV round-trips without per_image
    double fused_months = 0.0;      // exact arithmetic mean of per_image
    double true_months = 0.0;
    DataKind kind = DataKind::Original;
    ComplexPart component = ComplexPart::NotComplex;
    HeartState heart_state = HeartState::Other;
    std::string state_label;
};

/// Exact arithmetic mean.
double fuse_mean(const std::vector<double>& values);

/// Valid test transforms: Original, Svd1Recon, Svd1Mode, HodmdRecon with
/// component NotComplex, and HodmdMode with an explicit Abs/Real/Imag
/// component. The canonical evaluation uses HodmdMode + Abs.
void validate_test_kind(DataKind kind, ComplexPart component);

/// "hodmd_modes_abs" style label used in prediction CSVs.
std::string test_kind_label(DataKind kind, ComplexPart component);

/// Accepts both dash and underscore spellings ("hodmd-modes-abs").
std::pair<DataKind, ComplexPart> parse_test_kind(const std::string& text);

/// Transform one homogenized sequence per the test kind, run the regression
/// branch on every produced image, and fuse by mean. HODMD-backed kinds
/// reject sequences shorter than the configured snapshot minimum.
SequencePrediction predict_sequence(const ModelConfig& mcfg, const ModelParams& params,
                                    const VideoSequence& seq, DataKind kind,
                                    ComplexPart component, const GenerationConfig& gcfg);

struct MetricsRow {
    std::string label;  // heart-state label, or "total"
    double mu = 0.0;    // mean of fused predictions over sequences
    double sigma = 0.0;
    double rmse = 0.0;               // error margin
    double max_error_signed = 0.0;   // largest signed error
    double min_error_signed = 0.0;   // smallest signed error (most negative)
    double min_error_unsigned = 0.0; // smallest magnitude
    std::size_t sequences = 0;
    std::size_t images = 0;
};

struct TimingBlock {
    double t_svd_ms = 0.0;    // per image
    double t_hosvd_ms = 0.0;  // per image
    double t_hodmd_ms = 0.0;  // per image
    double t_pred_ms = 0.0;   // per image
    double throughput_ips = 0.0;  // 1000 / t_pred_ms
};

struct MetricsReport {
    std::vector<MetricsRow> per_state;  // sorted by label
    MetricsRow total;
    TimingBlock timing;
    bool has_timing = false;
};

/// Per-state and total statistics over fused sequence predictions. Signed
/// errors are prediction minus truth, so a negative error means the model
/// called the failure earlier than it happened. The result is independent of
/// input order.
MetricsReport evaluate(const std::vector<SequencePrediction>& preds);

/// Wall-clock per-image phase costs on a fixture corpus: matrix SVD, tensor
/// HOSVD, the iterative delay-embedded decomposition, and the model forward
/// pass (10 warmup images, then at least 100 timed). Single-threaded,
/// monotonic clock, no file IO inside the timed regions.
TimingBlock bench(const ModelConfig& mcfg, const ModelParams& params,
                  const std::vector<VideoSequence>& corpus, const GenerationConfig& gcfg);

std::string metrics_to_json(const MetricsReport& report);
std::string metrics_to_table(const MetricsReport& report);

void write_predictions_csv(const std::string& path,
                           const std::vector<SequencePrediction>& preds);
std::vector<SequencePrediction> read_predictions_csv(const std::string& path);

}  // namespace mdk
