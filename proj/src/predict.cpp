#include "mdk/predict.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "mdk/errors.hpp"
#include "mdk/hodmd.hpp"
#include "mdk/io.hpp"
#include "mdk/modal_svd.hpp"

namespace mdk {

double fuse_mean(const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("cannot fuse an empty prediction set");
    const double sum = std::accumulate(values.begin(), values.end(), 0.0);
    return sum / static_cast<double>(values.size());
}

void validate_test_kind(DataKind kind, ComplexPart component) {
    switch (kind) {
        case DataKind::Original:
        case DataKind::Svd1Recon:
        case DataKind::Svd1Mode:
        case DataKind::HodmdRecon:
            if (component != ComplexPart::NotComplex)
                throw ConfigError(std::string("test kind ") + to_string(kind) +
                                  " does not take a complex component");
            return;
        case DataKind::HodmdMode:
            if (component == ComplexPart::NotComplex)
                throw ConfigError("mode-image test kinds need an abs/real/imag component");
            return;
        default:
            throw ConfigError(std::string(to_string(kind)) + " is not a test transform");
    }
}

std::string test_kind_label(DataKind kind, ComplexPart component) {
    validate_test_kind(kind, component);
    switch (kind) {
        case DataKind::Original: return "original";
        case DataKind::Svd1Recon: return "svd_recon";
        case DataKind::Svd1Mode: return "svd_modes";
        case DataKind::HodmdRecon: return "hodmd_recon";
        default: break;
    }
    return std::string("hodmd_modes_") + to_string(component);
}

std::pair<DataKind, ComplexPart> parse_test_kind(const std::string& text) {
    std::string t = text;
    std::replace(t.begin(), t.end(), '-', '_');
    if (t == "original") return {DataKind::Original, ComplexPart::NotComplex};
    if (t == "svd_recon") return {DataKind::Svd1Recon, ComplexPart::NotComplex};
    if (t == "svd_modes") return {DataKind::Svd1Mode, ComplexPart::NotComplex};
    if (t == "hodmd_recon") return {DataKind::HodmdRecon, ComplexPart::NotComplex};
    if (t == "hodmd_modes_abs") return {DataKind::HodmdMode, ComplexPart::Abs};
    if (t == "hodmd_modes_real") return {DataKind::HodmdMode, ComplexPart::Real};
    if (t == "hodmd_modes_imag") return {DataKind::HodmdMode, ComplexPart::Imag};
    throw ConfigError("unknown test kind: " + text);
}

SequencePrediction predict_sequence(const ModelConfig& mcfg, const ModelParams& params,
                                    const VideoSequence& seq, DataKind kind,
                                    ComplexPart component, const GenerationConfig& gcfg) {
    validate_test_kind(kind, component);
    seq.validate();
    const bool needs_dmd = kind == DataKind::HodmdRecon || kind == DataKind::HodmdMode;
    if (needs_dmd && seq.frame_count() < gcfg.hodmd.min_snapshots)
        throw SequenceTooShort("sequence " + seq.annotation.sequence_id + " has " +
                               std::to_string(seq.frame_count()) + " snapshots, below the " +
                               std::to_string(gcfg.hodmd.min_snapshots) +
                               " needed for the delay pipeline");

    TrainingCase transform;
    transform.id = 0;
    transform.kinds = {kind};
    const std::vector<SampleRecord> records = generate_sequence_samples(seq, transform, gcfg);

    SequencePrediction out;
    out.sequence_id = seq.annotation.sequence_id;
    out.true_months = seq.annotation.failure_age_months;
    out.kind = kind;
    out.component = component;
    out.heart_state = seq.annotation.heart_state;
    out.state_label = seq.annotation.state_label;
    for (const SampleRecord& rec : records) {
        if (rec.kind != kind) continue;
        if (kind == DataKind::HodmdMode && rec.component != component) continue;
        out.per_image.push_back(predict_months(mcfg, params, rec.image));
    }
    if (out.per_image.empty())
        throw DegenerateInput("test transform produced no images for sequence " +
                              out.sequence_id);
    out.image_count = out.per_image.size();
    out.fused_months = fuse_mean(out.per_image);
    return out;
}

namespace {

MetricsRow row_statistics(const std::string& label,
                          const std::vector<const SequencePrediction*>& preds) {
    MetricsRow row;
    row.label = label;
    row.sequences = preds.size();
    const double n = static_cast<double>(preds.size());

    double sum = 0.0;
    for (const auto* p : preds) {
        sum += p->fused_months;
        row.images += p->image_count;
    }
    row.mu = sum / n;

    double var = 0.0, sq_err = 0.0;
    row.max_error_signed = -std::numeric_limits<double>::infinity();
    row.min_error_signed = std::numeric_limits<double>::infinity();
    row.min_error_unsigned = std::numeric_limits<double>::infinity();
    for (const auto* p : preds) {
        const double dev = p->fused_months - row.mu;
        var += dev * dev;
        const double err = p->fused_months - p->true_months;
        sq_err += err * err;
        row.max_error_signed = std::max(row.max_error_signed, err);
        row.min_error_signed = std::min(row.min_error_signed, err);
        row.min_error_unsigned = std::min(row.min_error_unsigned, std::abs(err));
    }
    row.sigma = std::sqrt(var / n);
    row.rmse = std::sqrt(sq_err / n);
    return row;
}

}  // namespace

MetricsReport evaluate(const std::vector<SequencePrediction>& preds) {
    if (preds.empty()) throw ConfigError("cannot evaluate an empty prediction set");

    // a canonical order makes the report independent of input order
    std::vector<const SequencePrediction*> sorted;
    sorted.reserve(preds.size());
    for (const auto& p : preds) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(),
              [](const SequencePrediction* a, const SequencePrediction* b) {
                  return std::tie(a->state_label, a->sequence_id, a->fused_months, a->true_months,
                                  a->image_count) < std::tie(b->state_label, b->sequence_id,
                                                             b->fused_months, b->true_months,
                                                             b->image_count);
              });

    std::map<std::string, std::vector<const SequencePrediction*>> by_state;
    for (const auto* p : sorted) by_state[p->state_label].push_back(p);

    MetricsReport report;
    for (const auto& [label, group] : by_state)
        report.per_state.push_back(row_statistics(label, group));
    report.total = row_statistics("total", sorted);
    return report;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

TimingBlock bench(const ModelConfig& mcfg, const ModelParams& params,
                  const std::vector<VideoSequence>& corpus, const GenerationConfig& gcfg) {
    if (corpus.empty()) throw ConfigError("bench corpus is empty");
    std::size_t total_frames = 0;
    for (const auto& seq : corpus) {
        seq.validate();
        total_frames += seq.frame_count();
    }
    if (total_frames < 10) throw ConfigError("bench corpus needs at least 10 images");

    TimingBlock block;
    constexpr std::size_t kMinTimed = 100;

    {  // snapshot-matrix SVD, per image
        std::size_t done = 0;
        const auto t0 = Clock::now();
        while (done < kMinTimed)
            for (const auto& seq : corpus) {
                (void)svd_stage(seq, gcfg.svd_rule);
                done += seq.frame_count();
                if (done >= kMinTimed) break;
            }
        block.t_svd_ms = elapsed_ms(t0, Clock::now()) / static_cast<double>(done);
    }

    {  // tensor factorization, per image
        std::size_t done = 0;
        const auto t0 = Clock::now();
        while (done < kMinTimed)
            for (const auto& seq : corpus) {
                (void)hosvd(seq.frames, gcfg.hodmd.eps_svd);
                done += seq.frame_count();
                if (done >= kMinTimed) break;
            }
        block.t_hosvd_ms = elapsed_ms(t0, Clock::now()) / static_cast<double>(done);
    }

    {  // delay-embedded decomposition on the denoised sequences, per image
        std::vector<VideoSequence> denoised;
        for (const auto& seq : corpus) {
            if (seq.frame_count() < gcfg.hodmd.min_snapshots) continue;
            VideoSequence d = seq;
            d.frames = svd_stage(seq, gcfg.svd_rule).reconstructions;
            denoised.push_back(std::move(d));
        }
        if (denoised.empty())
            throw SequenceTooShort("bench corpus has no sequence long enough for the delay pipeline");
        std::size_t done = 0;
        const auto t0 = Clock::now();
        while (done < kMinTimed)
            for (const auto& seq : denoised) {
                (void)hodmd_iterative(seq, gcfg.hodmd);
                done += seq.frame_count();
                if (done >= kMinTimed) break;
            }
        block.t_hodmd_ms = elapsed_ms(t0, Clock::now()) / static_cast<double>(done);
    }

    {  // model forward pass, per image, after 10 warmup images
        std::vector<Tensor> images;
        images.reserve(total_frames);
        for (const auto& seq : corpus) {
            for (std::size_t k = 0; k < seq.frame_count() && images.size() < 4 * kMinTimed; ++k) {
                bool constant = false;
                images.push_back(scale_unit_range(
                    resize_bilinear(seq.frame(k), mcfg.img_h, mcfg.img_w), &constant));
            }
            if (images.size() >= 4 * kMinTimed) break;
        }
        for (std::size_t i = 0; i < 10; ++i)
            (void)predict_months(mcfg, params, images[i % images.size()]);
        const std::size_t timed = std::max(kMinTimed, images.size());
        const auto t0 = Clock::now();
        for (std::size_t i = 0; i < timed; ++i)
            (void)predict_months(mcfg, params, images[i % images.size()]);
        block.t_pred_ms = elapsed_ms(t0, Clock::now()) / static_cast<double>(timed);
    }

    block.throughput_ips = 1000.0 / block.t_pred_ms;
    return block;
}

namespace {

nlohmann::json row_to_json(const MetricsRow& r) {
    return nlohmann::json{{"label", r.label},
                          {"mu", r.mu},
                          {"sigma", r.sigma},
                          {"rmse", r.rmse},
                          {"max_error_signed", r.max_error_signed},
                          {"min_error_signed", r.min_error_signed},
                          {"min_error_unsigned", r.min_error_unsigned},
                          {"sequences", r.sequences},
                          {"images", r.images}};
}

}  // namespace

std::string metrics_to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["per_state"] = nlohmann::json::array();
    for (const auto& row : report.per_state) j["per_state"].push_back(row_to_json(row));
    j["total"] = row_to_json(report.total);
    if (report.has_timing) {
        j["timing"] = {{"t_svd_ms", report.timing.t_svd_ms},
                       {"t_hosvd_ms", report.timing.t_hosvd_ms},
                       {"t_hodmd_ms", report.timing.t_hodmd_ms},
                       {"t_pred_ms", report.timing.t_pred_ms},
                       {"throughput_ips", report.timing.throughput_ips}};
    }
    return j.dump(2) + "\n";
}

std::string metrics_to_table(const MetricsReport& report) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "%-8s %10s %9s %13s %11s %11s %11s %6s %8s\n", "state",
                  "mu", "sigma", "error_margin", "max_(w/)", "min_(w/)", "min_(w/o)", "seqs",
                  "images");
    os << line;
    auto put = [&](const MetricsRow& r) {
        std::snprintf(line, sizeof(line), "%-8s %10.2f %9.2f %13.2f %+11.2f %+11.2f %11.2f %6zu %8zu\n",
                      r.label.c_str(), r.mu, r.sigma, r.rmse, r.max_error_signed,
                      r.min_error_signed, r.min_error_unsigned, r.sequences, r.images);
        os << line;
    };
    for (const auto& row : report.per_state) put(row);
    put(report.total);
    if (report.has_timing) {
        std::snprintf(line, sizeof(line),
                      "timing/image: svd %.3f ms, hosvd %.3f ms, hodmd %.3f ms, pred %.3f ms, "
                      "throughput %.1f images/s\n",
                      report.timing.t_svd_ms, report.timing.t_hosvd_ms, report.timing.t_hodmd_ms,
                      report.timing.t_pred_ms, report.timing.throughput_ips);
        os << line;
    }
    return os.str();
}

void write_predictions_csv(const std::string& path,
                           const std::vector<SequencePrediction>& preds) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ManifestError("cannot open predictions file for writing: " + path);
    os << "sequence_id,state,true_months,fused_months,images,test_kind\n";
    for (const auto& p : preds) {
        os << p.sequence_id << ',' << p.state_label << ',' << format_double(p.true_months) << ','
           << format_double(p.fused_months) << ',' << p.image_count << ','
           << test_kind_label(p.kind, p.component) << '\n';
    }
    if (!os) throw ManifestError("short write to predictions file: " + path);
}

std::vector<SequencePrediction> read_predictions_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ManifestError("cannot open predictions file: " + path);
    std::string line;
    if (!std::getline(is, line)) throw ManifestError("empty predictions file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "sequence_id,state,true_months,fused_months,images,test_kind")
        throw ManifestError("unexpected predictions header: " + line);
    std::vector<SequencePrediction> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cols = split_csv_line(line);
        if (cols.size() != 6)
            throw ManifestError("predictions row " + std::to_string(lineno) +
                                " has the wrong column count");
        SequencePrediction p;
        p.sequence_id = cols[0];
        p.state_label = cols[1];
        p.heart_state = heart_state_from_string(cols[1]);
        try {
            p.true_months = std::stod(cols[2]);
            p.fused_months = std::stod(cols[3]);
            p.image_count = static_cast<std::size_t>(std::stoull(cols[4]));
        } catch (const std::exception&) {
            throw ManifestError("bad number in predictions row " + std::to_string(lineno));
        }
        std::tie(p.kind, p.component) = parse_test_kind(cols[5]);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace mdk
