#include "mdk/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mdk/errors.hpp"
#include "mdk/modal_svd.hpp"
#include "mdk/threading.hpp"

namespace mdk {

namespace {

constexpr std::array<DataKind, 6> kAllKinds = {
    DataKind::Original,   DataKind::Svd1Recon, DataKind::Svd1Mode,
    DataKind::HodmdRecon, DataKind::HodmdMode, DataKind::Svd2Recon,
};

Tensor frame_of(const Tensor& video, std::size_t k) {
    Tensor f({video.dims[0], video.dims[1]});
    for (std::size_t i = 0; i < video.dims[0]; ++i)
        for (std::size_t j = 0; j < video.dims[1]; ++j) f.at(i, j) = video.at(i, j, k);
    return f;
}

Tensor crop(const Tensor& frame, const Rect& r) {
    Tensor out({r.w, r.h});
    for (std::size_t i = 0; i < r.w; ++i)
        for (std::size_t j = 0; j < r.h; ++j) out.at(i, j) = frame.at(r.x + i, r.y + j);
    return out;
}

/// Otsu threshold plus largest 4-connected bright component.
Rect detect_roi(const Tensor& frame) {
    const std::size_t rows = frame.dims[0], cols = frame.dims[1];
    double lo = frame.data[0], hi = frame.data[0];
    for (double v : frame.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw EmptyRoi("homogenize: frame has no bright region");

    constexpr int kBins = 256;
    std::array<std::size_t, kBins> hist{};
    for (double v : frame.data) {
        int b = static_cast<int>((v - lo) / (hi - lo) * kBins);
        if (b >= kBins) b = kBins - 1;
        hist[static_cast<std::size_t>(b)]++;
    }
    const double n = static_cast<double>(frame.numel());
    double sum_all = 0.0;
    for (int b = 0; b < kBins; ++b) sum_all += static_cast<double>(b) * static_cast<double>(hist[b]);
    double w0 = 0.0, sum0 = 0.0, best_var = -1.0;
    int best_t = 0;
    for (int t = 0; t < kBins - 1; ++t) {
        w0 += static_cast<double>(hist[t]);
        if (w0 == 0.0) continue;
        const double w1 = n - w0;
        if (w1 == 0.0) break;
        sum0 += static_cast<double>(t) * static_cast<double>(hist[t]);
        const double mu0 = sum0 / w0;
        const double mu1 = (sum_all - sum0) / w1;
        const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_t = t;
        }
    }
    const double threshold = lo + (static_cast<double>(best_t) + 1.0) * (hi - lo) / kBins;

    std::vector<char> bright(rows * cols, 0);
    bool any = false;
    for (std::size_t i = 0; i < rows * cols; ++i) {
        bright[i] = frame.data[i] >= threshold ? 1 : 0;
        any = any || bright[i];
    }
    if (!any) throw EmptyRoi("homogenize: frame has no bright region");

    std::vector<char> seen(rows * cols, 0);
    std::vector<std::size_t> stack;
    std::size_t best_count = 0;
    Rect best{};
    for (std::size_t start = 0; start < rows * cols; ++start) {
        if (!bright[start] || seen[start]) continue;
        std::size_t count = 0;
        std::size_t rmin = rows, rmax = 0, cmin = cols, cmax = 0;
        stack.assign(1, start);
        seen[start] = 1;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            const std::size_t r = p / cols, c = p % cols;
            ++count;
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
            cmin = std::min(cmin, c);
            cmax = std::max(cmax, c);
            const std::size_t nbrs[4][2] = {
                {r > 0 ? r - 1 : r, c},
                {r + 1 < rows ? r + 1 : r, c},
                {r, c > 0 ? c - 1 : c},
                {r, c + 1 < cols ? c + 1 : c},
            };
            for (const auto& nb : nbrs) {
                const std::size_t q = nb[0] * cols + nb[1];
                if (q == p || !bright[q] || seen[q]) continue;
                seen[q] = 1;
                stack.push_back(q);
            }
        }
        if (count > best_count) {
            best_count = count;
            best = Rect{rmin, cmin, rmax - rmin + 1, cmax - cmin + 1};
        }
    }
    return best;
}

}  // namespace

const char* to_string(DataKind k) {
    switch (k) {
        case DataKind::Original: return "original";
        case DataKind::Svd1Recon: return "svd1_recon";
        case DataKind::Svd1Mode: return "svd1_mode";
        case DataKind::HodmdRecon: return "hodmd_recon";
        case DataKind::HodmdMode: return "hodmd_mode";
        case DataKind::Svd2Recon: return "svd2_recon";
    }
    return "original";
}

DataKind data_kind_from_string(const std::string& label) {
    for (DataKind k : kAllKinds)
        if (label == to_string(k)) return k;
    throw ConfigError("unknown data kind: " + label);
}

const char* to_string(ComplexPart c) {
    switch (c) {
        case ComplexPart::NotComplex: return "none";
        case ComplexPart::Abs: return "abs";
        case ComplexPart::Real: return "real";
        case ComplexPart::Imag: return "imag";
    }
    return "none";
}

ComplexPart complex_part_from_string(const std::string& label) {
    for (ComplexPart c : {ComplexPart::NotComplex, ComplexPart::Abs, ComplexPart::Real,
                          ComplexPart::Imag})
        if (label == to_string(c)) return c;
    throw ConfigError("unknown complex part: " + label);
}

bool TrainingCase::contains(DataKind k) const {
    return std::find(kinds.begin(), kinds.end(), k) != kinds.end();
}

TrainingCase TrainingCase::by_id(int id) {
    using K = DataKind;
    static const std::vector<std::vector<K>> table = {
        {K::Original},
        {K::Svd1Recon},
        {K::Original, K::Svd1Recon, K::Svd1Mode},
        {K::Original, K::Svd1Recon},
        {K::Svd1Recon, K::Svd1Mode},
        {K::HodmdRecon},
        {K::HodmdRecon, K::HodmdMode},
        {K::Svd1Recon, K::HodmdRecon},
        {K::Original, K::Svd1Recon, K::HodmdRecon},
        {K::HodmdRecon, K::HodmdMode, K::Svd2Recon},
        {K::Svd1Recon, K::Svd1Mode, K::HodmdRecon, K::HodmdMode},
        {K::Svd1Recon, K::Svd1Mode, K::HodmdRecon, K::HodmdMode, K::Svd2Recon},
        {K::Original, K::Svd1Recon, K::Svd1Mode, K::HodmdRecon, K::HodmdMode},
        {K::Original, K::Svd1Recon, K::Svd1Mode, K::HodmdRecon, K::HodmdMode, K::Svd2Recon},
    };
    if (id < 1 || id > static_cast<int>(table.size()))
        throw ConfigError("training case id must be 1..14");
    return TrainingCase{id, table[static_cast<std::size_t>(id - 1)]};
}

Tensor homogenize(const Tensor& frame, const std::optional<Rect>& roi) {
    if (frame.ndim() != 2) throw ShapeError("homogenize: frame must be 2-d");
    if (roi) {
        const Rect& r = *roi;
        if (r.w == 0 || r.h == 0 || r.x + r.w > frame.dims[0] || r.y + r.h > frame.dims[1])
            throw ShapeError("homogenize: roi outside frame bounds");
        return crop(frame, r);
    }
    return crop(frame, detect_roi(frame));
}

VideoSequence homogenize_sequence(const VideoSequence& seq) {
    seq.validate();
    Rect r;
    if (seq.annotation.has_roi) {
        r = seq.annotation.roi;
    } else {
        Tensor mean({seq.nx(), seq.ny()});
        for (std::size_t i = 0; i < seq.nx(); ++i)
            for (std::size_t j = 0; j < seq.ny(); ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < seq.frame_count(); ++k) s += seq.frames.at(i, j, k);
                mean.at(i, j) = s / static_cast<double>(seq.frame_count());
            }
        r = detect_roi(mean);
    }
    VideoSequence out;
    out.dt_seconds = seq.dt_seconds;
    out.annotation = seq.annotation;
    out.annotation.has_roi = false;
    out.annotation.roi = Rect{};
    out.frames = Tensor({r.w, r.h, seq.frame_count()});
    for (std::size_t i = 0; i < r.w; ++i)
        for (std::size_t j = 0; j < r.h; ++j)
            for (std::size_t k = 0; k < seq.frame_count(); ++k)
                out.frames.at(i, j, k) = seq.frames.at(r.x + i, r.y + j, k);
    return out;
}

Tensor scale_unit_range(const Tensor& img, bool* constant_plane) {
    if (!img.all_finite()) throw NonFiniteError("scale_unit_range: non-finite input");
    double lo = img.data.empty() ? 0.0 : img.data[0];
    double hi = lo;
    for (double v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Tensor out(img.dims);
    const bool constant = !(hi > lo);
    if (constant_plane) *constant_plane = constant;
    if (!constant) {
        const double inv = 1.0 / (hi - lo);
        for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = (img.data[i] - lo) * inv;
    }
    return out;
}

ExpandedMode expand_complex(const ComplexTensor& mode) {
    ExpandedMode out;
    out.planes[0] = scale_unit_range(mode.abs_plane(), &out.constant[0]);
    out.planes[1] = scale_unit_range(mode.real_plane(), &out.constant[1]);
    out.planes[2] = scale_unit_range(mode.imag_plane(), &out.constant[2]);
    return out;
}

std::vector<SampleRecord> generate_sequence_samples(const VideoSequence& seq,
                                                    const TrainingCase& training_case,
                                                    const GenerationConfig& cfg,
                                                    std::vector<std::string>* warnings) {
    seq.validate();
    const SequenceAnnotation& ann = seq.annotation;
    const std::size_t snapshots = seq.frame_count();
    std::vector<SampleRecord> out;

    const auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back("sequence " + ann.sequence_id + ": " + msg);
    };
    const auto emit = [&](Tensor img, DataKind kind, ComplexPart part) {
        SampleRecord rec;
        rec.kind = kind;
        rec.component = part;
        rec.label_months = ann.failure_age_months;
        rec.sequence_id = ann.sequence_id;
        rec.heart_state = ann.heart_state;
        rec.state_label = ann.state_label;
        rec.image = scale_unit_range(img, &rec.constant_plane);
        out.push_back(std::move(rec));
    };

    const bool want_dmd = training_case.contains(DataKind::HodmdRecon) ||
                          training_case.contains(DataKind::HodmdMode) ||
                          training_case.contains(DataKind::Svd2Recon);
    bool dmd_ok = want_dmd;
    if (want_dmd && snapshots < cfg.hodmd.min_snapshots) {
        warn("too short for the delay pipeline (" + std::to_string(snapshots) + " < " +
             std::to_string(cfg.hodmd.min_snapshots) + " snapshots), skipping those kinds");
        dmd_ok = false;
    }
    const bool need_svd = training_case.contains(DataKind::Svd1Recon) ||
                          training_case.contains(DataKind::Svd1Mode) || dmd_ok;

    SvdStageOutput svd1;
    if (need_svd) svd1 = svd_stage(seq, cfg.svd_rule);

    HodmdResult dmd;
    if (dmd_ok) {
        VideoSequence recon_seq;
        recon_seq.frames = svd1.reconstructions;
        recon_seq.dt_seconds = seq.dt_seconds;
        recon_seq.annotation = ann;
        try {
            dmd = hodmd_iterative(recon_seq, cfg.hodmd);
            if (dmd.spectrum.empty()) warn("spectrum is empty after amplitude truncation");
        } catch (const SequenceTooShort& e) {
            warn(std::string("skipping delay pipeline: ") + e.what());
            dmd_ok = false;
        } catch (const DegenerateInput& e) {
            warn(std::string("skipping delay pipeline: ") + e.what());
            dmd_ok = false;
        }
    }
    const std::size_t mode_count = dmd_ok ? dmd.spectrum.modes.size() : 0;

    for (DataKind kind : kAllKinds) {
        if (!training_case.contains(kind)) continue;
        switch (kind) {
            case DataKind::Original:
                for (std::size_t k = 0; k < snapshots; ++k)
                    emit(seq.frame(k), kind, ComplexPart::NotComplex);
                break;
            case DataKind::Svd1Recon:
                for (std::size_t k = 0; k < snapshots; ++k)
                    emit(frame_of(svd1.reconstructions, k), kind, ComplexPart::NotComplex);
                break;
            case DataKind::Svd1Mode:
                for (const Tensor& m : svd1.modes) emit(m, kind, ComplexPart::NotComplex);
                break;
            case DataKind::HodmdRecon:
                if (!dmd_ok) break;
                for (std::size_t k = 0; k < snapshots; ++k)
                    emit(frame_of(dmd.reconstruction, k), kind, ComplexPart::NotComplex);
                break;
            case DataKind::HodmdMode:
                for (std::size_t m = 0; m < mode_count; ++m) {
                    ExpandedMode ex = expand_complex(dmd.spectrum.modes[m].u);
                    emit(std::move(ex.planes[0]), kind, ComplexPart::Abs);
                    emit(std::move(ex.planes[1]), kind, ComplexPart::Real);
                    emit(std::move(ex.planes[2]), kind, ComplexPart::Imag);
                }
                break;
            case DataKind::Svd2Recon: {
                if (mode_count == 0) break;
                if (mode_count < 2) {
                    warn("only one retained mode, skipping the second decomposition stage");
                    break;
                }
                std::vector<ComplexTensor> modes;
                modes.reserve(mode_count);
                for (const DmdMode& m : dmd.spectrum.modes) modes.push_back(m.u);
                const SvdStageOutput svd2 = svd_of_modes(modes, cfg.svd_rule);
                // block order abs, real, imag; mode_count images each
                const ComplexPart parts[3] = {ComplexPart::Abs, ComplexPart::Real,
                                              ComplexPart::Imag};
                for (std::size_t b = 0; b < 3; ++b)
                    for (std::size_t m = 0; m < mode_count; ++m)
                        emit(frame_of(svd2.reconstructions, b * mode_count + m), kind, parts[b]);
                break;
            }
        }
    }
    return out;
}

std::vector<SampleRecord> generate_case(const std::vector<VideoSequence>& sequences,
                                        const TrainingCase& training_case,
                                        const GenerationConfig& cfg,
                                        std::vector<std::string>* warnings) {
    std::vector<std::vector<SampleRecord>> per_seq(sequences.size());
    std::vector<std::vector<std::string>> per_warn(sequences.size());
    parallel_for(sequences.size(), cfg.threads, [&](std::size_t s) {
        per_seq[s] = generate_sequence_samples(sequences[s], training_case, cfg,
                                               warnings ? &per_warn[s] : nullptr);
    });
    std::vector<SampleRecord> out;
    std::size_t total = 0;
    for (const auto& v : per_seq) total += v.size();
    out.reserve(total);
    for (std::size_t s = 0; s < per_seq.size(); ++s) {
        for (SampleRecord& r : per_seq[s]) out.push_back(std::move(r));
        if (warnings)
            for (std::string& w : per_warn[s]) warnings->push_back(std::move(w));
    }
    return out;
}

DatasetSplit split_dataset(const std::vector<SampleRecord>& records,
                           const SplitFractions& fractions, std::uint64_t seed,
                           const std::map<std::string, SplitBucket>& hints) {
    const double f[3] = {fractions.train, fractions.val, fractions.test};
    for (double v : f)
        if (v < 0.0) throw ConfigError("split fractions must be non-negative");
    if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");

    struct SeqInfo {
        std::string id;
        std::string state;
        double label = 0.0;
        std::uint64_t tie = 0;
        int bucket = -1;
    };
    std::vector<SeqInfo> seqs;
    std::map<std::string, std::size_t> index_of;
    for (const SampleRecord& r : records) {
        if (index_of.count(r.sequence_id)) continue;
        index_of[r.sequence_id] = seqs.size();
        SeqInfo s;
        s.id = r.sequence_id;
        s.state = r.state_label;
        s.label = r.label_months;
        s.tie = derive_rng(seed, "split-tie:" + r.sequence_id).next_u64();
        seqs.push_back(std::move(s));
    }

    std::map<std::string, std::vector<std::size_t>> by_state;
    for (std::size_t i = 0; i < seqs.size(); ++i) by_state[seqs[i].state].push_back(i);

    for (auto& [state, members] : by_state) {
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            if (seqs[a].label != seqs[b].label) return seqs[a].label < seqs[b].label;
            return seqs[a].tie < seqs[b].tie;
        });
        std::size_t assigned[3] = {0, 0, 0};
        std::size_t step = 0;
        for (std::size_t i : members) {
            const auto hint = hints.find(seqs[i].id);
            if (hint == hints.end()) continue;
            seqs[i].bucket = static_cast<int>(hint->second);
            assigned[seqs[i].bucket]++;
            ++step;
        }
        for (std::size_t i : members) {
            if (seqs[i].bucket >= 0) continue;
            ++step;
            int pick = 0;
            double best_gap = -1e300;
            for (int b = 0; b < 3; ++b) {
                const double gap =
                    f[b] * static_cast<double>(step) - static_cast<double>(assigned[b]);
                if (gap > best_gap + 1e-12) {
                    best_gap = gap;
                    pick = b;
                }
            }
            seqs[i].bucket = pick;
            assigned[pick]++;
        }
    }

    DatasetSplit out;
    out.fractions = fractions;
    for (const SampleRecord& r : records) {
        switch (seqs[index_of[r.sequence_id]].bucket) {
            case 0: out.train.push_back(r); break;
            case 1: out.val.push_back(r); break;
            default: out.test.push_back(r); break;
        }
    }
    return out;
}

Tensor resize_bilinear(const Tensor& img, std::size_t h, std::size_t w) {
    if (img.ndim() != 2) throw ShapeError("resize_bilinear: image must be 2-d");
    if (h == 0 || w == 0) throw ShapeError("resize_bilinear: target must be non-empty");
    const std::size_t sh = img.dims[0], sw = img.dims[1];
    Tensor out({h, w});
    const double ry = static_cast<double>(sh) / static_cast<double>(h);
    const double rx = static_cast<double>(sw) / static_cast<double>(w);
    for (std::size_t i = 0; i < h; ++i) {
        double sy = (static_cast<double>(i) + 0.5) * ry - 0.5;
        sy = std::min(std::max(sy, 0.0), static_cast<double>(sh - 1));
        const std::size_t y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, sh - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t j = 0; j < w; ++j) {
            double sx = (static_cast<double>(j) + 0.5) * rx - 0.5;
            sx = std::min(std::max(sx, 0.0), static_cast<double>(sw - 1));
            const std::size_t x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, sw - 1);
            const double fx = sx - static_cast<double>(x0);
            const double top = img.at(y0, x0) * (1.0 - fx) + img.at(y0, x1) * fx;
            const double bot = img.at(y1, x0) * (1.0 - fx) + img.at(y1, x1) * fx;
            out.at(i, j) = top * (1.0 - fy) + bot * fy;
        }
    }
    return out;
}

Tensor flip_horizontal(const Tensor& img) {
    if (img.ndim() != 2) throw ShapeError("flip_horizontal: image must be 2-d");
    Tensor out(img.dims);
    const std::size_t w = img.dims[1];
    for (std::size_t i = 0; i < img.dims[0]; ++i)
        for (std::size_t j = 0; j < w; ++j) out.at(i, j) = img.at(i, w - 1 - j);
    return out;
}

Tensor erase_rect(const Tensor& img, const Rect& r, double fill) {
    if (img.ndim() != 2) throw ShapeError("erase_rect: image must be 2-d");
    if (r.w == 0 || r.h == 0 || r.x + r.w > img.dims[0] || r.y + r.h > img.dims[1])
        throw ShapeError("erase_rect: rect outside image bounds");
    Tensor out = img;
    for (std::size_t i = 0; i < r.w; ++i)
        for (std::size_t j = 0; j < r.h; ++j) out.at(r.x + i, r.y + j) = fill;
    return out;
}

Tensor augment(const Tensor& img, Rng& rng, const AugmentPolicy& policy) {
    Tensor out = resize_bilinear(img, policy.target_h, policy.target_w);
    if (rng.bernoulli(policy.flip_p)) out = flip_horizontal(out);
    if (rng.bernoulli(policy.erase_p)) {
        const double hw = static_cast<double>(policy.target_h * policy.target_w);
        const double area = rng.uniform(policy.erase_area_lo, policy.erase_area_hi) * hw;
        const double aspect = rng.uniform(0.5, 2.0);
        std::size_t eh = static_cast<std::size_t>(std::lround(std::sqrt(area * aspect)));
        eh = std::min(std::max<std::size_t>(eh, 1), policy.target_h);
        std::size_t ew = static_cast<std::size_t>(std::lround(area / static_cast<double>(eh)));
        ew = std::min(std::max<std::size_t>(ew, 1), policy.target_w);
        const std::size_t x0 = rng.next_below(policy.target_h - eh + 1);
        const std::size_t y0 = rng.next_below(policy.target_w - ew + 1);
        out = erase_rect(out, Rect{x0, y0, eh, ew});
    }
    return out;
}

CorpusCounts::Row CorpusCounts::totals() const {
    Row t;
    t.state_label = "total";
    for (const Row& r : rows) {
        t.sequences += r.sequences;
        t.snapshots += r.snapshots;
        t.svd_modes += r.svd_modes;
        t.hodmd_modes += r.hodmd_modes;
    }
    return t;
}

std::size_t count_samples(const CorpusCounts& counts, const TrainingCase& training_case) {
    const CorpusCounts::Row t = counts.totals();
    std::size_t n = 0;
    for (DataKind kind : kAllKinds) {
        if (!training_case.contains(kind)) continue;
        switch (kind) {
            case DataKind::Original:
            case DataKind::Svd1Recon:
            case DataKind::HodmdRecon: n += t.snapshots; break;
            case DataKind::Svd1Mode: n += t.svd_modes; break;
            case DataKind::HodmdMode:
            case DataKind::Svd2Recon: n += 3 * t.hodmd_modes; break;
        }
    }
    return n;
}

CorpusCounts reference_training_counts() {
    CorpusCounts c;
    c.rows = {
        {"CTL", 35, 10204, 175, 1334},
        {"OB", 28, 8170, 140, 1140},
        {"SH", 31, 8919, 155, 1186},
    };
    return c;
}

void write_corpus_counts(const std::string& path, const CorpusCounts& counts) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ManifestError("cannot open for writing: " + path);
    os << "heart_state,sequences,snapshots,svd_modes,hodmd_modes\n";
    for (const CorpusCounts::Row& r : counts.rows)
        os << r.state_label << ',' << r.sequences << ',' << r.snapshots << ',' << r.svd_modes
           << ',' << r.hodmd_modes << '\n';
    if (!os) throw ManifestError("write failed: " + path);
}

CorpusCounts read_corpus_counts(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ManifestError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw ManifestError("empty counts file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "heart_state,sequences,snapshots,svd_modes,hodmd_modes")
        throw ManifestError("bad counts header: " + line);
    CorpusCounts c;
    std::set<std::string> seen;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cols = split_csv_line(line);
        if (cols.size() != 5) throw ManifestError("counts row needs 5 columns: " + line);
        if (!seen.insert(cols[0]).second)
            throw DuplicateId("duplicate heart state in counts: " + cols[0]);
        CorpusCounts::Row r;
        r.state_label = cols[0];
        try {
            r.sequences = static_cast<std::size_t>(std::stoull(cols[1]));
            r.snapshots = static_cast<std::size_t>(std::stoull(cols[2]));
            r.svd_modes = static_cast<std::size_t>(std::stoull(cols[3]));
            r.hodmd_modes = static_cast<std::size_t>(std::stoull(cols[4]));
        } catch (const std::exception&) {
            throw ManifestError("bad count value in row: " + line);
        }
        c.rows.push_back(std::move(r));
    }
    return c;
}

namespace {

const char* bucket_name(std::size_t b) {
    return b == 0 ? "train" : (b == 1 ? "val" : "test");
}

}  // namespace

void write_dataset_archive(const std::string& dir, const DatasetSplit& split) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "images");
    std::ofstream index(fs::path(dir) / "index.csv", std::ios::binary);
    if (!index) throw ManifestError("cannot open for writing: " + dir + "/index.csv");
    index << "sample_id,path,kind,component,sequence_id,heart_state,label_months,split\n";
    const std::vector<SampleRecord>* buckets[3] = {&split.train, &split.val, &split.test};
    std::size_t counter = 0;
    char id[16];
    for (std::size_t b = 0; b < 3; ++b) {
        for (const SampleRecord& r : *buckets[b]) {
            std::snprintf(id, sizeof(id), "s%06zu", counter++);
            const std::string rel = std::string("images/") + id + ".mdt";
            write_tensor_file((fs::path(dir) / rel).string(), r.image, /*as_f32=*/true);
            index << id << ',' << rel << ',' << to_string(r.kind) << ','
                  << to_string(r.component) << ',' << r.sequence_id << ',' << r.state_label
                  << ',' << format_double(r.label_months) << ',' << bucket_name(b) << '\n';
        }
    }
    if (!index) throw ManifestError("write failed: " + dir + "/index.csv");
}

DatasetSplit read_dataset_archive(const std::string& dir) {
    namespace fs = std::filesystem;
    const std::string index_path = (fs::path(dir) / "index.csv").string();
    std::ifstream is(index_path, std::ios::binary);
    if (!is) throw ManifestError("cannot open: " + index_path);
    std::string line;
    if (!std::getline(is, line)) throw ManifestError("empty index: " + index_path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "sample_id,path,kind,component,sequence_id,heart_state,label_months,split")
        throw ManifestError("bad index header: " + line);
    DatasetSplit out;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cols = split_csv_line(line);
        if (cols.size() != 8) throw ManifestError("index row needs 8 columns: " + line);
        SampleRecord r;
        r.image = read_tensor_file((fs::path(dir) / cols[1]).string());
        r.kind = data_kind_from_string(cols[2]);
        r.component = complex_part_from_string(cols[3]);
        r.sequence_id = cols[4];
        r.state_label = cols[5];
        r.heart_state = heart_state_from_string(cols[5]);
        try {
            r.label_months = std::stod(cols[6]);
        } catch (const std::exception&) {
            throw ManifestError("bad label in index row: " + line);
        }
        if (cols[7] == "train")
            out.train.push_back(std::move(r));
        else if (cols[7] == "val")
            out.val.push_back(std::move(r));
        else if (cols[7] == "test")
            out.test.push_back(std::move(r));
        else
            throw ManifestError("unknown split bucket: " + cols[7]);
    }
    return out;
}

}  // namespace mdk
