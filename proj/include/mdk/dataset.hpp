#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdk/hodmd.hpp"
#include "mdk/io.hpp"
#include "mdk/linalg.hpp"
#include "mdk/rng.hpp"
#include "mdk/tensor.hpp"

namespace mdk {

/// The six image sources a training set can draw from.
enum class DataKind {
    Original,    // homogenized input frames
    Svd1Recon,   // rank-limited SVD reconstruction of the sequence
    Svd1Mode,    // the retained SVD mode images
    HodmdRecon,  // reconstruction from the retained DMD spectrum
    HodmdMode,   // DMD mode images, expanded to abs/real/imag
    Svd2Recon,   // SVD reconstructions of the DMD mode stacks
};

enum class ComplexPart { NotComplex, Abs, Real, Imag };

const char* to_string(DataKind k);
DataKind data_kind_from_string(const std::string& label);
const char* to_string(ComplexPart c);
ComplexPart complex_part_from_string(const std::string& label);

/// One of the 14 source combinations a training run can request.
struct TrainingCase {
    int id = 0;
    std::vector<DataKind> kinds;  // ascending enum order, no duplicates

    bool contains(DataKind k) const;

    /// Lookup by id (1..14).
    static TrainingCase by_id(int id);
};

struct SampleRecord {
    Tensor image;  // [H, W], min-max scaled into [0,1]
    double label_months = 0.0;
    DataKind kind = DataKind::Original;
    ComplexPart component = ComplexPart::NotComplex;
    std::string sequence_id;
    HeartState heart_state = HeartState::Other;
    std::string state_label;
    bool constant_plane = false;  // the plane had zero range before scaling
};

struct GenerationConfig {
    TruncationRule svd_rule = TruncationRule::by_rank(5);
    HodmdConfig hodmd;
    std::uint64_t seed = 42;
    std::size_t threads = 1;
};

/// Crop a frame to the region of interest. With an explicit rect the crop is
/// literal; otherwise the frame is binarized at the Otsu threshold and the
/// bounding box of the largest 4-connected bright component is used.
/// Throws EmptyRoi when no bright region exists (all-dark or constant frame).
Tensor homogenize(const Tensor& frame, const std::optional<Rect>& roi);

/// Whole-sequence convenience: uses the annotation rect when present, else
/// detects the box once on the temporal mean frame so every frame gets the
/// same crop.
VideoSequence homogenize_sequence(const VideoSequence& seq);

/// Min-max scale into [0,1]. A zero-range plane comes back all zeros with
/// *constant_plane set.
Tensor scale_unit_range(const Tensor& img, bool* constant_plane = nullptr);

/// Abs/real/imag planes of a complex mode, each min-max scaled. The abs plane
/// is sqrt(re^2+im^2) pixelwise, computed before any scaling.
struct ExpandedMode {
    std::array<Tensor, 3> planes;  // abs, real, imag
    std::array<bool, 3> constant{};
};
ExpandedMode expand_complex(const ComplexTensor& mode);

/// All samples one sequence contributes under a training case. Per kind:
/// Original and Svd1Recon emit one image per frame, Svd1Mode one per retained
/// SVD mode, HodmdRecon one per frame, HodmdMode and Svd2Recon three per
/// retained DMD mode. The DMD stage runs on the Svd1 reconstruction, not the
/// original frames. Sequences below the snapshot threshold skip the DMD-based
/// kinds with a warning instead of failing.
std::vector<SampleRecord> generate_sequence_samples(const VideoSequence& seq,
                                                    const TrainingCase& training_case,
                                                    const GenerationConfig& cfg,
                                                    std::vector<std::string>* warnings = nullptr);

/// generate_sequence_samples over a corpus; sequence order is preserved and
/// parallel runs produce the identical record list.
std::vector<SampleRecord> generate_case(const std::vector<VideoSequence>& sequences,
                                        const TrainingCase& training_case,
                                        const GenerationConfig& cfg,
                                        std::vector<std::string>* warnings = nullptr);

struct SplitFractions {
    double train = 0.6, val = 0.2, test = 0.2;
};

struct DatasetSplit {
    std::vector<SampleRecord> train, val, test;
    SplitFractions fractions;
};

enum class SplitBucket { Train, Val, Test };

/// Sequence-granular stratified split. Within each heart state, sequences are
/// ordered by failure age (ties broken by a seed-keyed hash) and dealt across
/// the buckets so each one's share tracks its fraction; every bucket's final
/// count lands within one sequence of its target. Entries in `hints` are
/// pinned to the named bucket before the remainder is dealt.
DatasetSplit split_dataset(const std::vector<SampleRecord>& records,
                           const SplitFractions& fractions, std::uint64_t seed,
                           const std::map<std::string, SplitBucket>& hints = {});

// --- augmentation ---

struct AugmentPolicy {
    std::size_t target_h = 32, target_w = 32;
    double flip_p = 0.5;
    double erase_p = 0.25;
    double erase_area_lo = 0.02, erase_area_hi = 0.20;
};

Tensor resize_bilinear(const Tensor& img, std::size_t h, std::size_t w);
Tensor flip_horizontal(const Tensor& img);

/// Zero out rect r (x/w over rows, y/h over columns, matching Rect's use for
/// frame crops).
Tensor erase_rect(const Tensor& img, const Rect& r, double fill = 0.0);

/// Resize to the policy target, flip with probability flip_p, then erase one
/// random rectangle covering erase_area_lo..erase_area_hi of the image with
/// probability erase_p.
Tensor augment(const Tensor& img, Rng& rng, const AugmentPolicy& policy);

// --- bookkeeping / dry-run counting ---

/// Aggregate per-state counts of a corpus, enough to predict dataset sizes
/// without touching pixel data.
struct CorpusCounts {
    struct Row {
        std::string state_label;
        std::size_t sequences = 0;
        std::size_t snapshots = 0;
        std::size_t svd_modes = 0;
        std::size_t hodmd_modes = 0;
    };
    std::vector<Row> rows;

    Row totals() const;
};

/// Closed-form sample count for a training case: snapshots for Original,
/// Svd1Recon and HodmdRecon; svd_modes for Svd1Mode; 3x hodmd_modes for
/// HodmdMode and Svd2Recon.
std::size_t count_samples(const CorpusCounts& counts, const TrainingCase& training_case);

/// Bookkeeping of the reference echocardiography corpus (training split):
/// 35/28/31 sequences for CTL/OB/SH with their snapshot and mode totals.
CorpusCounts reference_training_counts();

/// CSV with header heart_state,sequences,snapshots,svd_modes,hodmd_modes.
void write_corpus_counts(const std::string& path, const CorpusCounts& counts);
CorpusCounts read_corpus_counts(const std::string& path);

// --- archive ---

/// Writes images as f32 MDT files under dir/images plus dir/index.csv with
/// header sample_id,path,kind,component,sequence_id,heart_state,label_months,split.
void write_dataset_archive(const std::string& dir, const DatasetSplit& split);
DatasetSplit read_dataset_archive(const std::string& dir);

}  // namespace mdk
