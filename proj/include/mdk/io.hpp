#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mdk/tensor.hpp"

namespace mdk {

// "MDT" tensor container.
//   magic "MDT1" | u8 dtype (0=f32, 1=f64) | u8 ndim | ndim x u64 LE dims |
//   row-major LE payload.
// Complex tensors share one header under magic "MDTC" followed by the real
// plane payload and then the imaginary plane payload.

void write_tensor_file(const std::string& path, const Tensor& t, bool as_f32 = false);
Tensor read_tensor_file(const std::string& path);

void write_complex_tensor_file(const std::string& path, const ComplexTensor& t,
                               bool as_f32 = false);
ComplexTensor read_complex_tensor_file(const std::string& path);

// Stream-level variants so other containers can embed MDTC blocks.
void write_complex_tensor(std::ostream& os, const ComplexTensor& t, bool as_f32 = false);
ComplexTensor read_complex_tensor(std::istream& is);

void put_u64(std::ostream& os, std::uint64_t v);
std::uint64_t get_u64(std::istream& is);
void put_f64(std::ostream& os, double v);
double get_f64(std::istream& is);

struct ManifestEntry {
    std::string path;  // sequence tensor file, relative to the manifest
    SequenceAnnotation annotation;
};

/// CSV manifest, one sequence per row. Header:
/// sequence_id,path,heart_state,failure_age_months,roi_x,roi_y,roi_w,roi_h,split_hint
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

/// Loads the sequence tensor behind a manifest entry. The sampling interval is
/// not part of the manifest; it comes from the generation config.
VideoSequence load_sequence(const std::string& manifest_dir, const ManifestEntry& entry,
                            double dt_seconds);

// --- small shared text helpers ---

/// Shortest round-trip decimal form of a double (deterministic output files).
std::string format_double(double v);

std::vector<std::string> split_csv_line(const std::string& line);

std::string join_path(const std::string& dir, const std::string& leaf);

}  // namespace mdk
