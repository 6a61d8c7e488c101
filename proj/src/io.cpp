#include "mdk/io.hpp"

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace mdk {

namespace {

void put_u64_le(std::ostream& os, std::uint64_t v) {
    std::array<unsigned char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint64_t get_u64_le(std::istream& is) {
    std::array<unsigned char, 8> b;
    is.read(reinterpret_cast<char*>(b.data()), 8);
    if (!is) throw Truncated("unexpected end of file in header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void write_payload(std::ostream& os, const std::vector<double>& data, bool as_f32) {
    if (as_f32) {
        std::vector<float> tmp(data.begin(), data.end());
        os.write(reinterpret_cast<const char*>(tmp.data()),
                 static_cast<std::streamsize>(tmp.size() * sizeof(float)));
    } else {
        os.write(reinterpret_cast<const char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double)));
    }
}

std::vector<double> read_payload(std::istream& is, std::size_t n, int dtype) {
    std::vector<double> out(n);
    if (dtype == 0) {
        std::vector<float> tmp(n);
        is.read(reinterpret_cast<char*>(tmp.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
        if (static_cast<std::size_t>(is.gcount()) != n * sizeof(float))
            throw Truncated("payload shorter than header dims");
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(tmp[i]);
    } else {
        is.read(reinterpret_cast<char*>(out.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (static_cast<std::size_t>(is.gcount()) != n * sizeof(double))
            throw Truncated("payload shorter than header dims");
    }
    return out;
}

struct Header {
    int dtype = 1;
    std::vector<std::size_t> dims;
    std::size_t numel = 1;
};

void write_header(std::ostream& os, const char magic[4], int dtype,
                  const std::vector<std::size_t>& dims) {
    os.write(magic, 4);
    unsigned char dt = static_cast<unsigned char>(dtype);
    unsigned char nd = static_cast<unsigned char>(dims.size());
    os.write(reinterpret_cast<const char*>(&dt), 1);
    os.write(reinterpret_cast<const char*>(&nd), 1);
    for (std::size_t d : dims) put_u64_le(os, static_cast<std::uint64_t>(d));
}

Header read_header(std::istream& is, const char expected_magic[4]) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, expected_magic, 4) != 0)
        throw BadMagic("bad magic bytes");
    unsigned char dt = 0, nd = 0;
    is.read(reinterpret_cast<char*>(&dt), 1);
    is.read(reinterpret_cast<char*>(&nd), 1);
    if (!is) throw Truncated("unexpected end of file in header");
    if (dt > 1) throw BadDtype("unknown dtype code");
    Header h;
    h.dtype = dt;
    h.dims.resize(nd);
    for (unsigned char i = 0; i < nd; ++i) {
        std::uint64_t d = get_u64_le(is);
        if (d == 0) throw DimOverflow("zero dimension in header");
        if (d > std::numeric_limits<std::size_t>::max() / h.numel)
            throw DimOverflow("dimension product overflows");
        h.dims[i] = static_cast<std::size_t>(d);
        h.numel *= h.dims[i];
    }
    // A dimension product this large cannot be backed by a real file.
    if (h.numel > (std::size_t{1} << 48)) throw DimOverflow("dimension product too large");
    return h;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open file: " + path);
    return is;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write file: " + path);
    return os;
}

}  // namespace

void write_tensor_file(const std::string& path, const Tensor& t, bool as_f32) {
    std::ofstream os = open_output(path);
    write_header(os, "MDT1", as_f32 ? 0 : 1, t.dims);
    write_payload(os, t.data, as_f32);
    if (!os) throw Error("write failed: " + path);
}

Tensor read_tensor_file(const std::string& path) {
    std::ifstream is = open_input(path);
    Header h = read_header(is, "MDT1");
    return Tensor(h.dims, read_payload(is, h.numel, h.dtype));
}

void write_complex_tensor_file(const std::string& path, const ComplexTensor& t,
                               bool as_f32) {
    std::ofstream os = open_output(path);
    write_header(os, "MDTC", as_f32 ? 0 : 1, t.dims);
    write_payload(os, t.re, as_f32);
    write_payload(os, t.im, as_f32);
    if (!os) throw Error("write failed: " + path);
}

ComplexTensor read_complex_tensor_file(const std::string& path) {
    std::ifstream is = open_input(path);
    return read_complex_tensor(is);
}

void write_complex_tensor(std::ostream& os, const ComplexTensor& t, bool as_f32) {
    write_header(os, "MDTC", as_f32 ? 0 : 1, t.dims);
    write_payload(os, t.re, as_f32);
    write_payload(os, t.im, as_f32);
}

ComplexTensor read_complex_tensor(std::istream& is) {
    Header h = read_header(is, "MDTC");
    std::vector<double> re = read_payload(is, h.numel, h.dtype);
    std::vector<double> im = read_payload(is, h.numel, h.dtype);
    return ComplexTensor(h.dims, std::move(re), std::move(im));
}

void put_u64(std::ostream& os, std::uint64_t v) { put_u64_le(os, v); }
std::uint64_t get_u64(std::istream& is) { return get_u64_le(is); }

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64_le(os, bits);
}

double get_f64(std::istream& is) {
    const std::uint64_t bits = get_u64_le(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

namespace {

const char* kManifestHeader =
    "sequence_id,path,heart_state,failure_age_months,roi_x,roi_y,roi_w,roi_h,split_hint";

double parse_double_field(const std::string& s, const std::string& what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ManifestError("unparsable number in column " + what + ": '" + s + "'");
    return v;
}

std::size_t parse_size_field(const std::string& s, const std::string& what) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ManifestError("unparsable number in column " + what + ": '" + s + "'");
    return v;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open manifest: " + path);
    std::string line;
    if (!std::getline(is, line)) throw ManifestError("empty manifest: " + path);
    {
        std::vector<std::string> head = split_csv_line(line);
        std::vector<std::string> want = split_csv_line(kManifestHeader);
        for (const std::string& col : want) {
            bool found = false;
            for (const std::string& h : head)
                if (h == col) found = true;
            if (!found) throw ManifestError("missing required column: " + col);
        }
        if (head != want)
            throw ManifestError("manifest columns must appear in the canonical order");
    }

    std::vector<ManifestEntry> entries;
    std::set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 9)
            throw ManifestError("row " + std::to_string(lineno) + ": expected 9 columns");
        ManifestEntry e;
        e.annotation.sequence_id = f[0];
        if (!seen.insert(f[0]).second)
            throw DuplicateId("duplicate sequence_id: " + f[0]);
        e.path = f[1];
        e.annotation.state_label = f[2];
        e.annotation.heart_state = heart_state_from_string(f[2]);
        e.annotation.failure_age_months = parse_double_field(f[3], "failure_age_months");
        if (e.annotation.failure_age_months < 0.0)
            throw ManifestError("failure_age_months must be non-negative");
        const bool any_roi = !f[4].empty() || !f[5].empty() || !f[6].empty() || !f[7].empty();
        if (any_roi) {
            if (f[4].empty() || f[5].empty() || f[6].empty() || f[7].empty())
                throw ManifestError("partial roi on row " + std::to_string(lineno));
            e.annotation.has_roi = true;
            e.annotation.roi.x = parse_size_field(f[4], "roi_x");
            e.annotation.roi.y = parse_size_field(f[5], "roi_y");
            e.annotation.roi.w = parse_size_field(f[6], "roi_w");
            e.annotation.roi.h = parse_size_field(f[7], "roi_h");
        }
        if (f[8].empty())
            e.annotation.split_hint = SplitHint::None;
        else if (f[8] == "train")
            e.annotation.split_hint = SplitHint::Train;
        else if (f[8] == "val")
            e.annotation.split_hint = SplitHint::Val;
        else if (f[8] == "test")
            e.annotation.split_hint = SplitHint::Test;
        else
            throw ManifestError("bad split_hint: '" + f[8] + "'");
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error("cannot write manifest: " + path);
    os << kManifestHeader << "\n";
    for (const ManifestEntry& e : entries) {
        const SequenceAnnotation& a = e.annotation;
        os << a.sequence_id << ',' << e.path << ',' << a.state_label << ','
           << format_double(a.failure_age_months) << ',';
        if (a.has_roi)
            os << a.roi.x << ',' << a.roi.y << ',' << a.roi.w << ',' << a.roi.h;
        else
            os << ",,,";
        os << ',';
        switch (a.split_hint) {
            case SplitHint::Train: os << "train"; break;
            case SplitHint::Val: os << "val"; break;
            case SplitHint::Test: os << "test"; break;
            default: break;
        }
        os << "\n";
    }
}

VideoSequence load_sequence(const std::string& manifest_dir, const ManifestEntry& entry,
                            double dt_seconds) {
    VideoSequence seq;
    seq.frames = read_tensor_file(join_path(manifest_dir, entry.path));
    seq.dt_seconds = dt_seconds;
    seq.annotation = entry.annotation;
    seq.validate();
    return seq;
}

std::string format_double(double v) {
    std::array<char, 64> buf;
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) {
        std::snprintf(buf.data(), buf.size(), "%.17g", v);
        return std::string(buf.data());
    }
    return std::string(buf.data(), ptr);
}

std::string join_path(const std::string& dir, const std::string& leaf) {
    if (dir.empty()) return leaf;
    if (!leaf.empty() && leaf.front() == '/') return leaf;
    if (dir.back() == '/') return dir + leaf;
    return dir + "/" + leaf;
}

}  // namespace mdk
