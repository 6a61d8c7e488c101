#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "mdk/io.hpp"

using namespace mdk;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("mdk_io_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& leaf) const { return (path / leaf).string(); }
};

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("tensor file round-trip is bitwise exact") {
    TempDir dir;
    Tensor t({3, 2, 4});
    for (std::size_t i = 0; i < t.numel(); ++i)
        t.data[i] = (static_cast<double>(i) - 11.0) * 1.613e-3;

    const std::string path = dir.file("a.mdt");
    write_tensor_file(path, t);
    Tensor back = read_tensor_file(path);
    CHECK(back.dims == t.dims);
    CHECK(back.data == t.data);
}

TEST_CASE("f32 payloads are widened on load") {
    TempDir dir;
    Tensor t({2, 2}, std::vector<double>{0.5, 1.25, -2.0, 1024.0});
    const std::string path = dir.file("a32.mdt");
    write_tensor_file(path, t, /*as_f32=*/true);
    Tensor back = read_tensor_file(path);
    CHECK(back.data == t.data);  // exactly representable values survive
}

TEST_CASE("complex tensor round-trip") {
    TempDir dir;
    ComplexTensor c({2, 3});
    for (std::size_t i = 0; i < c.numel(); ++i) {
        c.re[i] = static_cast<double>(i) * 0.1;
        c.im[i] = -static_cast<double>(i) * 0.2;
    }
    const std::string path = dir.file("c.mdtc");
    write_complex_tensor_file(path, c);
    ComplexTensor back = read_complex_tensor_file(path);
    CHECK(back.dims == c.dims);
    CHECK(back.re == c.re);
    CHECK(back.im == c.im);
}

TEST_CASE("wrong magic raises BadMagic") {
    TempDir dir;
    const std::string path = dir.file("bad.mdt");
    write_bytes(path, std::string("XXXX\x01\x01", 6) + std::string(8, '\0'));
    CHECK_THROWS_AS(read_tensor_file(path), BadMagic);
}

TEST_CASE("short payload raises Truncated") {
    TempDir dir;
    const std::string path = dir.file("short.mdt");
    // header dims [2,2], dtype f32, then only 3 floats
    std::string bytes = "MDT1";
    bytes += '\x00';
    bytes += '\x02';
    const auto dim = [](std::uint64_t d) {
        std::string s(8, '\0');
        for (int i = 0; i < 8; ++i) s[static_cast<std::size_t>(i)] = static_cast<char>((d >> (8 * i)) & 0xff);
        return s;
    };
    bytes += dim(2);
    bytes += dim(2);
    bytes += std::string(3 * 4, '\x40');
    write_bytes(path, bytes);
    CHECK_THROWS_AS(read_tensor_file(path), Truncated);
}

TEST_CASE("absurd header dims raise DimOverflow") {
    TempDir dir;
    const std::string path = dir.file("huge.mdt");
    std::string bytes = "MDT1";
    bytes += '\x01';
    bytes += '\x02';
    bytes += std::string("\xff\xff\xff\xff\xff\xff\xff\x7f", 8);
    bytes += std::string("\xff\xff\xff\xff\xff\xff\xff\x7f", 8);
    write_bytes(path, bytes);
    CHECK_THROWS_AS(read_tensor_file(path), DimOverflow);
}

TEST_CASE("unknown dtype raises BadDtype") {
    TempDir dir;
    const std::string path = dir.file("dtype.mdt");
    std::string bytes = "MDT1";
    bytes += '\x07';
    bytes += '\x01';
    bytes += std::string(8, '\0');
    write_bytes(path, bytes);
    CHECK_THROWS_AS(read_tensor_file(path), BadDtype);
}

TEST_CASE("manifest row with empty optional columns") {
    TempDir dir;
    const std::string path = dir.file("m.csv");
    write_bytes(path,
                "sequence_id,path,heart_state,failure_age_months,roi_x,roi_y,roi_w,roi_h,split_hint\n"
                "s1,a.mdt,CTL,27.83,,,,,\n");
    auto entries = read_manifest(path);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].path == "a.mdt");
    CHECK(entries[0].annotation.sequence_id == "s1");
    CHECK(entries[0].annotation.heart_state == HeartState::Ctl);
    CHECK(entries[0].annotation.failure_age_months == doctest::Approx(27.83));
    CHECK_FALSE(entries[0].annotation.has_roi);
    CHECK(entries[0].annotation.split_hint == SplitHint::None);
}

TEST_CASE("manifest with header only yields empty list") {
    TempDir dir;
    const std::string path = dir.file("empty.csv");
    write_bytes(path,
                "sequence_id,path,heart_state,failure_age_months,roi_x,roi_y,roi_w,roi_h,split_hint\n");
    CHECK(read_manifest(path).empty());
}

TEST_CASE("duplicate sequence ids are rejected") {
    TempDir dir;
    const std::string path = dir.file("dup.csv");
    write_bytes(path,
                "sequence_id,path,heart_state,failure_age_months,roi_x,roi_y,roi_w,roi_h,split_hint\n"
                "s1,a.mdt,CTL,10,,,,,\n"
                "s1,b.mdt,OB,11,,,,,\n");
    CHECK_THROWS_AS(read_manifest(path), DuplicateId);
}

TEST_CASE("manifest column validation") {
    TempDir dir;
    const std::string missing = dir.file("mis.csv");
    write_bytes(missing, "sequence_id,path,heart_state\ns1,a.mdt,CTL\n");
    CHECK_THROWS_AS(read_manifest(missing), ManifestError);

    const std::string badnum = dir.file("badnum.csv");
    write_bytes(badnum,
                "sequence_id,path,heart_state,failure_age_months,roi_x,roi_y,roi_w,roi_h,split_hint\n"
                "s1,a.mdt,CTL,oops,,,,,\n");
    CHECK_THROWS_AS(read_manifest(badnum), ManifestError);
}

TEST_CASE("manifest rows with roi and split hint survive a write/read cycle") {
    TempDir dir;
    std::vector<ManifestEntry> entries(2);
    entries[0].path = "x/one.mdt";
    entries[0].annotation.sequence_id = "one";
    entries[0].annotation.heart_state = HeartState::Ob;
    entries[0].annotation.state_label = "OB";
    entries[0].annotation.failure_age_months = 22.03;
    entries[0].annotation.has_roi = true;
    entries[0].annotation.roi = Rect{10, 20, 128, 96};
    entries[0].annotation.split_hint = SplitHint::Val;
    entries[1].path = "x/two.mdt";
    entries[1].annotation.sequence_id = "two";
    entries[1].annotation.heart_state = HeartState::Sh;
    entries[1].annotation.state_label = "SH";
    entries[1].annotation.failure_age_months = 20.77;

    const std::string path = dir.file("rt.csv");
    write_manifest(path, entries);
    auto back = read_manifest(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].annotation.has_roi);
    CHECK(back[0].annotation.roi.w == 128);
    CHECK(back[0].annotation.split_hint == SplitHint::Val);
    CHECK(back[1].annotation.heart_state == HeartState::Sh);
    CHECK(back[1].annotation.failure_age_months == doctest::Approx(20.77));
    CHECK(back[1].annotation.split_hint == SplitHint::None);
}

TEST_CASE("load_sequence reads the tensor behind an entry") {
    TempDir dir;
    Tensor frames({2, 2, 3}, 0.0);
    frames.at(1, 0, 2) = 5.0;
    write_tensor_file(dir.file("seq.mdt"), frames);

    ManifestEntry e;
    e.path = "seq.mdt";
    e.annotation.sequence_id = "s";
    VideoSequence seq = load_sequence(dir.path.string(), e, 0.004);
    CHECK(seq.frame_count() == 3);
    CHECK(seq.dt_seconds == 0.004);
    CHECK(seq.frames.at(1, 0, 2) == 5.0);
}

TEST_CASE("format_double round-trips exactly") {
    for (double v : {0.0, 1.0, -2.5, 27.83, 1e-17, 3.141592653589793, -1.0 / 3.0}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}
