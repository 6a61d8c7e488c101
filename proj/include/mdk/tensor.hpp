#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "mdk/errors.hpp"

namespace mdk {

namespace detail {

inline std::size_t checked_product(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) {
        if (d == 0) throw ShapeError("tensor dimension must be >= 1");
        if (d > std::numeric_limits<std::size_t>::max() / n)
            throw DimOverflow("tensor dimension product overflows");
        n *= d;
    }
    return n;
}

}  // namespace detail

/// Dense real tensor, 64-bit floats, row-major.
struct Tensor {
    std::vector<std::size_t> dims;
    std::vector<double> data;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
        : dims(std::move(shape)), data(detail::checked_product(dims), fill) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> values)
        : dims(std::move(shape)), data(std::move(values)) {
        if (data.size() != detail::checked_product(dims))
            throw ShapeError("tensor data length does not match dims");
    }

    std::size_t numel() const { return data.size(); }
    std::size_t ndim() const { return dims.size(); }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }

    double& at(std::size_t i, std::size_t j) { return data[i * dims[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * dims[1] + j]; }

    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * dims[1] + j) * dims[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * dims[1] + j) * dims[2] + k];
    }

    /// Same data, new shape; element count must be preserved.
    Tensor reshaped(std::vector<std::size_t> shape) const {
        if (detail::checked_product(shape) != numel())
            throw ShapeError("reshape changes element count");
        return Tensor(std::move(shape), data);
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : data) s += v * v;
        return std::sqrt(s);
    }

    bool same_shape(const Tensor& o) const { return dims == o.dims; }
};

/// Dense complex tensor stored as separate real/imaginary planes.
struct ComplexTensor {
    std::vector<std::size_t> dims;
    std::vector<double> re;
    std::vector<double> im;

    ComplexTensor() = default;

    explicit ComplexTensor(std::vector<std::size_t> shape)
        : dims(std::move(shape)),
          re(detail::checked_product(dims), 0.0),
          im(re.size(), 0.0) {}

    ComplexTensor(std::vector<std::size_t> shape, std::vector<double> real,
                  std::vector<double> imag)
        : dims(std::move(shape)), re(std::move(real)), im(std::move(imag)) {
        const std::size_t n = detail::checked_product(dims);
        if (re.size() != n || im.size() != n)
            throw ShapeError("complex tensor plane length does not match dims");
    }

    std::size_t numel() const { return re.size(); }
    std::size_t ndim() const { return dims.size(); }

    double frobenius_norm() const {
        double s = 0.0;
        for (std::size_t i = 0; i < re.size(); ++i) s += re[i] * re[i] + im[i] * im[i];
        return std::sqrt(s);
    }

    Tensor abs_plane() const {
        Tensor t(dims);
        for (std::size_t i = 0; i < re.size(); ++i) t.data[i] = std::hypot(re[i], im[i]);
        return t;
    }

    Tensor real_plane() const { return Tensor(dims, re); }
    Tensor imag_plane() const { return Tensor(dims, im); }
};

enum class HeartState { Ctl, Ob, Sh, Other };

struct Rect {
    std::size_t x = 0, y = 0, w = 0, h = 0;
};

enum class SplitHint { None, Train, Val, Test };

struct SequenceAnnotation {
    std::string sequence_id;
    HeartState heart_state = HeartState::Other;
    std::string state_label;  // original label text ("CTL", "OB", ...)
    double failure_age_months = 0.0;
    bool has_roi = false;
    Rect roi;
    SplitHint split_hint = SplitHint::None;
};

/// Homogenized snapshot tensor [N_x, N_y, K] plus acquisition metadata.
struct VideoSequence {
    Tensor frames;  // dims [N_x, N_y, K]
    double dt_seconds = 0.0;
    SequenceAnnotation annotation;

    std::size_t nx() const { return frames.dims[0]; }
    std::size_t ny() const { return frames.dims[1]; }
    std::size_t frame_count() const { return frames.dims[2]; }

    void validate() const {
        if (frames.ndim() != 3) throw ShapeError("video frames must be 3-way [N_x,N_y,K]");
        if (!(dt_seconds > 0.0)) throw ShapeError("dt_seconds must be positive");
        if (annotation.has_roi) {
            const Rect& r = annotation.roi;
            if (r.w == 0 || r.h == 0 || r.x + r.w > nx() || r.y + r.h > ny())
                throw ShapeError("roi outside frame bounds");
        }
    }

    /// Frame k as an [N_x, N_y] tensor (copy).
    Tensor frame(std::size_t k) const {
        Tensor f({nx(), ny()});
        for (std::size_t i = 0; i < nx(); ++i)
            for (std::size_t j = 0; j < ny(); ++j) f.at(i, j) = frames.at(i, j, k);
        return f;
    }
};

const char* to_string(HeartState s);
HeartState heart_state_from_string(const std::string& label);

/// Column k = frame k flattened row-major; N_p = N_x * N_y.
Tensor reshape_to_snapshot_matrix(const VideoSequence& seq);

/// Inverse of reshape_to_snapshot_matrix.
Tensor snapshot_matrix_to_video(const Tensor& mat, std::size_t nx, std::size_t ny);

}  // namespace mdk
