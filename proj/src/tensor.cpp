#include "mdk/tensor.hpp"

namespace mdk {

const char* to_string(HeartState s) {
    switch (s) {
        case HeartState::Ctl: return "CTL";
        case HeartState::Ob: return "OB";
        case HeartState::Sh: return "SH";
        default: return "Other";
    }
}

HeartState heart_state_from_string(const std::string& label) {
    if (label == "CTL") return HeartState::Ctl;
    if (label == "OB") return HeartState::Ob;
    if (label == "SH") return HeartState::Sh;
    return HeartState::Other;
}

Tensor reshape_to_snapshot_matrix(const VideoSequence& seq) {
    seq.validate();
    const std::size_t nx = seq.nx(), ny = seq.ny(), k = seq.frame_count();
    const std::size_t np = nx * ny;
    Tensor mat({np, k});
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j) {
            const std::size_t row = i * ny + j;
            for (std::size_t t = 0; t < k; ++t) mat.at(row, t) = seq.frames.at(i, j, t);
        }
    return mat;
}

Tensor snapshot_matrix_to_video(const Tensor& mat, std::size_t nx, std::size_t ny) {
    if (mat.ndim() != 2) throw ShapeError("snapshot matrix must be 2-way");
    if (mat.dims[0] != nx * ny) throw ShapeError("row count must equal N_x*N_y");
    const std::size_t k = mat.dims[1];
    Tensor video({nx, ny, k});
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j) {
            const std::size_t row = i * ny + j;
            for (std::size_t t = 0; t < k; ++t) video.at(i, j, t) = mat.at(row, t);
        }
    return video;
}

}  // namespace mdk
