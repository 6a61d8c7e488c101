// Python bindings for the main operations: the two decomposition stages,
// the delay-embedded spectral fit, and checkpointed regression.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <limits>
#include <cstring>
#include <vector>

#include "mdk/dataset.hpp"
#include "mdk/errors.hpp"
#include "mdk/fixtures.hpp"
#include "mdk/hodmd.hpp"
#include "mdk/linalg.hpp"
#include "mdk/modal_svd.hpp"
#include "mdk/model.hpp"
#include "mdk/tensor.hpp"

namespace py = pybind11;
using namespace mdk;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const DoubleArray& arr) {
    std::vector<std::size_t> dims(static_cast<std::size_t>(arr.ndim()));
    for (py::ssize_t i = 0; i < arr.ndim(); ++i)
        dims[static_cast<std::size_t>(i)] = static_cast<std::size_t>(arr.shape(i));
    Tensor t(dims);
    std::memcpy(t.data.data(), arr.data(), t.numel() * sizeof(double));
    return t;
}

py::array_t<double> to_array(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.dims.begin(), t.dims.end());
    py::array_t<double> arr(shape);
    std::memcpy(arr.mutable_data(), t.data.data(), t.numel() * sizeof(double));
    return arr;
}

py::array_t<std::complex<double>> to_complex_array(const ComplexTensor& t) {
    std::vector<py::ssize_t> shape(t.dims.begin(), t.dims.end());
    py::array_t<std::complex<double>> arr(shape);
    auto* out = arr.mutable_data();
    for (std::size_t i = 0; i < t.numel(); ++i) out[i] = {t.re[i], t.im[i]};
    return arr;
}

TruncationRule rule_from(std::size_t rank, double tolerance) {
    if (rank > 0 && tolerance >= 0.0)
        throw ConfigError("pass rank or tolerance, not both");
    if (rank > 0) return TruncationRule::by_rank(rank);
    if (tolerance >= 0.0) return TruncationRule::by_tolerance(tolerance);
    return TruncationRule::by_rank(std::numeric_limits<std::size_t>::max());
}

py::dict run_hodmd(const DoubleArray& frames, double dt, std::size_t d, double eps_svd,
                   double eps_dmd, std::size_t max_outer, double f_lo_hz, double f_hi_hz) {
    VideoSequence seq;
    seq.frames = to_tensor(frames);
    seq.dt_seconds = dt;

    HodmdConfig cfg;
    cfg.d = d;
    cfg.eps_svd = eps_svd;
    cfg.eps_dmd = eps_dmd;
    cfg.dt_seconds = dt;
    cfg.max_outer_iters = max_outer;
    cfg.f_lo_hz = f_lo_hz;
    cfg.f_hi_hz = f_hi_hz;
    cfg.min_snapshots = 2;  // the caller decides what is long enough

    const HodmdResult res = hodmd_iterative(seq, cfg);
    const std::size_t n_modes = res.spectrum.modes.size();

    py::array_t<double> amplitudes(static_cast<py::ssize_t>(n_modes));
    py::array_t<double> growth_rates(static_cast<py::ssize_t>(n_modes));
    py::array_t<double> frequencies_hz(static_cast<py::ssize_t>(n_modes));
    py::array_t<std::complex<double>> eigenvalues(static_cast<py::ssize_t>(n_modes));
    py::list modes;
    for (std::size_t m = 0; m < n_modes; ++m) {
        const DmdMode& mode = res.spectrum.modes[m];
        amplitudes.mutable_at(static_cast<py::ssize_t>(m)) = mode.a;
        growth_rates.mutable_at(static_cast<py::ssize_t>(m)) = mode.delta;
        frequencies_hz.mutable_at(static_cast<py::ssize_t>(m)) =
            std::abs(mode.omega) / (2.0 * M_PI);
        eigenvalues.mutable_at(static_cast<py::ssize_t>(m)) = mode.mu;
        modes.append(to_complex_array(mode.u));
    }

    py::dict out;
    out["amplitudes"] = amplitudes;
    out["growth_rates"] = growth_rates;
    out["frequencies_hz"] = frequencies_hz;
    out["eigenvalues"] = eigenvalues;
    out["modes"] = modes;
    out["reconstruction"] = to_array(res.reconstruction);
    out["converged"] = res.converged;
    out["outer_iterations"] = res.outer_iterations;
    return out;
}

ModelConfig config_from(std::size_t img_h, std::size_t img_w, std::size_t patch,
                        std::size_t enc_blocks, std::size_t enc_heads, std::size_t enc_dim,
                        double mlp_ratio, std::size_t dec_dim, std::size_t dec_blocks,
                        std::size_t dec_heads, double mask_ratio, double alpha,
                        bool reference_scale) {
    ModelConfig cfg;
    if (reference_scale) {
        cfg = ModelConfig::reference();
    } else {
        cfg.img_h = img_h;
        cfg.img_w = img_w;
        cfg.patch = patch;
        cfg.enc_blocks = enc_blocks;
        cfg.enc_heads = enc_heads;
        cfg.enc_dim = enc_dim;
        cfg.mlp_ratio = mlp_ratio;
        cfg.dec_dim = dec_dim;
        cfg.dec_blocks = dec_blocks;
        cfg.dec_heads = dec_heads;
        cfg.mask_ratio = mask_ratio;
        cfg.alpha = alpha;
    }
    cfg.validate();
    return cfg;
}

py::dict config_dict(const ModelConfig& cfg) {
    py::dict d;
    d["img_h"] = cfg.img_h;
    d["img_w"] = cfg.img_w;
    d["patch"] = cfg.patch;
    d["enc_blocks"] = cfg.enc_blocks;
    d["enc_heads"] = cfg.enc_heads;
    d["enc_dim"] = cfg.enc_dim;
    d["mlp_ratio"] = cfg.mlp_ratio;
    d["dec_dim"] = cfg.dec_dim;
    d["dec_blocks"] = cfg.dec_blocks;
    d["dec_heads"] = cfg.dec_heads;
    d["mask_ratio"] = cfg.mask_ratio;
    d["alpha"] = cfg.alpha;
    d["reference_scale"] = cfg.reference_scale;
    return d;
}

struct PyModel {
    ModelConfig cfg;
    ModelParams params;

    double predict(const DoubleArray& image, bool unit_scale) const {
        Tensor img = to_tensor(image);
        if (img.ndim() != 2) throw ShapeError("image must be 2-d");
        if (unit_scale) img = scale_unit_range(img);
        return predict_months(cfg, params, img);
    }
};

}  // namespace

PYBIND11_MODULE(mdkpy, m) {
    m.doc() = "Modal decomposition of video sequences and a masked-autoencoder "
              "regressor over the derived images.";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const ShapeError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    m.def(
        "truncated_svd",
        [](const DoubleArray& a, std::size_t rank, double tolerance) {
            const SvdFactors f = truncate(svd(to_tensor(a)), rule_from(rank, tolerance));
            py::array_t<double> sigma(static_cast<py::ssize_t>(f.sigma.size()));
            std::memcpy(sigma.mutable_data(), f.sigma.data(), f.sigma.size() * sizeof(double));
            return py::make_tuple(to_array(f.u), sigma, to_array(f.v));
        },
        py::arg("a"), py::arg("rank") = 0, py::arg("tolerance") = -1.0,
        "Thin SVD of a 2-d array, truncated by rank or by relative tolerance. "
        "Returns (u, sigma, v) with a = u @ diag(sigma) @ v.T.");

    m.def(
        "hosvd",
        [](const DoubleArray& t, double eps) {
            const HosvdFactors f = hosvd(to_tensor(t), eps);
            py::list factors;
            for (const Tensor& fac : f.factors) factors.append(to_array(fac));
            py::dict out;
            out["core"] = to_array(f.core);
            out["factors"] = factors;
            out["ranks"] = py::make_tuple(f.retained_ranks[0], f.retained_ranks[1],
                                          f.retained_ranks[2]);
            out["reconstruction"] = to_array(hosvd_reconstruct(f));
            return out;
        },
        py::arg("t"), py::arg("eps") = 5e-4,
        "Higher-order SVD of a 3-d array with per-mode relative tolerance eps.");

    m.def("hodmd", &run_hodmd, py::arg("frames"), py::arg("dt") = 0.004, py::arg("d") = 0,
          py::arg("eps_svd") = 5e-4, py::arg("eps_dmd") = 5e-4, py::arg("max_outer") = 10,
          py::arg("f_lo_hz") = 0.0, py::arg("f_hi_hz") = 0.0,
          "Iterative delay-embedded spectral fit of a [nx, ny, K] snapshot stack. "
          "d = 0 picks floor(K/5). Returns amplitudes, growth rates, frequencies, "
          "eigenvalues, spatial modes, and the mode-sum reconstruction.");

    m.def(
        "lr_schedule",
        [](std::size_t step, double lambda_t, std::size_t warmup_steps, std::size_t total_steps) {
            ScheduleConfig s;
            s.lambda_t = lambda_t;
            s.warmup_steps = warmup_steps;
            s.total_steps = total_steps;
            return lr_at(step, s);
        },
        py::arg("step"), py::arg("lambda_t") = 2.5e-4, py::arg("warmup_steps") = 5,
        py::arg("total_steps") = 100,
        "Learning rate at a step: linear warm-up to lambda_t, then cosine decay to zero.");

    m.def(
        "two_tone_video",
        [](double noise_sigma, std::uint64_t seed) {
            const VideoSequence seq = make_two_tone_video(noise_sigma, seed);
            return py::make_tuple(to_array(seq.frames), seq.dt_seconds);
        },
        py::arg("noise_sigma") = 0.0, py::arg("seed") = 42,
        "Synthetic benchmark stack with one decaying 5 Hz tone and one growing "
        "11 Hz tone. Returns (frames, dt).");

    py::class_<PyModel>(m, "Model",
                        "Masked-autoencoder regressor. Construct fresh (seeded) or load a "
                        "checkpoint; predict months from a 2-d image.")
        .def(py::init([](std::size_t img_h, std::size_t img_w, std::size_t patch,
                         std::size_t enc_blocks, std::size_t enc_heads, std::size_t enc_dim,
                         double mlp_ratio, std::size_t dec_dim, std::size_t dec_blocks,
                         std::size_t dec_heads, double mask_ratio, double alpha,
                         bool reference_scale, std::uint64_t seed) {
                 PyModel pm;
                 pm.cfg = config_from(img_h, img_w, patch, enc_blocks, enc_heads, enc_dim,
                                      mlp_ratio, dec_dim, dec_blocks, dec_heads, mask_ratio,
                                      alpha, reference_scale);
                 pm.params = init_params(pm.cfg, seed);
                 return pm;
             }),
             py::arg("img_h") = 32, py::arg("img_w") = 32, py::arg("patch") = 8,
             py::arg("enc_blocks") = 4, py::arg("enc_heads") = 4, py::arg("enc_dim") = 64,
             py::arg("mlp_ratio") = 4.0, py::arg("dec_dim") = 32, py::arg("dec_blocks") = 2,
             py::arg("dec_heads") = 4, py::arg("mask_ratio") = 0.75, py::arg("alpha") = 0.1,
             py::arg("reference_scale") = false, py::arg("seed") = 42)
        .def_static(
            "load",
            [](const std::string& path) {
                const Checkpoint ck = read_checkpoint(path);
                PyModel pm;
                pm.cfg = ck.config;
                pm.params = ck.params;
                return pm;
            },
            py::arg("path"))
        .def(
            "save",
            [](const PyModel& pm, const std::string& path) {
                write_checkpoint(path, pm.cfg, pm.params);
            },
            py::arg("path"))
        .def("predict", &PyModel::predict, py::arg("image"), py::arg("unit_scale") = true,
             "Months until failure for one image. unit_scale min-max scales the "
             "image into [0,1] first, matching the dataset pipeline.")
        .def_property_readonly("config", [](const PyModel& pm) { return config_dict(pm.cfg); });
}
