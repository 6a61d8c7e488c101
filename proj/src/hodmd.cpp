#include "mdk/hodmd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>

#include "mdk/eigen_util.hpp"
#include "mdk/errors.hpp"
#include "mdk/io.hpp"
#include "mdk/linalg.hpp"
#include "mdk/modal_svd.hpp"

namespace mdk {

namespace {

constexpr double kPi = 3.14159265358979323846;

ComplexTensor to_complex(const Tensor& t) {
    return ComplexTensor(t.dims, t.data, std::vector<double>(t.numel(), 0.0));
}

Eigen::MatrixXcd to_eigen_c(const ComplexTensor& t) { return to_eigen(t); }

}  // namespace

std::size_t HodmdConfig::resolve_delay(std::size_t snapshot_count) const {
    if (d != 0) return d;
    return std::max<std::size_t>(snapshot_count / 5, 1);
}

void HodmdConfig::validate(std::size_t snapshot_count) const {
    if (!(eps_svd > 0.0) || !(eps_dmd > 0.0))
        throw ConfigError("hodmd: tolerances must be positive");
    if (!(dt_seconds > 0.0)) throw ConfigError("hodmd: dt_seconds must be positive");
    if (max_outer_iters == 0) throw ConfigError("hodmd: max_outer_iters must be positive");
    const std::size_t dd = resolve_delay(snapshot_count);
    if (snapshot_count < dd + 2)
        throw ShapeError("hodmd: need at least d+2 snapshots");
}

KoopmanSystem build_koopman_system(const Tensor& reduced, std::size_t d) {
    if (reduced.ndim() != 2) throw ShapeError("koopman: expected [r, K] matrix");
    const std::size_t r = reduced.dims[0], K = reduced.dims[1];
    if (d == 0 || K < d + 2) throw ShapeError("koopman: need 1 <= d <= K-2");
    const std::size_t cols = K - d;

    KoopmanSystem sys;
    for (std::size_t w = 0; w <= d; ++w) {
        Tensor win({r, cols});
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t c = 0; c < cols; ++c) win.at(i, c) = reduced.at(i, w + c);
        sys.delay_windows.push_back(std::move(win));
    }

    // Fit [R_1 .. R_d] jointly: stack the first d windows as regressors.
    Eigen::MatrixXd x(static_cast<Eigen::Index>(d * r), static_cast<Eigen::Index>(cols));
    for (std::size_t w = 0; w < d; ++w)
        x.middleRows(static_cast<Eigen::Index>(w * r), static_cast<Eigen::Index>(r)) =
            to_eigen(sys.delay_windows[w]);
    const Eigen::MatrixXd y = to_eigen(sys.delay_windows[d]);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x.transpose());
    const Eigen::MatrixXd blocks = cod.solve(y.transpose()).transpose();  // [r, d r]

    Tensor comp({d * r, d * r}, 0.0);
    for (std::size_t b = 0; b + 1 < d; ++b)
        for (std::size_t i = 0; i < r; ++i) comp.at(b * r + i, (b + 1) * r + i) = 1.0;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < d * r; ++j)
            comp.at((d - 1) * r + i, j) = blocks(static_cast<Eigen::Index>(i),
                                                 static_cast<Eigen::Index>(j));
    sys.companion_operator = std::move(comp);
    return sys;
}

DmdSpectrum dmd_d(const Tensor& reduced, const HodmdConfig& cfg) {
    if (reduced.ndim() != 2) throw ShapeError("dmd_d: expected [r, K] matrix");
    const std::size_t r = reduced.dims[0], K = reduced.dims[1];
    cfg.validate(K);
    const std::size_t d = cfg.resolve_delay(K);
    const double dt = cfg.dt_seconds;

    DmdSpectrum out;
    out.t1 = 0.0;
    out.timespan = static_cast<double>(K - 1) * dt;
    out.dt_seconds = dt;
    if (reduced.frobenius_norm() == 0.0) return out;

    // delay embedding
    const std::size_t j_cols = K - d + 1;
    Tensor embedded({d * r, j_cols});
    for (std::size_t b = 0; b < d; ++b)
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t c = 0; c < j_cols; ++c)
                embedded.at(b * r + i, c) = reduced.at(i, c + b);

    // SVD reduction of the delay-embedded matrix; the one-step fit can
    // identify at most j_cols-1 directions
    SvdFactors f = svd(embedded);
    std::size_t keep = TruncationRule::by_tolerance(cfg.eps_svd).retained(f.sigma);
    keep = std::min(keep, j_cols - 1);
    f = truncate(f, TruncationRule::by_rank(keep));

    const Eigen::MatrixXd ubar = to_eigen(f.u);
    Eigen::MatrixXd that(static_cast<Eigen::Index>(keep), static_cast<Eigen::Index>(j_cols));
    {
        const Eigen::MatrixXd v = to_eigen(f.v);
        for (std::size_t i = 0; i < keep; ++i)
            that.row(static_cast<Eigen::Index>(i)) =
                f.sigma[i] * v.col(static_cast<Eigen::Index>(i)).transpose();
    }

    // one-step operator in the reduced delay coordinates
    const Eigen::MatrixXd t1m = that.leftCols(static_cast<Eigen::Index>(j_cols - 1));
    const Eigen::MatrixXd t2m = that.rightCols(static_cast<Eigen::Index>(j_cols - 1));
    const LstsqResult fit = lstsq(to_complex(from_eigen(Eigen::MatrixXd(t1m.transpose()))),
                                  to_complex(from_eigen(Eigen::MatrixXd(t2m.transpose()))));
    Tensor rhat({keep, keep});
    for (std::size_t i = 0; i < keep; ++i)
        for (std::size_t j = 0; j < keep; ++j) rhat.at(i, j) = fit.x.re[j * keep + i];

    const EigPairs ep = eig(rhat);
    const Eigen::MatrixXcd evecs = to_eigen_c(ep.vectors);
    const Eigen::MatrixXcd delay_modes = ubar * evecs;  // [d r, keep]

    // candidate modes: reduced spatial vector from the best delay block
    struct Candidate {
        Eigen::VectorXcd x;
        std::complex<double> mu;
        double delta, omega;
    };
    std::vector<Candidate> cand;
    double mu_max = 0.0;
    for (std::size_t m = 0; m < keep; ++m) mu_max = std::max(mu_max, std::abs(ep.values[m]));
    for (std::size_t m = 0; m < keep; ++m) {
        const std::complex<double> mu = ep.values[m];
        if (std::abs(mu) <= 1e-12 * mu_max) continue;  // not representable as exp((..)dt)
        const double growth = std::log(std::abs(mu)) * static_cast<double>(K - 1);
        if (growth > 250.0) continue;  // |mu|^(K-1) overflows the fit window
        std::size_t best_block = 0;
        double best_norm = -1.0;
        for (std::size_t b = 0; b < d; ++b) {
            const double n = delay_modes.col(static_cast<Eigen::Index>(m))
                                 .segment(static_cast<Eigen::Index>(b * r),
                                          static_cast<Eigen::Index>(r))
                                 .norm();
            if (n > best_norm) {
                best_norm = n;
                best_block = b;
            }
        }
        if (best_norm <= 0.0) continue;
        Candidate c;
        c.x = delay_modes.col(static_cast<Eigen::Index>(m))
                  .segment(static_cast<Eigen::Index>(best_block * r),
                           static_cast<Eigen::Index>(r)) /
              best_norm;
        c.mu = mu;
        c.delta = std::log(std::abs(mu)) / dt;
        double w = std::arg(mu) / dt;
        if (w <= -kPi / dt) w += 2.0 * kPi / dt;  // principal branch (-pi/dt, pi/dt]
        c.omega = w;
        cand.push_back(std::move(c));
    }
    if (cand.empty()) return out;

    // global amplitude fit of the mode sum against all K snapshots
    const std::size_t mcount = cand.size();
    ComplexTensor phi({r * K, mcount});
    ComplexTensor rhs({r * K, 1});
    for (std::size_t k = 0; k < K; ++k) {
        const double t = static_cast<double>(k) * dt;
        for (std::size_t m = 0; m < mcount; ++m) {
            const std::complex<double> g =
                std::exp(std::complex<double>(cand[m].delta * t, cand[m].omega * t));
            for (std::size_t i = 0; i < r; ++i) {
                const std::complex<double> v = cand[m].x(static_cast<Eigen::Index>(i)) * g;
                const std::size_t idx = (k * r + i) * mcount + m;
                phi.re[idx] = v.real();
                phi.im[idx] = v.imag();
            }
        }
        for (std::size_t i = 0; i < r; ++i) rhs.re[k * r + i] = reduced.at(i, k);
    }

    // Columns of phi span many decades when spurious growing eigenvalues are
    // present; scale each to unit norm so the solver weighs all candidates
    // equally, then fold the scale back into the coefficients.
    std::vector<double> col_norm(mcount, 0.0);
    for (std::size_t idx = 0; idx < phi.re.size(); ++idx) {
        const std::size_t m = idx % mcount;
        col_norm[m] += phi.re[idx] * phi.re[idx] + phi.im[idx] * phi.im[idx];
    }
    for (std::size_t m = 0; m < mcount; ++m)
        col_norm[m] = col_norm[m] > 0.0 ? std::sqrt(col_norm[m]) : 1.0;
    for (std::size_t idx = 0; idx < phi.re.size(); ++idx) {
        const double s = col_norm[idx % mcount];
        phi.re[idx] /= s;
        phi.im[idx] /= s;
    }
    const LstsqResult amp = lstsq(phi, rhs);

    double a_max = 0.0;
    std::vector<std::complex<double>> ahat(mcount);
    for (std::size_t m = 0; m < mcount; ++m) {
        ahat[m] = std::complex<double>(amp.x.re[m], amp.x.im[m]) / col_norm[m];
        a_max = std::max(a_max, std::abs(ahat[m]));
    }
    if (a_max == 0.0) return out;

    const bool band_pass = cfg.f_hi_hz > cfg.f_lo_hz;
    for (std::size_t m = 0; m < mcount; ++m) {
        const double a = std::abs(ahat[m]);
        if (a / a_max <= cfg.eps_dmd) continue;
        if (band_pass) {
            const double f_hz = std::abs(cand[m].omega) / (2.0 * kPi);
            if (f_hz < cfg.f_lo_hz || f_hz > cfg.f_hi_hz) continue;
        }
        DmdMode mode;
        mode.a = a;
        mode.delta = cand[m].delta;
        mode.omega = cand[m].omega;
        mode.mu = cand[m].mu;
        const std::complex<double> phase = ahat[m] / a;
        mode.u = ComplexTensor({r, 1});
        for (std::size_t i = 0; i < r; ++i) {
            const std::complex<double> v = cand[m].x(static_cast<Eigen::Index>(i)) * phase;
            mode.u.re[i] = v.real();
            mode.u.im[i] = v.imag();
        }
        out.modes.push_back(std::move(mode));
    }

    std::sort(out.modes.begin(), out.modes.end(), [](const DmdMode& a, const DmdMode& b) {
        if (a.a != b.a) return a.a > b.a;
        if (std::abs(a.omega) != std::abs(b.omega)) return std::abs(a.omega) < std::abs(b.omega);
        if (a.omega != b.omega) return a.omega > b.omega;
        return a.delta < b.delta;
    });
    return out;
}

Tensor reconstruct(const DmdSpectrum& spec, const std::vector<double>& times,
                   bool* extrapolated) {
    if (spec.modes.empty()) throw DegenerateInput("reconstruct: empty spectrum");
    if (times.empty()) throw ShapeError("reconstruct: no evaluation times");
    const std::vector<std::size_t>& udims = spec.modes[0].u.dims;
    if (udims.size() != 2) throw ShapeError("reconstruct: modes must be 2-d");
    for (const DmdMode& m : spec.modes)
        if (m.u.dims != udims) throw ShapeError("reconstruct: mixed mode shapes");

    if (extrapolated) {
        *extrapolated = false;
        const double tol = 1e-9 * std::max(1.0, std::abs(spec.timespan));
        for (double t : times)
            if (t < spec.t1 - tol || t > spec.t1 + spec.timespan + tol) *extrapolated = true;
    }

    const std::size_t np = udims[0] * udims[1];
    const std::size_t count = times.size();
    Tensor out({udims[0], udims[1], count}, 0.0);
    for (std::size_t ti = 0; ti < count; ++ti) {
        const double t = times[ti] - spec.t1;
        for (const DmdMode& m : spec.modes) {
            const std::complex<double> c =
                m.a * std::exp(std::complex<double>(m.delta * t, m.omega * t));
            for (std::size_t p = 0; p < np; ++p)
                out.data[p * count + ti] += c.real() * m.u.re[p] - c.imag() * m.u.im[p];
        }
    }
    return out;
}

namespace {

std::vector<double> snapshot_times(std::size_t count, double dt) {
    std::vector<double> t(count);
    for (std::size_t k = 0; k < count; ++k) t[k] = static_cast<double>(k) * dt;
    return t;
}

}  // namespace

HodmdResult hodmd_iterative(const VideoSequence& seq, const HodmdConfig& cfg) {
    seq.validate();
    const std::size_t K = seq.frame_count();
    if (K < cfg.min_snapshots)
        throw SequenceTooShort("sequence has " + std::to_string(K) + " snapshots, need " +
                               std::to_string(cfg.min_snapshots));
    cfg.validate(K);
    if (seq.frames.frobenius_norm() == 0.0)
        throw DegenerateInput("hodmd: video is identically zero");

    const std::size_t nx = seq.nx(), ny = seq.ny();
    const std::vector<double> times = snapshot_times(K, cfg.dt_seconds);

    HodmdResult res;
    Tensor current = seq.frames;
    std::array<std::size_t, 3> prev_ranks{};
    bool have_prev = false;

    for (std::size_t iter = 1; iter <= cfg.max_outer_iters; ++iter) {
        res.outer_iterations = iter;
        const HosvdFactors h = hosvd(current, cfg.eps_svd);
        const std::size_t r3 = h.retained_ranks[2];

        // Temporal coefficient matrix scaled by the core slice energies, and
        // the matching orthonormal spatial dictionary (one image per slice).
        std::vector<double> slice_norm(r3, 0.0);
        for (std::size_t p = 0; p < r3; ++p) {
            double s = 0.0;
            for (std::size_t i = 0; i < h.retained_ranks[0]; ++i)
                for (std::size_t j = 0; j < h.retained_ranks[1]; ++j)
                    s += h.core.at(i, j, p) * h.core.at(i, j, p);
            slice_norm[p] = std::sqrt(s);
        }
        Tensor reduced({r3, K});
        for (std::size_t p = 0; p < r3; ++p)
            for (std::size_t k = 0; k < K; ++k)
                reduced.at(p, k) = slice_norm[p] * h.factors[2].at(k, p);

        const Eigen::MatrixXd u1 = to_eigen(h.factors[0]);
        const Eigen::MatrixXd u2 = to_eigen(h.factors[1]);
        std::vector<Eigen::MatrixXd> dictionary(r3);
        for (std::size_t p = 0; p < r3; ++p) {
            Eigen::MatrixXd slice(static_cast<Eigen::Index>(h.retained_ranks[0]),
                                  static_cast<Eigen::Index>(h.retained_ranks[1]));
            for (std::size_t i = 0; i < h.retained_ranks[0]; ++i)
                for (std::size_t j = 0; j < h.retained_ranks[1]; ++j)
                    slice(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        h.core.at(i, j, p);
            dictionary[p] = u1 * slice * u2.transpose() /
                            (slice_norm[p] > 0.0 ? slice_norm[p] : 1.0);
        }

        DmdSpectrum reduced_spec = dmd_d(reduced, cfg);

        // lift reduced modes to pixel space through the orthonormal dictionary
        DmdSpectrum pixel_spec;
        pixel_spec.t1 = reduced_spec.t1;
        pixel_spec.timespan = reduced_spec.timespan;
        pixel_spec.dt_seconds = reduced_spec.dt_seconds;
        pixel_spec.retained_hosvd_ranks = h.retained_ranks;
        for (const DmdMode& rm : reduced_spec.modes) {
            DmdMode pm;
            pm.a = rm.a;
            pm.delta = rm.delta;
            pm.omega = rm.omega;
            pm.mu = rm.mu;
            pm.u = ComplexTensor({nx, ny});
            for (std::size_t p = 0; p < r3; ++p) {
                const double cr = rm.u.re[p], ci = rm.u.im[p];
                for (std::size_t i = 0; i < nx; ++i)
                    for (std::size_t j = 0; j < ny; ++j) {
                        const double b = dictionary[p](static_cast<Eigen::Index>(i),
                                                       static_cast<Eigen::Index>(j));
                        pm.u.re[i * ny + j] += b * cr;
                        pm.u.im[i * ny + j] += b * ci;
                    }
            }
            const double norm = pm.u.frobenius_norm();
            if (norm > 0.0) {
                for (std::size_t p = 0; p < pm.u.numel(); ++p) {
                    pm.u.re[p] /= norm;
                    pm.u.im[p] /= norm;
                }
                pm.a *= norm;
            }
            pixel_spec.modes.push_back(std::move(pm));
        }

        res.spectrum = std::move(pixel_spec);
        res.reconstruction = res.spectrum.modes.empty()
                                 ? Tensor({nx, ny, K}, 0.0)
                                 : reconstruct(res.spectrum, times);
        if (have_prev && h.retained_ranks == prev_ranks) {
            res.converged = true;
            break;
        }
        prev_ranks = h.retained_ranks;
        have_prev = true;
        current = res.reconstruction;
    }
    return res;
}

void write_spectrum_file(const std::string& path, const DmdSpectrum& spec) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write file: " + path);
    os.write("MDSP", 4);
    put_u64(os, spec.modes.size());
    put_f64(os, spec.dt_seconds);
    put_f64(os, spec.t1);
    put_f64(os, spec.timespan);
    for (std::size_t r : spec.retained_hosvd_ranks) put_u64(os, r);
    for (const DmdMode& m : spec.modes) {
        put_f64(os, m.a);
        put_f64(os, m.delta);
        put_f64(os, m.omega);
        put_f64(os, m.mu.real());
        put_f64(os, m.mu.imag());
        write_complex_tensor(os, m.u);
    }
    if (!os) throw Error("write failed: " + path);
}

DmdSpectrum read_spectrum_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open file: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "MDSP", 4) != 0) throw BadMagic("bad magic bytes");
    DmdSpectrum spec;
    const std::uint64_t count = get_u64(is);
    spec.dt_seconds = get_f64(is);
    spec.t1 = get_f64(is);
    spec.timespan = get_f64(is);
    for (std::size_t i = 0; i < 3; ++i)
        spec.retained_hosvd_ranks[i] = static_cast<std::size_t>(get_u64(is));
    for (std::uint64_t m = 0; m < count; ++m) {
        DmdMode mode;
        mode.a = get_f64(is);
        mode.delta = get_f64(is);
        mode.omega = get_f64(is);
        const double re = get_f64(is), im = get_f64(is);
        mode.mu = {re, im};
        mode.u = read_complex_tensor(is);
        spec.modes.push_back(std::move(mode));
    }
    return spec;
}

}  // namespace mdk
