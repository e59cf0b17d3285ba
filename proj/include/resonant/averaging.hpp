#pragma once

// Numerical check of the averaged (anti-secular) envelope equation on a
// simulated trajectory. The slow envelope k(tau) is read off eps*y by a
// first-harmonic projection per 2 pi window of theta, differenced in tau, and
// compared with the windowed average of x^2 exp(-i theta).
//
// Normalisation: removing the exp(i theta) resonance from
//   y1'' + y1 = -2 d^2Y/(dtheta dtau) + delta x0^2,   Y = k e^{i theta} + c.c.
// gives  dk/dtau = -(i delta / 2) <x0^2 e^{-i theta}>.  The solvability
// normalisation below carries that factor 1/2; `printed` drops it.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "resonant/errors.hpp"
#include "resonant/integrators.hpp"
#include "resonant/oscillator.hpp"

namespace resonant {

using cplx = std::complex<double>;

enum class AveragingNormalization {
    solvability,  // -(i delta / 2T) int x^2 e^{-i theta}
    printed,      // -(i delta / T)  int x^2 e^{-i theta}
};

struct EnvelopeSeries {
    std::vector<double> tau;  // slow time at window centres, strictly increasing
    std::vector<cplx> k;      // k1 + i k2
};

struct ResidualReport {
    std::vector<double> tau;
    std::vector<cplx> lhs;  // S_l, difference derivative of k
    std::vector<cplx> rhs;  // S_r, windowed average
    std::vector<std::optional<double>> rel_error;  // empty where |S_l| is below the floor

    std::size_t missing() const {
        return static_cast<std::size_t>(
            std::count(rel_error.begin(), rel_error.end(), std::nullopt));
    }
};

/// Samples of theta = Omega t per 2 pi. Throws WindowMismatch unless integral.
inline std::size_t samples_per_window(const IntegrationGrid& grid, double Omega = 1.0) {
    const double n = 2.0 * std::numbers::pi / (Omega * grid.h);
    const double rounded = std::round(n);
    if (rounded < 2.0 || std::abs(n - rounded) > 1e-9 * n) {
        throw WindowMismatch("2 pi / (Omega h) = " + std::to_string(n) +
                             " is not an integer number of samples");
    }
    return static_cast<std::size_t>(rounded);
}

/// Default averaging window: an integer number of fast periods closest to
/// varepsilon^-2 (at least one).
inline double default_window_length(const NondimParams& np) {
    const double two_pi = 2.0 * std::numbers::pi;
    const double periods = std::max(1.0, std::round(1.0 / (np.varepsilon * np.varepsilon) / two_pi));
    return two_pi * periods;
}

/// Streaming form of the windowed projection: feed eps*y samples in order;
/// every `samples_per_window` steps one envelope point is completed.
class EnvelopeAccumulator {
public:
    EnvelopeAccumulator(std::size_t samples_per_window, double h_theta, double theta0,
                        double varepsilon)
        : N_(samples_per_window), h_theta_(h_theta), theta0_(theta0), eps_(varepsilon) {}

    /// Sample index i (from the start of the series) at phase theta.
    void operator()(std::size_t i, double theta, double y) {
        const cplx v = eps_ * y * std::polar(1.0, -theta);
        const std::size_t pos = i % N_;
        if (pos == 0) {
            if (i > 0) finish(v);
            acc_ = 0.5 * v;
        } else {
            acc_ += v;
        }
    }

    const EnvelopeSeries& series() const noexcept { return env_; }
    EnvelopeSeries take() { return std::move(env_); }

private:
    void finish(cplx closing) {
        const double two_pi = 2.0 * std::numbers::pi;
        const auto w = static_cast<double>(env_.k.size());
        env_.tau.push_back(eps_ * eps_ * (theta0_ + (w + 0.5) * two_pi));
        env_.k.push_back((acc_ + 0.5 * closing) * h_theta_ / two_pi);
    }

    std::size_t N_;
    double h_theta_, theta0_, eps_;
    cplx acc_ = 0.0;
    EnvelopeSeries env_;
};

/// k per 2 pi window of theta: k1 = (1/2pi) int eps y cos, k2 = -(1/2pi) int eps y sin,
/// so that eps y = 2 k1 cos theta - 2 k2 sin theta for a pure first harmonic.
inline EnvelopeSeries extract_envelope(const TimeSeries<4>& ts, const NondimParams& np,
                                       double Omega = 1.0) {
    const std::size_t N = samples_per_window(ts.grid, Omega);
    EnvelopeAccumulator acc(N, Omega * ts.grid.h, Omega * ts.grid.t0, np.varepsilon);
    for (std::size_t i = 0; i < ts.size(); ++i) acc(i, Omega * ts.time(i), ts[i][2]);
    return acc.take();
}

/// dk/dtau by central differences, with second-order one-sided three-point
/// formulas at both ends. Works on non-uniform tau.
inline std::vector<cplx> lhs_derivative(const EnvelopeSeries& env) {
    const std::size_t n = env.k.size();
    if (n < 3 || env.tau.size() != n) {
        throw TooFewPoints("difference derivative needs at least 3 envelope points");
    }
    const auto& t = env.tau;
    const auto& k = env.k;
    // derivative at t[j] of the parabola through points i0, i1, i2
    auto three_point = [&](std::size_t j, std::size_t i0, std::size_t i1, std::size_t i2) {
        const double x = t[j], a = t[i0], b = t[i1], c = t[i2];
        const double wa = (2 * x - b - c) / ((a - b) * (a - c));
        const double wb = (2 * x - a - c) / ((b - a) * (b - c));
        const double wc = (2 * x - a - b) / ((c - a) * (c - b));
        return wa * k[i0] + wb * k[i1] + wc * k[i2];
    };
    std::vector<cplx> out(n);
    out[0] = three_point(0, 0, 1, 2);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        out[i] = (k[i + 1] - k[i - 1]) / (t[i + 1] - t[i - 1]);
    }
    out[n - 1] = three_point(n - 1, n - 3, n - 2, n - 1);
    return out;
}

inline double averaging_prefactor(const NondimParams& np, double window_len,
                                  AveragingNormalization norm) {
    const double c = np.delta / window_len;
    return norm == AveragingNormalization::solvability ? 0.5 * c : c;
}

namespace detail {

struct SampleWindow {
    std::size_t lo = 0;
    std::size_t hi = 0;  // inclusive
};

inline SampleWindow window_around(const TimeSeries<4>& ts, double center_theta,
                                  double window_len, double Omega) {
    const double h_theta = Omega * ts.grid.h;
    const double start = center_theta - 0.5 * window_len - Omega * ts.grid.t0;
    const double lo = std::round(start / h_theta);
    const double len = std::round(window_len / h_theta);
    if (lo < 0.0 || len < 1.0 || lo + len > static_cast<double>(ts.grid.n_steps)) {
        throw WindowOutOfRange("averaging window centred at theta = " +
                               std::to_string(center_theta) + " does not fit the trajectory");
    }
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(lo + len)};
}

// trapezoid of x^2 e^{-i theta} over samples [lo, hi]
inline cplx windowed_x2_moment(const TimeSeries<4>& ts, SampleWindow w, double Omega) {
    cplx acc = 0.0;
    for (std::size_t i = w.lo; i <= w.hi; ++i) {
        const double x = ts[i][0];
        const double weight = (i == w.lo || i == w.hi) ? 0.5 : 1.0;
        acc += weight * x * x * std::polar(1.0, -Omega * ts.time(i));
    }
    return acc * (Omega * ts.grid.h);
}

}  // namespace detail

/// S_r = -(i c) int x^2 e^{-i theta} dtheta over the window of length
/// `window_len` (theta units) centred at `center_theta`; x from the full
/// simulation stands in for x0.
inline cplx rhs_average(const TimeSeries<4>& ts, const NondimParams& np, double center_theta,
                        double window_len, double Omega = 1.0,
                        AveragingNormalization norm = AveragingNormalization::solvability) {
    const auto w = detail::window_around(ts, center_theta, window_len, Omega);
    const double c = averaging_prefactor(np, window_len, norm);
    return cplx(0.0, -c) * detail::windowed_x2_moment(ts, w, Omega);
}

/// The same average evaluated as the real pair
///   dk1/dtau = -c int x^2 sin theta,   dk2/dtau = -c int x^2 cos theta.
/// Written out in physical time the prefactor reads Omega delta / T_t, which is
/// the same number once T_t = T / Omega. The real pair as usually printed
/// carries +c on the k2 row; that is the conjugate envelope convention
/// k -> conj(k), not a different equation.
inline std::pair<double, double> rhs_average_real(
    const TimeSeries<4>& ts, const NondimParams& np, double center_theta, double window_len,
    double Omega = 1.0, AveragingNormalization norm = AveragingNormalization::solvability) {
    const auto w = detail::window_around(ts, center_theta, window_len, Omega);
    double s = 0.0, c = 0.0;
    for (std::size_t i = w.lo; i <= w.hi; ++i) {
        const double x = ts[i][0];
        const double weight = (i == w.lo || i == w.hi) ? 0.5 : 1.0;
        const double theta = Omega * ts.time(i);
        s += weight * x * x * std::sin(theta);
        c += weight * x * x * std::cos(theta);
    }
    const double h_theta = Omega * ts.grid.h;
    const double pre = averaging_prefactor(np, window_len, norm);
    return {-pre * s * h_theta, -pre * c * h_theta};
}

/// Entries with |S_l| below this fraction of max |S_l| are reported missing.
inline constexpr double kRelativeErrorFloor = 1e-8;

/// Pairs the difference derivative of the extracted envelope with the
/// windowed average at every window centre where the averaging window fits.
inline ResidualReport residual_report(const TimeSeries<4>& ts, const NondimParams& np,
                                      double Omega = 1.0,
                                      AveragingNormalization norm =
                                          AveragingNormalization::solvability,
                                      std::optional<double> window_len = std::nullopt) {
    const EnvelopeSeries env = extract_envelope(ts, np, Omega);
    if (env.k.size() < 5) {
        throw TooFewPoints("residual report needs at least 5 envelope windows, got " +
                           std::to_string(env.k.size()));
    }
    const std::vector<cplx> lhs = lhs_derivative(env);
    const double T = window_len.value_or(default_window_length(np));
    const double eps2 = np.varepsilon * np.varepsilon;

    ResidualReport rep;
    for (std::size_t i = 0; i < env.k.size(); ++i) {
        const double center = env.tau[i] / eps2;
        cplx rhs;
        try {
            rhs = rhs_average(ts, np, center, T, Omega, norm);
        } catch (const WindowOutOfRange&) {
            continue;
        }
        rep.tau.push_back(env.tau[i]);
        rep.lhs.push_back(lhs[i]);
        rep.rhs.push_back(rhs);
    }
    if (rep.tau.empty()) {
        throw TooFewPoints("no averaging window of length " + std::to_string(T) +
                           " fits the trajectory");
    }
    double max_lhs = 0.0;
    for (const auto& v : rep.lhs) max_lhs = std::max(max_lhs, std::abs(v));
    const double floor = kRelativeErrorFloor * max_lhs;
    rep.rel_error.reserve(rep.lhs.size());
    for (std::size_t i = 0; i < rep.lhs.size(); ++i) {
        const double mag = std::abs(rep.lhs[i]);
        if (mag == 0.0 || mag < floor) {
            rep.rel_error.push_back(std::nullopt);
        } else {
            rep.rel_error.push_back(std::abs(rep.lhs[i] - rep.rhs[i]) / mag);
        }
    }
    return rep;
}

/// Synthetic trajectory that satisfies the solvability condition exactly:
///   x = a cos(theta/2 + nu tau)  gives  <x^2 e^{-i theta}> = (a^2/4) e^{2 i nu tau},
/// so dk/dtau = -(i delta a^2 / 8) e^{2 i nu tau} and
///   k(tau) = k0 - delta a^2 / (16 nu) (e^{2 i nu tau} - 1),
/// with eps y = k e^{i theta} + c.c. Sampled in theta (Omega = 1).
struct ManufacturedCase {
    double amplitude = 1.0;   // a
    double phase_rate = 0.005; // nu, per unit tau
    cplx k0{1.0, 0.0};

    cplx k(double tau, const NondimParams& np) const {
        const double a2 = amplitude * amplitude;
        return k0 - np.delta * a2 / (16.0 * phase_rate) *
                        (std::polar(1.0, 2.0 * phase_rate * tau) - 1.0);
    }

    cplx dk(double tau, const NondimParams& np) const {
        return cplx(0.0, -np.delta * amplitude * amplitude / 8.0) *
               std::polar(1.0, 2.0 * phase_rate * tau);
    }
};

inline TimeSeries<4> manufactured_trajectory(const NondimParams& np, double theta_end,
                                             std::size_t samples_per_2pi,
                                             const ManufacturedCase& mc = {}) {
    const double h = 2.0 * std::numbers::pi / static_cast<double>(samples_per_2pi);
    TimeSeries<4> ts;
    ts.grid = IntegrationGrid::from_steps(0.0, h, static_cast<std::size_t>(std::round(theta_end / h)));
    ts.states.reserve(ts.grid.n_steps + 1);
    const double eps2 = np.varepsilon * np.varepsilon;
    for (std::size_t i = 0; i <= ts.grid.n_steps; ++i) {
        const double theta = ts.grid.time(i);
        const double tau = eps2 * theta;
        const double phase = 0.5 * theta + mc.phase_rate * tau;
        const cplx carrier = std::polar(1.0, theta);
        const cplx k = mc.k(tau, np);
        ts.states.push_back({mc.amplitude * std::cos(phase),
                             -mc.amplitude * (0.5 + mc.phase_rate * eps2) * std::sin(phase),
                             2.0 * (k * carrier).real() / np.varepsilon,
                             -2.0 * (k * carrier).imag() / np.varepsilon});
    }
    return ts;
}

/// Median of the defined rel_error entries whose index lies in
/// [from * n, to * n). nullopt when none is defined there.
inline std::optional<double> median_rel_error(const ResidualReport& rep, double from = 0.25,
                                              double to = 0.75) {
    const auto n = static_cast<double>(rep.rel_error.size());
    std::vector<double> vals;
    for (std::size_t i = 0; i < rep.rel_error.size(); ++i) {
        const double pos = static_cast<double>(i);
        if (pos < from * n || pos >= to * n || !rep.rel_error[i]) continue;
        vals.push_back(*rep.rel_error[i]);
    }
    if (vals.empty()) return std::nullopt;
    const auto mid = vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2);
    std::nth_element(vals.begin(), mid, vals.end());
    if (vals.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(vals.begin(), mid);
    return 0.5 * (lower + upper);
}

}  // namespace resonant
