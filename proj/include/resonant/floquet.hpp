#pragma once

// Floquet analysis of the Mathieu equation
//
//   u'' + (Q - 2 R cos 2s) u = 0,
//
// with the exponent convention u(s + 2 pi) = exp(2 pi lambda) u(s), and of the
// damped inhomogeneous form
//
//   x'' + 4 mu x' + (q - 2 r cos 2s) x = 4 f cos(s - a/2).
//
// The substitution x = u exp(-2 mu s) maps the homogeneous damped equation
// onto the Mathieu equation with Q = q - 4 mu^2 and R = r.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "resonant/errors.hpp"
#include "resonant/integrators.hpp"
#include "resonant/parallel.hpp"

namespace resonant {

#if defined(__SIZEOF_FLOAT128__)
using wide_float = __float128;
#else
using wide_float = long double;
#endif

struct Matrix2 {
    double a = 1.0, b = 0.0;  // | a b |
    double c = 0.0, d = 1.0;  // | c d |

    double trace() const noexcept { return a + d; }
    double det() const noexcept { return a * d - b * c; }
};

struct FloquetResult {
    Matrix2 monodromy;         // over s in [0, 2 pi]
    double determinant = 1.0;  // evaluated in wide precision before rounding
    double trace = 2.0;
    std::complex<double> rho1, rho2;        // multiplicators
    std::complex<double> lambda1, lambda2;  // log(rho) / (2 pi), Re lambda1 >= Re lambda2
    double re_lambda1 = 0.0;

    bool stable() const noexcept { return std::abs(trace) <= 2.0; }
};

/// Steps per 2 pi used when none is given: resolves Q up to ~49 with more than
/// 280 steps per oscillation.
inline constexpr std::size_t kMonodromySteps = 2000;

namespace detail {

// exp of the traceless matrix [[p, q], [r, -p]]. Its square is (p^2 + q r) I,
// so the exponential is cosh/cos-type in closed form and has determinant 1.
inline Matrix2 expm_traceless(double p, double q, double r) {
    const double d = p * p + q * r;
    double ch, sh;  // cosh(sqrt d), sinh(sqrt d) / sqrt d  (or cos/sin for d < 0)
    if (std::abs(d) < 1e-12) {
        ch = 1.0 + d / 2.0;
        sh = 1.0 + d / 6.0;
    } else if (d > 0.0) {
        const double s = std::sqrt(d);
        ch = std::cosh(s);
        sh = std::sinh(s) / s;
    } else {
        const double s = std::sqrt(-d);
        ch = std::cos(s);
        sh = std::sin(s) / s;
    }
    return {ch + sh * p, sh * q, sh * r, ch - sh * p};
}

inline double mathieu_coefficient(double Q, double R, double s) {
    return Q - 2.0 * R * std::cos(2.0 * s);
}

/// One 4th-order Magnus step of y' = [[0, 1], [-w(s), 0]] y over [s, s + h]
/// using the two Gauss-Legendre nodes. The step map is an exact matrix
/// exponential of a traceless generator, so it preserves the Wronskian.
inline Matrix2 magnus_step(double Q, double R, double s, double h) {
    static const double g = std::sqrt(3.0) / 6.0;
    const double w1 = mathieu_coefficient(Q, R, s + (0.5 - g) * h);
    const double w2 = mathieu_coefficient(Q, R, s + (0.5 + g) * h);
    const double p = std::sqrt(3.0) / 12.0 * h * h * (w2 - w1);
    return expm_traceless(p, h, -0.5 * h * (w1 + w2));
}

}  // namespace detail

/// Multiplicators and exponents of a monodromy matrix with unit determinant
/// (Liouville). |trace| <= 2 gives a unimodular pair and Re lambda1 = 0 exactly.
inline void assign_exponents(FloquetResult& out) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double t = out.trace;
    if (std::abs(t) <= 2.0) {
        const double phi = std::acos(t / 2.0);
        out.rho1 = std::polar(1.0, phi);
        out.rho2 = std::polar(1.0, -phi);
        out.lambda1 = {0.0, phi / two_pi};
        out.lambda2 = {0.0, -phi / two_pi};
        out.re_lambda1 = 0.0;
    } else {
        const double half = std::abs(t) / 2.0;
        const double big = half + std::sqrt((half - 1.0) * (half + 1.0));
        const double sign = t > 0.0 ? 1.0 : -1.0;
        out.rho1 = sign * big;
        out.rho2 = sign / big;
        const double arg = t > 0.0 ? 0.0 : std::numbers::pi;
        out.lambda1 = {std::log(big) / two_pi, arg / two_pi};
        out.lambda2 = {-std::log(big) / two_pi, arg / two_pi};
        out.re_lambda1 = std::acosh(half) / two_pi;
    }
}

/// R = 0 has constant coefficients and a closed-form monodromy. Integrating
/// it instead would leave |trace| a few ulps above 2 at Q = n^2 and report
/// spurious growth on the neutral line.
inline FloquetResult constant_monodromy(double Q) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    FloquetResult out;
    if (Q > 0.0) {
        const double w = std::sqrt(Q);
        const double c = std::cos(two_pi * w), s = std::sin(two_pi * w);
        out.monodromy = {c, s / w, -w * s, c};
    } else if (Q < 0.0) {
        const double w = std::sqrt(-Q);
        const double c = std::cosh(two_pi * w), s = std::sinh(two_pi * w);
        out.monodromy = {c, s / w, w * s, c};
    } else {
        out.monodromy = {1.0, two_pi, 0.0, 1.0};
    }
    const auto& M = out.monodromy;
    out.determinant = static_cast<double>(static_cast<wide_float>(M.a) * M.d -
                                          static_cast<wide_float>(M.b) * M.c);
    out.trace = M.a + M.d;
    if (!std::isfinite(out.trace) || !std::isfinite(M.b) || !std::isfinite(M.c)) {
        throw NonFiniteState("monodromy overflowed for Q = " + std::to_string(Q));
    }
    assign_exponents(out);
    return out;
}

/// Monodromy matrix of the Mathieu equation over s in [0, 2 pi].
///
/// The fundamental matrix is propagated with 4th-order Magnus steps and
/// accumulated in wide precision: in the unstable tongues entries reach 1e9
/// and a double-precision product could not resolve det = 1. `steps` must be
/// a multiple of 4 so that R -> -R (a quarter-period shift) maps the step
/// sequence onto itself.
inline FloquetResult monodromy(double Q, double R, std::size_t steps = kMonodromySteps) {
    if (!std::isfinite(Q) || !std::isfinite(R)) {
        throw InvalidParameter("Mathieu parameters must be finite");
    }
    if (steps == 0 || steps % 4 != 0) {
        throw InvalidParameter("monodromy steps must be a positive multiple of 4");
    }
    if (R == 0.0) return constant_monodromy(Q);
    const double h = 2.0 * std::numbers::pi / static_cast<double>(steps);
    wide_float m00 = 1, m01 = 0, m10 = 0, m11 = 1;
    for (std::size_t k = 0; k < steps; ++k) {
        const Matrix2 e = detail::magnus_step(Q, R, static_cast<double>(k) * h, h);
        const wide_float n00 = e.a * m00 + e.b * m10;
        const wide_float n01 = e.a * m01 + e.b * m11;
        const wide_float n10 = e.c * m00 + e.d * m10;
        const wide_float n11 = e.c * m01 + e.d * m11;
        m00 = n00;
        m01 = n01;
        m10 = n10;
        m11 = n11;
    }
    FloquetResult out;
    out.monodromy = {static_cast<double>(m00), static_cast<double>(m01),
                     static_cast<double>(m10), static_cast<double>(m11)};
    out.determinant = static_cast<double>(m00 * m11 - m01 * m10);
    out.trace = static_cast<double>(m00 + m11);
    const auto& M = out.monodromy;
    if (!std::isfinite(M.a) || !std::isfinite(M.b) || !std::isfinite(M.c) ||
        !std::isfinite(M.d) || !std::isfinite(out.determinant)) {
        throw NonFiniteState("monodromy overflowed for Q = " + std::to_string(Q) +
                             ", R = " + std::to_string(R));
    }
    assign_exponents(out);
    return out;
}

inline double re_lambda1(double Q, double R) { return monodromy(Q, R).re_lambda1; }

// ---------------------------------------------------------------------------

/// Parameters of the damped inhomogeneous Mathieu equation.
struct MathieuParams {
    double q = 36.0;  // 4 lambda^2
    double r = 0.0;   // 2 |k|
    double Q = 36.0;  // q - 4 mu^2
    double R = 0.0;   // |r|; the sign of R is a half-period shift in s
    double mu = 0.0;
    double a = 0.0;   // arg k
    double f = 0.0;

    static MathieuParams make(double q, double r, double mu, double a = 0.0,
                              double f = 0.0) {
        return {q, r, q - 4.0 * mu * mu, std::abs(r), mu, a, f};
    }

    /// From the slow envelope k: q = 4 lambda^2, r = 2 |k|, a = arg k.
    static MathieuParams from_envelope(double lambda, std::complex<double> k, double mu,
                                       double f) {
        return make(4.0 * lambda * lambda, 2.0 * std::abs(k), mu, std::arg(k), f);
    }
};

/// Damping shift produced by x = u exp(-2 mu s).
inline double damping_shift(double q, double mu) { return q - 4.0 * mu * mu; }

/// exp(2 pi (Re lambda1(q - 4 mu^2, r) - 2 mu)): growth factor per 2 pi of
/// the damped homogeneous solution. Below 1 the solution decays.
inline double damped_multiplicator(double q, double r, double mu) {
    const double rl = re_lambda1(damping_shift(q, mu), std::abs(r));
    return std::exp(2.0 * std::numbers::pi * (rl - 2.0 * mu));
}

struct SurfaceCell {
    double Q = 0.0;
    double R = 0.0;
    double re_lambda1 = 0.0;
    double trace = 0.0;
    double determinant = 1.0;
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Lattice lo, lo + step, ..., hi (count = round((hi - lo)/step) + 1).
inline std::vector<double> lattice(Range r, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw InvalidParameter("grid step must be positive");
    if (!(r.hi >= r.lo)) throw InvalidParameter("grid range must satisfy lo <= hi");
    const auto n = static_cast<std::size_t>(std::llround((r.hi - r.lo) / step)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = r.lo + step * static_cast<double>(i);
    return out;
}

struct StabilitySurface {
    std::vector<double> Q;
    std::vector<double> R;
    std::vector<SurfaceCell> cells;  // row-major: Q outer, R inner

    const SurfaceCell& at(std::size_t iq, std::size_t ir) const {
        return cells[iq * R.size() + ir];
    }
};

/// Re lambda1 on the (Q, R) lattice. Cells are independent and are fanned out
/// over `threads` workers (0 = all cores).
inline StabilitySurface stability_surface(Range Q_range, Range R_range, double grid_step,
                                          unsigned threads = 0,
                                          std::size_t steps = kMonodromySteps) {
    StabilitySurface s;
    s.Q = lattice(Q_range, grid_step);
    s.R = lattice(R_range, grid_step);
    s.cells.resize(s.Q.size() * s.R.size());
    parallel_for(
        s.cells.size(),
        [&](std::size_t idx) {
            const double Q = s.Q[idx / s.R.size()];
            const double R = s.R[idx % s.R.size()];
            const FloquetResult fr = monodromy(Q, R, steps);
            s.cells[idx] = {Q, R, fr.re_lambda1, fr.trace, fr.determinant};
        },
        threads);
    return s;
}

struct SectionPoint {
    double R = 0.0;
    double re_lambda1 = 0.0;
};

/// Re lambda1(Q, R) along R at fixed Q.
inline std::vector<SectionPoint> stability_section(double Q, Range R_range, double grid_step,
                                                   unsigned threads = 0) {
    const std::vector<double> Rs = lattice(R_range, grid_step);
    std::vector<SectionPoint> out(Rs.size());
    parallel_for(
        Rs.size(), [&](std::size_t i) { out[i] = {Rs[i], re_lambda1(Q, Rs[i])}; }, threads);
    return out;
}

/// R values where Re lambda1 crosses the dissipation level 2 mu, linearly
/// interpolated between section samples.
inline std::vector<double> dissipation_crossings(const std::vector<SectionPoint>& section,
                                                 double mu) {
    std::vector<double> out;
    const double level = 2.0 * mu;
    for (std::size_t i = 1; i < section.size(); ++i) {
        const double g0 = section[i - 1].re_lambda1 - level;
        const double g1 = section[i].re_lambda1 - level;
        if ((g0 < 0.0) != (g1 < 0.0)) {
            const double w = g0 / (g0 - g1);
            out.push_back(section[i - 1].R + w * (section[i].R - section[i - 1].R));
        }
    }
    return out;
}

/// Bisection for Re lambda1(Q, R) = level on [R_lo, R_hi]; the bracket must
/// straddle the level.
inline double solve_exponent_level(double Q, double level, double R_lo, double R_hi,
                                   double tol = 1e-12) {
    double g_lo = re_lambda1(Q, R_lo) - level;
    const double g_hi = re_lambda1(Q, R_hi) - level;
    if ((g_lo < 0.0) == (g_hi < 0.0)) {
        throw InvalidParameter("exponent level is not bracketed");
    }
    while (R_hi - R_lo > tol) {
        const double mid = 0.5 * (R_lo + R_hi);
        const double g = re_lambda1(Q, mid) - level;
        if ((g < 0.0) == (g_lo < 0.0)) {
            R_lo = mid;
            g_lo = g;
        } else {
            R_hi = mid;
        }
    }
    return 0.5 * (R_lo + R_hi);
}

/// Lambda(tau_j) = int_0^{tau_j} (Re lambda1(q - 4 mu^2, r(tau')) - 2 mu) dtau'
/// by the cumulative trapezoid rule on the samples (tau_j, r_j).
inline std::vector<double> integral_index(const std::vector<double>& tau,
                                          const std::vector<double>& r, double q, double mu,
                                          unsigned threads = 0) {
    if (tau.size() != r.size()) throw InvalidParameter("tau and r samples differ in length");
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!std::isfinite(r[i]) || !std::isfinite(tau[i])) {
            throw InvalidParameter("integral index samples must be finite");
        }
        if (i > 0 && !(tau[i] > tau[i - 1])) {
            throw InvalidParameter("tau samples must be strictly increasing");
        }
    }
    const double Q = damping_shift(q, mu);
    std::vector<double> g(r.size());
    parallel_for(
        r.size(),
        [&](std::size_t i) { g[i] = re_lambda1(Q, std::abs(r[i])) - 2.0 * mu; }, threads);
    std::vector<double> out(r.size(), 0.0);
    for (std::size_t i = 1; i < r.size(); ++i) {
        out[i] = out[i - 1] + 0.5 * (tau[i] - tau[i - 1]) * (g[i] + g[i - 1]);
    }
    return out;
}

/// x'' + 4 mu x' + (q - 2 r cos 2s) x = 4 f cos(s - a/2), state (x, x').
struct DampedMathieuField {
    MathieuParams mp;

    State<2> operator()(double s, const State<2>& y) const {
        return {y[1], -4.0 * mp.mu * y[1] - detail::mathieu_coefficient(mp.q, mp.r, s) * y[0] +
                          4.0 * mp.f * std::cos(s - 0.5 * mp.a)};
    }
};

/// Particular solution with zero initial data on s in [0, s_end] (RK4).
inline TimeSeries<2> particular_solution(const MathieuParams& mp, double s_end, double h) {
    return rk4_integrate(DampedMathieuField{mp}, State<2>{0.0, 0.0},
                         IntegrationGrid::uniform(0.0, s_end, h));
}

}  // namespace resonant
