#pragma once

// Large frequency ratio (lambda >> 1) reduction of the envelope dynamics:
// the asymptotic particular solution x0, the planar Hamiltonian H(K1, K2)
// with its canonical flow dK1/dtau' = dH/dK2, dK2/dtau' = -dH/dK1 in the
// rescaled envelope K = k / lambda^2 and slow time tau' = lambda^-8 tau,
// equilibria, amplitude roots of a level set, and the period of a closed
// level set computed two independent ways.
//
// The orbit and period machinery is generic over any PlanarHamiltonian so that
// it can be exercised on Hamiltonians with known periods.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "resonant/errors.hpp"
#include "resonant/integrators.hpp"
#include "resonant/oscillator.hpp"

namespace resonant {

using Vec2 = std::array<double, 2>;

// ---------------------------------------------------------------------------
// Asymptotic particular solution

/// Sign of a/2 in the phase of the asymptotic solution. `forcing` matches the
/// phase of the right-hand side 4 f cos(s - a/2) of the damped Mathieu
/// equation and is what the equation admits; `printed` uses cos(s + a/2).
enum class PhaseConvention { forcing, printed };

/// x0 ~ lambda^-2 * 2 f cos(s -+ a/2) / (2 - lambda^-2 r cos 2s), error O(lambda^-4).
inline double x0_asymptotic(double s, double r, double a, const NondimParams& np,
                            PhaseConvention phase = PhaseConvention::forcing) {
    const double inv_l2 = 1.0 / (np.lambda * np.lambda);
    if (2.0 - std::abs(inv_l2 * r) < 0.1) {
        throw DenominatorNearZero("2 - r / lambda^2 cos 2s comes within 0.1 of zero (r = " +
                                  std::to_string(r) + ")");
    }
    const double half_a = phase == PhaseConvention::forcing ? -0.5 * a : 0.5 * a;
    return inv_l2 * 2.0 * np.f * std::cos(s + half_a) / (2.0 - inv_l2 * r * std::cos(2.0 * s));
}

// ---------------------------------------------------------------------------
// Hamiltonians

template <class H>
concept PlanarHamiltonian = requires(const H& h, double x, double y) {
    { h.value(x, y) } -> std::convertible_to<double>;
    { h.gradient(x, y) } -> std::convertible_to<Vec2>;
};

template <PlanarHamiltonian H>
bool in_domain(const H& h, double x, double y) {
    if constexpr (requires { { h.in_domain(x, y) } -> std::convertible_to<bool>; }) {
        return h.in_domain(x, y);
    } else {
        return std::isfinite(x) && std::isfinite(y);
    }
}

/// |K|^2 above this is rejected by the flow.
inline constexpr double kDomainGuard = 1.0 - 1e-9;

/// H(K1, K2) = A^2 / (2 pi Omega^3) * (|K|^2 - K1) /
///             (K1 (1 - |K|^2) - (|K|^2 - K1) sqrt(1 - |K|^2))
struct PulsationHamiltonian {
    double A = 1.0;
    double Omega = 1.0;

    double prefactor() const { return A * A / (2.0 * std::numbers::pi * Omega * Omega * Omega); }

    bool in_domain(double K1, double K2) const {
        return std::isfinite(K1) && std::isfinite(K2) && K1 * K1 + K2 * K2 < kDomainGuard;
    }

    double value(double K1, double K2) const {
        const Parts p = parts(K1, K2);
        return prefactor() * p.N / p.D;
    }

    /// Quotient rule on N / D with
    ///   dN = (2 K1 - 1, 2 K2),
    ///   dD = ((1 - m) - 2 K1^2 - (2 K1 - 1) S + N K1 / S,  -2 K1 K2 - 2 K2 S + N K2 / S),
    /// m = |K|^2, S = sqrt(1 - m).
    Vec2 gradient(double K1, double K2) const {
        const Parts p = parts(K1, K2);
        const double N1 = 2.0 * K1 - 1.0;
        const double N2 = 2.0 * K2;
        const double D1 = (1.0 - p.m) - 2.0 * K1 * K1 - N1 * p.S + p.N * K1 / p.S;
        const double D2 = -2.0 * K1 * K2 - 2.0 * K2 * p.S + p.N * K2 / p.S;
        const double c = prefactor() / (p.D * p.D);
        return {c * (N1 * p.D - p.N * D1), c * (N2 * p.D - p.N * D2)};
    }

private:
    struct Parts {
        double m, S, N, D;
    };

    static Parts parts(double K1, double K2) {
        const double m = K1 * K1 + K2 * K2;
        if (!(m < 1.0)) {
            throw DomainError("|K|^2 = " + std::to_string(m) + " is outside the unit disk");
        }
        const double S = std::sqrt(1.0 - m);
        const double N = m - K1;
        const double D = K1 * (1.0 - m) - N * S;
        if (std::abs(D) < 1e-12) {
            throw SingularDenominator("Hamiltonian denominator vanishes at K = (" +
                                      std::to_string(K1) + ", " + std::to_string(K2) + ")");
        }
        return {m, S, N, D};
    }
};

inline double hamiltonian(double K1, double K2, double A, double Omega) {
    return PulsationHamiltonian{A, Omega}.value(K1, K2);
}

inline Vec2 hamiltonian_gradient(double K1, double K2, double A, double Omega) {
    return PulsationHamiltonian{A, Omega}.gradient(K1, K2);
}

/// Canonical vector field (dH/dK2, -dH/dK1).
template <PlanarHamiltonian H>
struct HamiltonianField {
    const H* ham;

    State<2> operator()(double, const State<2>& K) const {
        if (!in_domain(*ham, K[0], K[1])) {
            throw LeftDomain("flow left the domain at K = (" + std::to_string(K[0]) + ", " +
                             std::to_string(K[1]) + ")");
        }
        const Vec2 g = ham->gradient(K[0], K[1]);
        return {g[1], -g[0]};
    }
};

template <PlanarHamiltonian H>
Vec2 hamiltonian_velocity(const H& ham, Vec2 K) {
    const Vec2 g = ham.gradient(K[0], K[1]);
    return {g[1], -g[0]};
}

/// Central-difference Hessian of H from its analytic gradient, symmetrised.
template <PlanarHamiltonian H>
std::array<double, 4> hessian(const H& ham, Vec2 p, double step = 1e-5) {
    const Vec2 gxp = ham.gradient(p[0] + step, p[1]);
    const Vec2 gxm = ham.gradient(p[0] - step, p[1]);
    const Vec2 gyp = ham.gradient(p[0], p[1] + step);
    const Vec2 gym = ham.gradient(p[0], p[1] - step);
    const double hxx = (gxp[0] - gxm[0]) / (2 * step);
    const double hyy = (gyp[1] - gym[1]) / (2 * step);
    const double hxy = 0.5 * ((gxp[1] - gxm[1]) + (gyp[0] - gym[0])) / (2 * step);
    return {hxx, hxy, hxy, hyy};
}

enum class EquilibriumKind { centre, saddle, degenerate };

inline const char* to_string(EquilibriumKind k) {
    switch (k) {
        case EquilibriumKind::centre: return "centre";
        case EquilibriumKind::saddle: return "saddle";
        default: return "degenerate";
    }
}

struct Equilibrium {
    Vec2 point{};
    double gradient_norm = 0.0;
    std::array<double, 4> hessian{};
    EquilibriumKind kind = EquilibriumKind::degenerate;
    int iterations = 0;

    double hessian_det() const { return hessian[0] * hessian[3] - hessian[1] * hessian[2]; }

    /// 2 pi / sqrt(det Hess) for a centre.
    std::optional<double> linearized_period() const {
        if (kind != EquilibriumKind::centre) return std::nullopt;
        return 2.0 * std::numbers::pi / std::sqrt(hessian_det());
    }
};

template <PlanarHamiltonian H>
Equilibrium classify_equilibrium(const H& ham, Vec2 p) {
    Equilibrium e;
    e.point = p;
    const Vec2 g = ham.gradient(p[0], p[1]);
    e.gradient_norm = std::hypot(g[0], g[1]);
    e.hessian = hessian(ham, p);
    const double det = e.hessian_det();
    const double scale = std::abs(e.hessian[0]) + std::abs(e.hessian[3]) + std::abs(e.hessian[1]);
    if (det > 1e-12 * scale * scale) {
        e.kind = EquilibriumKind::centre;
    } else if (det < -1e-12 * scale * scale) {
        e.kind = EquilibriumKind::saddle;
    }
    return e;
}

/// Newton iteration on grad H = 0 from `seed`, then classification by the
/// sign of det Hess (positive: centre, negative: saddle).
template <PlanarHamiltonian H>
Equilibrium locate_equilibrium(const H& ham, Vec2 seed, double tol = 1e-13,
                               int max_iter = 60) {
    Vec2 p = seed;
    int it = 0;
    for (; it < max_iter; ++it) {
        const Vec2 g = ham.gradient(p[0], p[1]);
        if (std::hypot(g[0], g[1]) < tol) break;
        const auto hs = hessian(ham, p);
        const double det = hs[0] * hs[3] - hs[1] * hs[2];
        if (det == 0.0) break;
        const double dx = (hs[3] * g[0] - hs[1] * g[1]) / det;
        const double dy = (-hs[2] * g[0] + hs[0] * g[1]) / det;
        p = {p[0] - dx, p[1] - dy};
        if (std::hypot(dx, dy) < 1e-16) break;
    }
    Equilibrium e = classify_equilibrium(ham, p);
    e.iterations = it;
    return e;
}

// ---------------------------------------------------------------------------
// Flow

struct FlowResult {
    TimeSeries<2> ts;
    std::vector<double> H;          // H along the samples
    double max_rel_drift = 0.0;     // max |H - H(0)| / |H(0)|
    bool left_domain = false;       // only with stop_at_boundary
};

/// RK4 trajectory of the canonical equations with H monitoring. Leaving the
/// domain raises LeftDomain unless `stop_at_boundary`, in which case the
/// trajectory is truncated at the last interior sample.
template <PlanarHamiltonian H>
FlowResult envelope_flow(const H& ham, Vec2 init, double tau_end, double h,
                         bool stop_at_boundary = false) {
    if (!in_domain(ham, init[0], init[1])) {
        throw LeftDomain("initial envelope state is outside the domain");
    }
    const HamiltonianField<H> field{&ham};
    const auto grid = IntegrationGrid::uniform(0.0, tau_end, h);
    FlowResult out;
    out.ts.grid = grid;
    const double H0 = ham.value(init[0], init[1]);
    const double denom = H0 != 0.0 ? std::abs(H0) : 1.0;
    State<2> y{init[0], init[1]};
    out.ts.states.push_back(y);
    out.H.push_back(H0);
    try {
        for (std::size_t i = 0; i < grid.n_steps; ++i) {
            State<2> next;
            try {
                next = rk4_step(field, grid.time(i), y, grid.h);
            } catch (const DomainError& e) {
                throw LeftDomain(e.what());
            }
            detail::check_state(next, grid.time(i + 1), i + 1);
            if (!in_domain(ham, next[0], next[1])) {
                throw LeftDomain("flow left the domain at tau' = " +
                                 std::to_string(grid.time(i + 1)));
            }
            const double Hn = ham.value(next[0], next[1]);
            out.max_rel_drift = std::max(out.max_rel_drift, std::abs(Hn - H0) / denom);
            out.ts.states.push_back(next);
            out.H.push_back(Hn);
            y = next;
        }
    } catch (const Error& e) {
        const bool boundary = e.kind() == "LeftDomain" || e.kind() == "SingularDenominator" ||
                              e.kind() == "NonFiniteState";
        if (!stop_at_boundary || !boundary) throw;
        out.left_domain = true;
        out.ts.grid.n_steps = out.ts.states.size() - 1;
        out.ts.grid.t_end = out.ts.grid.time(out.ts.grid.n_steps);
    }
    return out;
}

/// Part of the disk where the printed H is smooth enough for a fixed-step
/// integrator: away from the unit circle (where sqrt(1 - |K|^2) has infinite
/// slope) and from K = 0 (where numerator and denominator both vanish).
struct RegularRegion {
    double max_norm2 = 0.98;
    double min_norm = 0.15;

    bool contains(const State<2>& K) const {
        const double m = K[0] * K[0] + K[1] * K[1];
        return m <= max_norm2 && std::sqrt(m) >= min_norm;
    }
};

struct ConservationSegment {
    double max_rel_drift = 0.0;
    double tau_prime_end = 0.0;  // end of the segment inside the region
    std::size_t samples = 0;
};

/// H drift over the leading part of a flow that stays inside `region`.
inline ConservationSegment conservation_in_region(const FlowResult& fr,
                                                  const RegularRegion& region = {}) {
    ConservationSegment seg;
    if (fr.H.empty()) return seg;
    const double H0 = fr.H.front();
    const double denom = H0 != 0.0 ? std::abs(H0) : 1.0;
    for (std::size_t i = 0; i < fr.H.size(); ++i) {
        if (!region.contains(fr.ts[i])) break;
        seg.max_rel_drift = std::max(seg.max_rel_drift, std::abs(fr.H[i] - H0) / denom);
        seg.tau_prime_end = fr.ts.time(i);
        seg.samples = i + 1;
    }
    return seg;
}

// ---------------------------------------------------------------------------
// Amplitude of a level set

struct AmplitudeRoots {
    double r_minus = 0.0;
    double r_plus = 0.0;

    double max_abs() const { return std::max(std::abs(r_minus), std::abs(r_plus)); }
};

inline double amplitude_radical(double H0, double A, double Omega) {
    const double O3 = Omega * Omega * Omega;
    const double pi = std::numbers::pi;
    return -std::pow(A, 4) + 4.0 * A * A * pi * O3 * H0 + 4.0 * pi * pi * O3 * O3 * H0 * H0;
}

/// r+- = ((A^2 - 2 pi Omega^3 H0) +- sqrt(radical)) / (4 pi Omega^3 H0).
inline AmplitudeRoots amplitude_roots(double H0, double A, double Omega) {
    if (H0 == 0.0) throw ZeroLevel("amplitude roots are undefined on the level H0 = 0");
    const double radical = amplitude_radical(H0, A, Omega);
    if (radical < 0.0) {
        throw InfeasibleLevel("amplitude radical is negative for H0 = " + std::to_string(H0));
    }
    const double O3 = Omega * Omega * Omega;
    const double pi = std::numbers::pi;
    const double b = A * A - 2.0 * pi * O3 * H0;
    const double den = 4.0 * pi * O3 * H0;
    const double sq = std::sqrt(radical);
    return {(b - sq) / den, (b + sq) / den};
}

/// max |y| ~ lambda^2 / varepsilon * max(|r-|, |r+|).
inline double max_envelope_estimate(const AmplitudeRoots& roots, const NondimParams& np) {
    return np.lambda * np.lambda / np.varepsilon * roots.max_abs();
}

// ---------------------------------------------------------------------------
// Period of a closed level set

/// Return time of the flow to the line through `start` normal to the velocity
/// there. The crossing inside the final step is located by secant iteration on
/// the RK4 sub-step length.
template <PlanarHamiltonian H>
double period_by_return(const H& ham, Vec2 start, double h, double max_time,
                        double* max_rel_drift = nullptr) {
    const HamiltonianField<H> field{&ham};
    const Vec2 v0 = hamiltonian_velocity(ham, start);
    if (std::hypot(v0[0], v0[1]) == 0.0) {
        throw NotClosedOrbit("start point is an equilibrium");
    }
    auto sigma = [&](const State<2>& p) {
        return v0[0] * (p[0] - start[0]) + v0[1] * (p[1] - start[1]);
    };
    const double H0 = ham.value(start[0], start[1]);
    const double denom = H0 != 0.0 ? std::abs(H0) : 1.0;
    double drift = 0.0;

    State<2> y{start[0], start[1]};
    double t = 0.0;
    double s_prev = 0.0;
    double max_dist = 0.0;
    const auto n_max = static_cast<std::size_t>(std::ceil(max_time / h));
    for (std::size_t i = 0; i < n_max; ++i) {
        State<2> next;
        try {
            next = rk4_step(field, t, y, h);
        } catch (const DomainError& e) {
            throw NotClosedOrbit(std::string("orbit leaves the domain: ") + e.what());
        } catch (const LeftDomain& e) {
            throw NotClosedOrbit(std::string("orbit leaves the domain: ") + e.what());
        }
        if (!in_domain(ham, next[0], next[1]) || !std::isfinite(next[0]) ||
            !std::isfinite(next[1])) {
            throw NotClosedOrbit("orbit leaves the domain at tau' = " + std::to_string(t + h));
        }
        drift = std::max(drift, std::abs(ham.value(next[0], next[1]) - H0) / denom);
        const double dist = std::hypot(next[0] - start[0], next[1] - start[1]);
        max_dist = std::max(max_dist, dist);
        const double s_next = sigma(next);
        if (s_prev < 0.0 && s_next >= 0.0 && dist < 0.5 * max_dist) {
            // secant on the sub-step length d in [0, h]
            double d0 = 0.0, f0 = s_prev, d1 = h, f1 = s_next;
            for (int k = 0; k < 60 && f1 != f0; ++k) {
                const double d2 = d1 - f1 * (d1 - d0) / (f1 - f0);
                d0 = d1;
                f0 = f1;
                d1 = std::clamp(d2, 0.0, h);
                f1 = sigma(rk4_step(field, t, y, d1));
                if (std::abs(d1 - d0) < 1e-15 * (1.0 + t)) break;
            }
            if (max_rel_drift) *max_rel_drift = drift;
            return t + d1;
        }
        s_prev = s_next;
        y = next;
        t += h;
    }
    throw NotClosedOrbit("flow did not return to its start within tau' = " +
                         std::to_string(max_time));
}

struct ContourOptions {
    std::size_t polar_samples = 2048;
    double band_half_width = 1e-3;  // in K1, around each turning point
    double max_radius = 1.0;        // search radius for the level set around the centre
    std::size_t radial_scan = 400;
    double quad_tol = 1e-11;
};

namespace detail {

template <PlanarHamiltonian H>
std::optional<double> safe_value(const H& ham, double x, double y) {
    if (!in_domain(ham, x, y)) return std::nullopt;
    try {
        const double v = ham.value(x, y);
        if (!std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const Error&) {
        return std::nullopt;
    }
}

// Radius of the level set H = H0 along the ray from `centre` at angle phi.
template <PlanarHamiltonian H>
double level_radius(const H& ham, Vec2 centre, double H0, double phi,
                    const ContourOptions& opt) {
    const double c = std::cos(phi), s = std::sin(phi);
    auto g = [&](double rho) -> std::optional<double> {
        const auto v = safe_value(ham, centre[0] + rho * c, centre[1] + rho * s);
        if (!v) return std::nullopt;
        return *v - H0;
    };
    const auto g0 = g(0.0);
    if (!g0 || *g0 == 0.0) throw NotClosedOrbit("level set passes through the centre");
    double lo = 0.0, g_lo = *g0;
    const double dr = opt.max_radius / static_cast<double>(opt.radial_scan);
    for (std::size_t k = 1; k <= opt.radial_scan; ++k) {
        const double hi = dr * static_cast<double>(k);
        const auto g_hi = g(hi);
        if (!g_hi) break;
        if ((*g_hi < 0.0) != (g_lo < 0.0) || *g_hi == 0.0) {
            std::uintmax_t iters = 200;
            auto fn = [&](double rho) { return *g(rho); };
            const auto root = boost::math::tools::toms748_solve(
                fn, lo, hi, g_lo, *g_hi,
                boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 2),
                iters);
            return 0.5 * (root.first + root.second);
        }
        lo = hi;
        g_lo = *g_hi;
    }
    throw NotClosedOrbit("level set H = " + std::to_string(H0) +
                         " is not closed around the centre along angle " + std::to_string(phi));
}

// Newton on H(x, y) = H0 along one coordinate (axis 0: solve for x at fixed y,
// axis 1: solve for y at fixed x) from `guess`.
template <PlanarHamiltonian H>
double solve_on_line(const H& ham, double H0, double fixed, double guess, int axis,
                     double max_move) {
    double v = guess;
    for (int it = 0; it < 60; ++it) {
        const double x = axis == 0 ? v : fixed;
        const double y = axis == 0 ? fixed : v;
        const double gval = ham.value(x, y) - H0;
        // H itself is only known to a few ulps; below that Newton just dithers
        if (std::abs(gval) <= 8.0 * std::numeric_limits<double>::epsilon() * std::abs(H0)) return v;
        const double slope = ham.gradient(x, y)[axis];
        if (slope == 0.0) break;
        const double step = gval / slope;
        v -= step;
        if (std::abs(v - guess) > max_move) break;
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(v))) return v;
    }
    throw TurningPointResolutionError("could not follow the level set along a coordinate line");
}

}  // namespace detail

/// Period of the closed level set H = H0 around `centre` as the line integral
/// of dK1 / (dH/dK2) over the cycle.
///
/// The cycle is located by radial root finding from the centre (the level set
/// must be star-shaped about it). It is split at its two turning points
/// (dH/dK2 = 0, the K1 extremes). Between them K1 parametrises each arc; in a
/// band of half-width `band_half_width` in K1 around each turning point, where
/// the K1 integrand is singular, the equivalent form dK2 / (-dH/dK1) is
/// integrated instead. Each piece is traversed along the flow, so all
/// contributions are positive.
template <PlanarHamiltonian H>
double period_by_contour(const H& ham, Vec2 centre, double H0, const ContourOptions& opt = {}) {
    const std::size_t M = opt.polar_samples;
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> phis(M);
    std::vector<Vec2> pts(M);
    for (std::size_t j = 0; j < M; ++j) {
        phis[j] = two_pi * static_cast<double>(j) / static_cast<double>(M);
        const double rho = detail::level_radius(ham, centre, H0, phis[j], opt);
        pts[j] = {centre[0] + rho * std::cos(phis[j]), centre[1] + rho * std::sin(phis[j])};
    }
    auto point_at = [&](double phi) {
        const double rho = detail::level_radius(ham, centre, H0, phi, opt);
        return Vec2{centre[0] + rho * std::cos(phi), centre[1] + rho * std::sin(phi)};
    };
    auto hk2 = [&](Vec2 p) { return ham.gradient(p[0], p[1])[1]; };

    // turning points: sign changes of dH/dK2 along the cycle
    std::vector<double> tp_phi;
    for (std::size_t j = 0; j < M; ++j) {
        const std::size_t k = (j + 1) % M;
        const double a = hk2(pts[j]), b = hk2(pts[k]);
        if ((a < 0.0) != (b < 0.0)) {
            double lo = phis[j], hi = (k == 0) ? two_pi : phis[k];
            double g_lo = a;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double gm = hk2(point_at(mid));
                if ((gm < 0.0) == (g_lo < 0.0)) {
                    lo = mid;
                    g_lo = gm;
                } else {
                    hi = mid;
                }
            }
            tp_phi.push_back(0.5 * (lo + hi));
        }
    }
    if (tp_phi.size() != 2) {
        throw TurningPointResolutionError("expected 2 turning points on the cycle, found " +
                                          std::to_string(tp_phi.size()));
    }
    const Vec2 tp_a = point_at(tp_phi[0]);
    const Vec2 tp_b = point_at(tp_phi[1]);
    const Vec2& tp_max = tp_a[0] > tp_b[0] ? tp_a : tp_b;
    const Vec2& tp_min = tp_a[0] > tp_b[0] ? tp_b : tp_a;
    const double extent = tp_max[0] - tp_min[0];
    const double w = std::min(opt.band_half_width, extent / 8.0);
    if (!(w > 0.0)) throw TurningPointResolutionError("degenerate cycle");

    // the two arcs as K1-sorted polylines (guesses for Newton)
    std::array<std::vector<Vec2>, 2> arcs;
    for (std::size_t j = 0; j < M; ++j) {
        const double phi = phis[j];
        const bool first = (phi > tp_phi[0] && phi < tp_phi[1]);
        arcs[first ? 0 : 1].push_back(pts[j]);
    }
    for (auto& arc : arcs) {
        arc.push_back(tp_max);
        arc.push_back(tp_min);
        std::sort(arc.begin(), arc.end(), [](const Vec2& p, const Vec2& q) { return p[0] < q[0]; });
    }
    const double spacing = two_pi * opt.max_radius / static_cast<double>(M);
    auto arc_k2 = [&](const std::vector<Vec2>& arc, double K1) {
        auto it = std::lower_bound(arc.begin(), arc.end(), K1,
                                   [](const Vec2& p, double v) { return p[0] < v; });
        if (it == arc.begin()) ++it;
        if (it == arc.end()) --it;
        const Vec2& q = *it;
        const Vec2& p = *(it - 1);
        const double guess = q[0] == p[0] ? p[1] : p[1] + (q[1] - p[1]) * (K1 - p[0]) / (q[0] - p[0]);
        return detail::solve_on_line(ham, H0, K1, guess, 1, std::max(10 * spacing, 0.25 * extent));
    };

    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double total = 0.0;
    for (const auto& arc : arcs) {
        auto integrand = [&](double K1) {
            const double K2 = arc_k2(arc, K1);
            return 1.0 / std::abs(ham.gradient(K1, K2)[1]);
        };
        total += GK::integrate(integrand, tp_min[0] + w, tp_max[0] - w, 20, opt.quad_tol);
    }
    for (const Vec2* tp : {&tp_max, &tp_min}) {
        const double side = (tp == &tp_max) ? -1.0 : 1.0;  // band lies at K1 = tp + side * [0, w]
        const double edge = (*tp)[0] + side * w;
        const double k2a = arc_k2(arcs[0], edge);
        const double k2b = arc_k2(arcs[1], edge);
        const double lo = std::min(k2a, k2b), hi = std::max(k2a, k2b);
        const double half = 0.5 * (hi - lo);
        const double mid_k2 = (*tp)[1];
        auto integrand = [&](double K2) {
            const double u = (K2 - mid_k2) / (K2 < mid_k2 ? (mid_k2 - lo) : (hi - mid_k2));
            const double guess = (*tp)[0] + side * w * u * u;
            const double K1 = detail::solve_on_line(ham, H0, K2, guess, 0, std::max(4 * w, 2 * half));
            return 1.0 / std::abs(ham.gradient(K1, K2)[0]);
        };
        total += GK::integrate(integrand, lo, hi, 20, opt.quad_tol);
    }
    return total;
}

/// A point on the level set H = H0 on the ray from `centre` at angle phi.
template <PlanarHamiltonian H>
Vec2 level_point(const H& ham, Vec2 centre, double H0, double phi = 0.0,
                 const ContourOptions& opt = {}) {
    const double rho = detail::level_radius(ham, centre, H0, phi, opt);
    return {centre[0] + rho * std::cos(phi), centre[1] + rho * std::sin(phi)};
}

struct PeriodComparison {
    double by_flow = 0.0;
    double by_contour = 0.0;
    double flow_rel_drift = 0.0;

    double rel_diff() const { return std::abs(by_flow - by_contour) / std::abs(by_contour); }
};

/// Both period computations for the level through `start` around `centre`.
template <PlanarHamiltonian H>
PeriodComparison compare_periods(const H& ham, Vec2 centre, Vec2 start, double h,
                                 double max_time, const ContourOptions& opt = {}) {
    PeriodComparison pc;
    pc.by_flow = period_by_return(ham, start, h, max_time, &pc.flow_rel_drift);
    pc.by_contour = period_by_contour(ham, centre, ham.value(start[0], start[1]), opt);
    return pc;
}

/// A period in tau' expressed in all four time variables:
/// tau = lambda^8 tau', theta = tau / varepsilon^2, t = theta / Omega.
struct PeriodInVariables {
    double tau_prime = 0.0;
    double tau = 0.0;
    double theta = 0.0;
    double t = 0.0;
};

inline PeriodInVariables period_in_variables(double tau_prime, const NondimParams& np,
                                             double Omega) {
    PeriodInVariables p;
    p.tau_prime = tau_prime;
    p.tau = std::pow(np.lambda, 8) * tau_prime;
    p.theta = p.tau / (np.varepsilon * np.varepsilon);
    p.t = p.theta / Omega;
    return p;
}

struct LevelSetSummary {
    double H0 = 0.0;
    bool feasible = false;
    AmplitudeRoots roots;
    Equilibrium equilibrium;
    std::optional<PeriodComparison> period;       // tau' units
    std::optional<PeriodInVariables> period_vars; // from the contour value
    std::string period_error;                     // why no period, if none
};

/// Amplitude roots and, when H0 labels a closed orbit around the equilibrium
/// found from `centre_seed`, the period computed both ways.
inline LevelSetSummary level_set_summary(double H0, const OscParams& p,
                                         Vec2 centre_seed = {1.0 / std::numbers::sqrt2, 0.0}) {
    const NondimParams np = nondimensionalize(p);
    const PulsationHamiltonian ham{p.A, p.Omega};
    LevelSetSummary s;
    s.H0 = H0;
    try {
        s.roots = amplitude_roots(H0, p.A, p.Omega);
        s.feasible = true;
    } catch (const Error&) {
        s.feasible = false;
    }
    s.equilibrium = locate_equilibrium(ham, centre_seed);
    const auto lin = s.equilibrium.linearized_period();
    if (!lin) {
        s.period_error = std::string("equilibrium at (") + std::to_string(s.equilibrium.point[0]) +
                         ", " + std::to_string(s.equilibrium.point[1]) + ") is a " +
                         to_string(s.equilibrium.kind) +
                         " (det Hess = " + std::to_string(s.equilibrium.hessian_det()) +
                         "); no closed orbits surround it";
        return s;
    }
    try {
        const Vec2 start = level_point(ham, s.equilibrium.point, H0);
        s.period = compare_periods(ham, s.equilibrium.point, start, *lin / 1000.0, 1000.0 * *lin);
        s.period_vars = period_in_variables(s.period->by_contour, np, p.Omega);
    } catch (const Error& e) {
        s.period_error = e.what();
    }
    return s;
}

// ---------------------------------------------------------------------------
// Initial data and reduction diagnostics

/// x(0) = f / lambda^2, x'(0) = 0, y(0) = -lambda^2 / (varepsilon sqrt 2), y'(0) = 0.
inline OscState stationary_initial_data(const NondimParams& np) {
    return {np.f / (np.lambda * np.lambda), 0.0,
            -np.lambda * np.lambda / (np.varepsilon * std::numbers::sqrt2), 0.0};
}

/// dK/dtau' obtained by brute-force averaging: x0 from x0_asymptotic at
/// r = 2 lambda^2 |K|, a = arg K, s = (theta + a) / 2, then
/// dk/dtau = -(i delta / 2) <x0^2 e^{-i theta}>, K = k / lambda^2, tau' = lambda^-8 tau.
/// The average runs over `periods` windows of 4 pi (the period of x0 in theta).
inline std::complex<double> averaged_envelope_velocity(Vec2 K, const NondimParams& np,
                                                       std::size_t periods = 8,
                                                       std::size_t samples_per_period = 4096) {
    const std::complex<double> Kc{K[0], K[1]};
    const double r = 2.0 * np.lambda * np.lambda * std::abs(Kc);
    const double a = std::arg(Kc);
    const std::size_t n = periods * samples_per_period;
    const double span = 4.0 * std::numbers::pi * static_cast<double>(periods);
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = span * static_cast<double>(i) / static_cast<double>(n);
        const double x0 = x0_asymptotic(0.5 * (theta + a), r, a, np);
        acc += x0 * x0 * std::polar(1.0, -theta);
    }
    const std::complex<double> mean = acc / static_cast<double>(n);
    const std::complex<double> dk_dtau = std::complex<double>(0.0, -0.5 * np.delta) * mean;
    const double l2 = np.lambda * np.lambda;
    return dk_dtau / l2 * std::pow(np.lambda, 8);
}

struct ReductionCheck {
    Vec2 K{};
    std::complex<double> averaged;     // dK/dtau' from averaging
    std::complex<double> hamiltonian;  // dH/dK2 - i dH/dK1
    double angle = 0.0;                // radians, in [0, pi]
    double scale = 0.0;                // |averaged| / |hamiltonian|
};

inline ReductionCheck reduction_check(Vec2 K, const OscParams& p) {
    const NondimParams np = nondimensionalize(p);
    const PulsationHamiltonian ham{p.A, p.Omega};
    ReductionCheck rc;
    rc.K = K;
    rc.averaged = averaged_envelope_velocity(K, np);
    const Vec2 v = hamiltonian_velocity(ham, K);
    rc.hamiltonian = {v[0], v[1]};
    rc.angle = std::abs(std::arg(rc.averaged / rc.hamiltonian));
    rc.scale = std::abs(rc.averaged) / std::abs(rc.hamiltonian);
    return rc;
}

/// Radial component of the Hamiltonian velocity on a small circle around a
/// point where the field cannot be evaluated (such as K = 0). Mostly positive
/// values indicate a repelling point.
struct RadialProbe {
    double mean_radial = 0.0;
    double min_radial = 0.0;
    double max_radial = 0.0;
    double outward_fraction = 0.0;
    std::size_t evaluated = 0;
};

template <PlanarHamiltonian H>
RadialProbe radial_probe(const H& ham, Vec2 centre, double radius, std::size_t samples = 360) {
    RadialProbe rp;
    rp.min_radial = std::numeric_limits<double>::infinity();
    rp.max_radial = -std::numeric_limits<double>::infinity();
    std::size_t outward = 0;
    for (std::size_t j = 0; j < samples; ++j) {
        const double phi = 2.0 * std::numbers::pi * (static_cast<double>(j) + 0.5) /
                           static_cast<double>(samples);
        const Vec2 u{std::cos(phi), std::sin(phi)};
        const Vec2 p{centre[0] + radius * u[0], centre[1] + radius * u[1]};
        try {
            const Vec2 v = hamiltonian_velocity(ham, p);
            const double radial = v[0] * u[0] + v[1] * u[1];
            if (!std::isfinite(radial)) continue;
            rp.mean_radial += radial;
            rp.min_radial = std::min(rp.min_radial, radial);
            rp.max_radial = std::max(rp.max_radial, radial);
            if (radial > 0.0) ++outward;
            ++rp.evaluated;
        } catch (const Error&) {
        }
    }
    if (rp.evaluated > 0) {
        rp.mean_radial /= static_cast<double>(rp.evaluated);
        rp.outward_fraction = static_cast<double>(outward) / static_cast<double>(rp.evaluated);
    }
    return rp;
}

}  // namespace resonant
