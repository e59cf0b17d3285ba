#pragma once

// Fixed-step integrators for n-dimensional (possibly time-dependent) vector
// fields: classical RK4 and the 4th-order Adams-Bashforth-Moulton
// predictor-corrector (PECE, RK4 start-up). Output is sampled on the
// integration grid itself, so every trajectory is equally spaced in time.

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "resonant/errors.hpp"

namespace resonant {

template <std::size_t N>
using State = std::array<double, N>;

/// A right-hand side y' = f(t, y) on R^N.
template <class F, std::size_t N>
concept VectorField = requires(const F& f, double t, const State<N>& y) {
    { f(t, y) } -> std::convertible_to<State<N>>;
};

/// Any component beyond this magnitude aborts the integration.
inline constexpr double kDivergenceThreshold = 1e12;

struct IntegrationGrid {
    double t0 = 0.0;
    double t_end = 0.0;
    double h = 0.0;
    std::size_t n_steps = 0;

    /// n_steps = round((t_end - t0) / h). Throws InvalidGrid unless
    /// t_end > t0, h > 0 and at least one step results.
    static IntegrationGrid uniform(double t0, double t_end, double h) {
        if (!std::isfinite(t0) || !std::isfinite(t_end) || !std::isfinite(h)) {
            throw InvalidGrid("grid bounds and step must be finite");
        }
        if (!(t_end > t0)) throw InvalidGrid("grid requires t_end > t0");
        if (!(h > 0.0)) throw InvalidGrid("grid requires a positive step");
        const double steps = std::round((t_end - t0) / h);
        if (steps < 1.0) throw InvalidGrid("grid has no steps");
        return {t0, t_end, h, static_cast<std::size_t>(steps)};
    }

    static IntegrationGrid from_steps(double t0, double h, std::size_t n_steps) {
        if (n_steps == 0) throw InvalidGrid("grid has no steps");
        return uniform(t0, t0 + h * static_cast<double>(n_steps), h);
    }

    double time(std::size_t i) const noexcept {
        return t0 + static_cast<double>(i) * h;
    }
};

template <std::size_t N>
struct TimeSeries {
    IntegrationGrid grid;
    std::vector<State<N>> states;  // n_steps + 1 rows, row 0 is the initial state

    std::size_t size() const noexcept { return states.size(); }
    double time(std::size_t i) const noexcept { return grid.time(i); }
    const State<N>& operator[](std::size_t i) const { return states[i]; }
    const State<N>& back() const { return states.back(); }

    std::vector<double> component(std::size_t j) const {
        std::vector<double> out;
        out.reserve(states.size());
        for (const auto& s : states) out.push_back(s[j]);
        return out;
    }
};

namespace detail {

template <std::size_t N>
void check_state(const State<N>& y, double t, std::size_t step) {
    for (std::size_t j = 0; j < N; ++j) {
        if (!std::isfinite(y[j]) || std::abs(y[j]) > kDivergenceThreshold) {
            std::ostringstream msg;
            msg << "state component " << j << " = " << y[j] << " at t = " << t
                << " (step " << step << ") is non-finite or beyond "
                << kDivergenceThreshold;
            throw NonFiniteState(msg.str());
        }
    }
}

// y + a * k
template <std::size_t N>
State<N> axpy(const State<N>& y, double a, const State<N>& k) {
    State<N> out;
    for (std::size_t j = 0; j < N; ++j) out[j] = y[j] + a * k[j];
    return out;
}

// Observers may return void, or bool where false requests an early stop.
template <class Observer, std::size_t N>
bool notify(Observer& obs, std::size_t i, double t, const State<N>& y) {
    if constexpr (std::is_same_v<std::invoke_result_t<Observer&, std::size_t, double,
                                                      const State<N>&>,
                                 bool>) {
        return obs(i, t, y);
    } else {
        obs(i, t, y);
        return true;
    }
}

}  // namespace detail

template <std::size_t N, VectorField<N> F>
State<N> rk4_step(const F& f, double t, const State<N>& y, double h) {
    const State<N> k1 = f(t, y);
    const State<N> k2 = f(t + 0.5 * h, detail::axpy(y, 0.5 * h, k1));
    const State<N> k3 = f(t + 0.5 * h, detail::axpy(y, 0.5 * h, k2));
    const State<N> k4 = f(t + h, detail::axpy(y, h, k3));
    State<N> out;
    for (std::size_t j = 0; j < N; ++j) {
        out[j] = y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    return out;
}

/// Streams the RK4 trajectory through `obs(i, t, state)` for i = 0..n_steps
/// without storing it. Long horizons (t ~ 1e5) go through here.
template <std::size_t N, VectorField<N> F, class Observer>
void rk4_drive(const F& field, const State<N>& init, const IntegrationGrid& grid,
               Observer&& obs) {
    detail::check_state(init, grid.t0, 0);
    State<N> y = init;
    if (!detail::notify(obs, 0, grid.t0, y)) return;
    for (std::size_t i = 0; i < grid.n_steps; ++i) {
        y = rk4_step(field, grid.time(i), y, grid.h);
        const double t = grid.time(i + 1);
        detail::check_state(y, t, i + 1);
        if (!detail::notify(obs, i + 1, t, y)) return;
    }
}

/// Adams-Bashforth-Moulton 4 in PECE mode. The first three steps are RK4.
template <std::size_t N, VectorField<N> F, class Observer>
void abm4_drive(const F& field, const State<N>& init, const IntegrationGrid& grid,
                Observer&& obs) {
    if (grid.n_steps < 4) {
        throw GridTooShort("abm4 needs at least 4 steps, grid has " +
                           std::to_string(grid.n_steps));
    }
    detail::check_state(init, grid.t0, 0);
    const double h = grid.h;

    // f_hist[0] is the newest derivative f_n, f_hist[3] is f_{n-3}.
    std::array<State<N>, 4> f_hist{};
    State<N> y = init;
    if (!detail::notify(obs, 0, grid.t0, y)) return;
    f_hist[3] = field(grid.t0, y);
    for (std::size_t i = 0; i < 3; ++i) {
        y = rk4_step(field, grid.time(i), y, h);
        const double t = grid.time(i + 1);
        detail::check_state(y, t, i + 1);
        if (!detail::notify(obs, i + 1, t, y)) return;
        f_hist[2 - i] = field(t, y);
    }

    for (std::size_t i = 3; i < grid.n_steps; ++i) {
        const double t_next = grid.time(i + 1);
        State<N> pred;
        for (std::size_t j = 0; j < N; ++j) {
            pred[j] = y[j] + h / 24.0 *
                                 (55.0 * f_hist[0][j] - 59.0 * f_hist[1][j] +
                                  37.0 * f_hist[2][j] - 9.0 * f_hist[3][j]);
        }
        const State<N> f_pred = field(t_next, pred);
        for (std::size_t j = 0; j < N; ++j) {
            y[j] += h / 24.0 *
                    (9.0 * f_pred[j] + 19.0 * f_hist[0][j] - 5.0 * f_hist[1][j] +
                     f_hist[2][j]);
        }
        detail::check_state(y, t_next, i + 1);
        if (!detail::notify(obs, i + 1, t_next, y)) return;
        f_hist[3] = f_hist[2];
        f_hist[2] = f_hist[1];
        f_hist[1] = f_hist[0];
        f_hist[0] = field(t_next, y);
    }
}

template <std::size_t N, VectorField<N> F>
TimeSeries<N> rk4_integrate(const F& field, const State<N>& init,
                            const IntegrationGrid& grid) {
    TimeSeries<N> ts{grid, {}};
    ts.states.reserve(grid.n_steps + 1);
    rk4_drive(field, init, grid,
              [&](std::size_t, double, const State<N>& y) { ts.states.push_back(y); });
    return ts;
}

template <std::size_t N, VectorField<N> F>
TimeSeries<N> abm4_integrate(const F& field, const State<N>& init,
                             const IntegrationGrid& grid) {
    TimeSeries<N> ts{grid, {}};
    ts.states.reserve(grid.n_steps + 1);
    abm4_drive(field, init, grid,
               [&](std::size_t, double, const State<N>& y) { ts.states.push_back(y); });
    return ts;
}

enum class Method { rk4, abm4 };

inline Method parse_method(const std::string& name) {
    if (name == "rk4") return Method::rk4;
    if (name == "abm4") return Method::abm4;
    throw InvalidParameter("unknown integration method '" + name + "' (rk4|abm4)");
}

inline const char* to_string(Method m) { return m == Method::rk4 ? "rk4" : "abm4"; }

template <std::size_t N, VectorField<N> F>
TimeSeries<N> integrate(Method method, const F& field, const State<N>& init,
                        const IntegrationGrid& grid) {
    return method == Method::rk4 ? rk4_integrate(field, init, grid)
                                 : abm4_integrate(field, init, grid);
}

template <std::size_t N, VectorField<N> F, class Observer>
void drive(Method method, const F& field, const State<N>& init,
           const IntegrationGrid& grid, Observer&& obs) {
    if (method == Method::rk4) {
        rk4_drive(field, init, grid, std::forward<Observer>(obs));
    } else {
        abm4_drive(field, init, grid, std::forward<Observer>(obs));
    }
}

}  // namespace resonant
