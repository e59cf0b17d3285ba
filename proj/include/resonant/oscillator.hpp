#pragma once

// The resonantly forced pair of coupled oscillators
//
//   x'' + nu x' + omega^2 x = eps x y + A cos(Omega t / 2)
//   y''         + Omega^2 y = eps delta x^2
//
// in physical time t and in the nondimensional time theta = Omega t, plus the
// envelope utilities used to read pulsations off a sampled y(t).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "resonant/errors.hpp"
#include "resonant/integrators.hpp"

namespace resonant {

/// State layout of both the physical and the nondimensional system.
using OscState = State<4>;  // (x, x', y, y')

struct OscParams {
    double omega = 3.0;  // fast eigenfrequency
    double Omega = 1.0;  // slow eigenfrequency; the forcing carrier is Omega/2
    double A = 1.0;      // forcing amplitude
    double nu = 0.1;     // damping of x
    double eps = 0.2;    // coupling strength
    double delta = 1.0;  // mass ratio m/(2M); never fixed by the source model

    /// epsilon = 0.2, Omega = 1, omega = 3, A = 1, nu = 0.1, delta = 1.
    static OscParams reference() { return {}; }

    /// Throws InvalidParameter. `allow_zero_coupling` admits eps = 0, which the
    /// physical model excludes but the decoupled test cases need.
    void validate(bool allow_zero_coupling = false) const {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!finite(omega) || !finite(Omega) || !finite(A) || !finite(nu) ||
            !finite(eps) || !finite(delta)) {
            throw InvalidParameter("oscillator parameters must be finite");
        }
        if (!(omega > 0.0)) throw InvalidParameter("omega must be positive");
        if (!(Omega > 0.0)) throw InvalidParameter("Omega must be positive");
        if (A < 0.0) throw InvalidParameter("A must be non-negative");
        if (nu < 0.0) throw InvalidParameter("nu must be non-negative");
        if (allow_zero_coupling ? eps < 0.0 : !(eps > 0.0)) {
            throw InvalidParameter("eps must be positive");
        }
        if (!(delta > 0.0)) throw InvalidParameter("delta must be positive");
        if (4.0 * omega * omega == Omega * Omega) {
            throw ResonantDenominator("4 omega^2 = Omega^2: linear resonance denominator vanishes");
        }
    }
};

struct NondimParams {
    double lambda = 3.0;      // omega / Omega
    double varepsilon = 0.2;  // eps / Omega^2
    double f = 1.0;           // A / Omega^2
    double mu = 0.1;          // nu / Omega
    double delta = 1.0;
};

inline NondimParams nondimensionalize(const OscParams& p) {
    const double O2 = p.Omega * p.Omega;
    return {p.omega / p.Omega, p.eps / O2, p.A / O2, p.nu / p.Omega, p.delta};
}

/// Inverse of nondimensionalize for a chosen Omega.
inline OscParams to_dimensional(const NondimParams& np, double Omega) {
    const double O2 = Omega * Omega;
    return {np.lambda * Omega, Omega, np.f * O2, np.mu * Omega, np.varepsilon * O2,
            np.delta};
}

/// Right-hand side in physical time t.
struct CoupledField {
    OscParams p;

    OscState operator()(double t, const OscState& s) const {
        const double x = s[0], xp = s[1], y = s[2], yp = s[3];
        return {xp,
                -p.nu * xp - p.omega * p.omega * x + p.eps * x * y +
                    p.A * std::cos(0.5 * p.Omega * t),
                yp, -p.Omega * p.Omega * y + p.eps * p.delta * x * x};
    }
};

/// Right-hand side in theta = Omega t; derivatives in the state are d/dtheta.
struct NondimField {
    NondimParams np;

    OscState operator()(double theta, const OscState& s) const {
        const double x = s[0], xp = s[1], y = s[2], yp = s[3];
        return {xp,
                -np.mu * xp - np.lambda * np.lambda * x + np.varepsilon * x * y +
                    np.f * std::cos(0.5 * theta),
                yp, -y + np.varepsilon * np.delta * x * x};
    }
};

inline CoupledField coupled_field(const OscParams& p, bool allow_zero_coupling = false) {
    p.validate(allow_zero_coupling);
    return CoupledField{p};
}

/// Slope of the initial linear envelope growth of y, 4 eps A^2 / (4 omega^2 - Omega^2)^2
/// with eps the scaled coupling eps / Omega^2.
inline double linear_growth_line(const OscParams& p) {
    const double D = 4.0 * p.omega * p.omega - p.Omega * p.Omega;
    if (D == 0.0) {
        throw ResonantDenominator("4 omega^2 = Omega^2: linear resonance denominator vanishes");
    }
    const double varepsilon = p.eps / (p.Omega * p.Omega);
    return 4.0 * varepsilon * p.A * p.A / (D * D);
}

/// Samples per 2 pi of theta used by default_step: even, and at least 200 per
/// period of the fastest frequency present.
inline std::size_t default_samples_per_period(const OscParams& p) {
    const double lambda = std::max(p.omega / p.Omega, 1.0);
    return 2 * static_cast<std::size_t>(std::ceil(100.0 * lambda - 1e-9));
}

/// h = 2 pi / (Omega * samples_per_period). Every 2 pi window of theta then
/// holds an integer (even) number of steps.
inline double default_step(const OscParams& p) {
    return 2.0 * std::numbers::pi /
           (p.Omega * static_cast<double>(default_samples_per_period(p)));
}

inline TimeSeries<4> simulate(const OscParams& p, const OscState& init, double t_end,
                              double h, Method method = Method::rk4,
                              bool allow_zero_coupling = false) {
    const auto field = coupled_field(p, allow_zero_coupling);
    return integrate(method, field, init, IntegrationGrid::uniform(0.0, t_end, h));
}

// ---------------------------------------------------------------------------
// Envelope of a sampled oscillation: the sequence of local maxima of |signal|,
// linearly interpolated between peaks.

struct EnvelopePeak {
    double t = 0.0;
    double value = 0.0;
};

/// Streaming local-maximum detector for |signal|. Feed samples in time order.
class EnvelopeTracker {
public:
    void operator()(double t, double signal) {
        const double v = std::abs(signal);
        if (count_ >= 2 && prev_ > prev2_ && prev_ >= v) peaks_.push_back({t_prev_, prev_});
        prev2_ = prev_;
        prev_ = v;
        t_prev_ = t;
        ++count_;
    }

    const std::vector<EnvelopePeak>& peaks() const noexcept { return peaks_; }
    std::vector<EnvelopePeak> take() { return std::move(peaks_); }

private:
    std::vector<EnvelopePeak> peaks_;
    double prev_ = 0.0, prev2_ = 0.0, t_prev_ = 0.0;
    std::size_t count_ = 0;
};

inline std::vector<EnvelopePeak> envelope_peaks(const std::vector<double>& times,
                                                const std::vector<double>& signal) {
    EnvelopeTracker tracker;
    const std::size_t n = std::min(times.size(), signal.size());
    for (std::size_t i = 0; i < n; ++i) tracker(times[i], signal[i]);
    return tracker.take();
}

/// Linear interpolation of the envelope; clamps outside the peak range.
inline double envelope_at(const std::vector<EnvelopePeak>& peaks, double t) {
    if (peaks.empty()) return 0.0;
    if (t <= peaks.front().t) return peaks.front().value;
    if (t >= peaks.back().t) return peaks.back().value;
    auto it = std::upper_bound(peaks.begin(), peaks.end(), t,
                               [](double tt, const EnvelopePeak& p) { return tt < p.t; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    return a.value + (b.value - a.value) * (t - a.t) / (b.t - a.t);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
};

/// Ordinary least squares value = slope * t + intercept over peaks with
/// t in [t_from, t_to].
inline LineFit fit_line(const std::vector<EnvelopePeak>& peaks, double t_from, double t_to) {
    double st = 0, sv = 0, stt = 0, stv = 0;
    std::size_t n = 0;
    for (const auto& p : peaks) {
        if (p.t < t_from || p.t > t_to) continue;
        st += p.t;
        sv += p.value;
        stt += p.t * p.t;
        stv += p.t * p.value;
        ++n;
    }
    if (n < 2) throw TooFewPoints("line fit needs at least two envelope peaks");
    const double dn = static_cast<double>(n);
    const double denom = dn * stt - st * st;
    if (denom == 0.0) throw TooFewPoints("envelope peaks are not spread in time");
    const double slope = (dn * stv - st * sv) / denom;
    return {slope, (sv - slope * st) / dn, n};
}

struct InitialSlopeFit {
    double formula = 0.0;       // linear_growth_line(p)
    double fitted_y = 0.0;      // least-squares slope of the |y| envelope
    double fitted_eps_y = 0.0;  // same for |varepsilon y|
    double window_end = 0.0;    // end of the fitting window in t
    std::size_t points = 0;

    double ratio_y() const { return fitted_y / formula; }
    double ratio_eps_y() const { return fitted_eps_y / formula; }
    /// Which normalisation of the envelope the formula describes better.
    std::string best_normalization() const {
        return std::abs(ratio_y() - 1.0) <= std::abs(ratio_eps_y() - 1.0) ? "y" : "eps*y";
    }
};

/// Fits the initial-stage envelope slope. The window runs from t = 0 until
/// |y| first reaches 25% of lambda^2 / varepsilon (or the end of the data).
inline InitialSlopeFit fit_initial_slope(const OscParams& p,
                                         const std::vector<EnvelopePeak>& peaks,
                                         double t_last) {
    const NondimParams np = nondimensionalize(p);
    const double cap = 0.25 * np.lambda * np.lambda / np.varepsilon;
    double window_end = t_last;
    for (const auto& pk : peaks) {
        if (pk.value >= cap) {
            window_end = pk.t;
            break;
        }
    }
    const LineFit fit = fit_line(peaks, 0.0, window_end);
    InitialSlopeFit out;
    out.formula = linear_growth_line(p);
    out.fitted_y = fit.slope;
    out.fitted_eps_y = np.varepsilon * fit.slope;
    out.window_end = window_end;
    out.points = fit.points;
    return out;
}

inline InitialSlopeFit fit_initial_slope(const OscParams& p, const TimeSeries<4>& ts) {
    std::vector<double> t(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) t[i] = ts.time(i);
    return fit_initial_slope(p, envelope_peaks(t, ts.component(2)), ts.time(ts.size() - 1));
}

struct EnvelopeExtremum {
    double t = 0.0;
    double value = 0.0;
    bool is_maximum = true;
};

/// Alternating maxima/minima of a peak envelope with hysteresis: an extremum
/// is confirmed once the envelope moves away from it by `hysteresis` times
/// the largest peak seen so far, or by `floor`, whichever is larger. The
/// floor keeps start-up ripple (alternating lobes of |y| around a tiny
/// envelope) from registering as extrema.
inline std::vector<EnvelopeExtremum> envelope_extrema(const std::vector<EnvelopePeak>& peaks,
                                                      double hysteresis = 0.05,
                                                      double floor = 0.0) {
    std::vector<EnvelopeExtremum> out;
    if (peaks.empty()) return out;
    bool rising = true;
    EnvelopePeak best = peaks.front();
    double scale = 0.0;
    for (const auto& pk : peaks) {
        scale = std::max(scale, pk.value);
        const double band = std::max(hysteresis * scale, floor);
        if (rising) {
            if (pk.value >= best.value) {
                best = pk;
            } else if (pk.value < best.value - band) {
                out.push_back({best.t, best.value, true});
                rising = false;
                best = pk;
            }
        } else {
            if (pk.value <= best.value) {
                best = pk;
            } else if (pk.value > best.value + band) {
                out.push_back({best.t, best.value, false});
                rising = true;
                best = pk;
            }
        }
    }
    return out;
}

}  // namespace resonant
