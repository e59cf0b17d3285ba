#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "resonant/envelope.hpp"
#include "resonant/floquet.hpp"

using namespace resonant;

namespace {

constexpr double kPi = std::numbers::pi;

struct HarmonicH {
    double value(double x, double y) const { return 0.5 * (x * x + y * y); }
    Vec2 gradient(double x, double y) const { return {x, y}; }
};

struct DuffingH {
    double value(double x, double y) const { return 0.5 * y * y + 0.5 * x * x + 0.25 * x * x * x * x; }
    Vec2 gradient(double x, double y) const { return {x + x * x * x, y}; }
};

struct PendulumH {
    double value(double x, double y) const { return 0.5 * y * y - std::cos(x); }
    Vec2 gradient(double x, double y) const { return {std::sin(x), y}; }
};

// T = 4 int_0^{pi/2} dphi / sqrt(1 + a^2 (1 + sin^2 phi) / 2), a the turning amplitude.
double duffing_period(double H0) {
    const double a2 = -1.0 + std::sqrt(1.0 + 4.0 * H0);
    const int n = 400;
    const double h = 0.5 * kPi / n;
    double sum = 0;
    for (int i = 0; i <= n; ++i) {
        const double s = std::sin(i * h);
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        sum += w / std::sqrt(1.0 + 0.5 * a2 * (1.0 + s * s));
    }
    return 4.0 * h * sum;
}

// Written out independently of the library.
double h_reference(double K1, double K2) {
    const double m = K1 * K1 + K2 * K2;
    const double S = std::sqrt(1.0 - m);
    return (m - K1) / (K1 * (1.0 - m) - (m - K1) * S) / (2.0 * kPi);
}

// Periodic steady state of the damped Mathieu problem reached from zero data,
// compared with the asymptotic formula over the last period.
double asymptotic_error(double lambda, double r, double a, PhaseConvention pc) {
    NondimParams np;
    np.lambda = lambda;
    np.mu = 0.1;
    np.f = 1.0;
    const auto mp = MathieuParams::make(4 * lambda * lambda, r, np.mu, a, np.f);
    const std::size_t per = 2000;
    const double h = 2 * kPi / per;
    const auto ts = particular_solution(mp, 30 * 2 * kPi, h);
    double worst = 0;
    for (std::size_t i = ts.size() - per - 1; i < ts.size(); ++i) {
        worst = std::max(worst, std::abs(ts[i][0] - x0_asymptotic(ts.time(i), r, a, np, pc)));
    }
    return worst;
}

}  // namespace

TEST(Hamiltonian, ValuesMatchClosedForm) {
    const PulsationHamiltonian ham;
    EXPECT_NEAR(ham.value(1 / std::numbers::sqrt2, 0.0), (1 - std::numbers::sqrt2) / (2 * kPi), 1e-15);
    for (Vec2 K : {Vec2{0.3, 0.4}, Vec2{-0.5, 0.1}, Vec2{0.8, -0.5}, Vec2{0.1, 0.05}}) {
        EXPECT_NEAR(ham.value(K[0], K[1]), h_reference(K[0], K[1]), 1e-14);
    }
    EXPECT_NEAR(hamiltonian(0.3, 0.4, 2.0, 1.5), 4.0 / 3.375 * h_reference(0.3, 0.4), 1e-14);
}

TEST(Hamiltonian, EvenInK2) {
    const PulsationHamiltonian ham;
    for (Vec2 K : {Vec2{0.3, 0.4}, Vec2{-0.5, 0.1}, Vec2{0.6, -0.7}}) {
        EXPECT_DOUBLE_EQ(ham.value(K[0], K[1]), ham.value(K[0], -K[1]));
    }
}

TEST(Hamiltonian, GradientMatchesFiniteDifferences) {
    const PulsationHamiltonian ham{1.3, 0.9};
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> rho(0.2, 0.9), phi(0, 2 * kPi);
    int checked = 0;
    while (checked < 20) {
        const double r = rho(gen), p = phi(gen);
        const double x = r * std::cos(p), y = r * std::sin(p);
        double fd[2];
        try {
            const double d = 1e-6;
            fd[0] = (ham.value(x + d, y) - ham.value(x - d, y)) / (2 * d);
            fd[1] = (ham.value(x, y + d) - ham.value(x, y - d)) / (2 * d);
        } catch (const SingularDenominator&) {
            continue;
        }
        const Vec2 g = ham.gradient(x, y);
        const double scale = 1.0 + std::hypot(g[0], g[1]);
        if (scale > 1e3) continue;  // next to the singular curve the difference quotient is meaningless
        EXPECT_LT(std::abs(g[0] - fd[0]) / scale, 1e-6) << x << "," << y;
        EXPECT_LT(std::abs(g[1] - fd[1]) / scale, 1e-6) << x << "," << y;
        ++checked;
    }
}

TEST(Hamiltonian, DomainErrors) {
    const PulsationHamiltonian ham;
    EXPECT_THROW(ham.value(1.0, 0.5), DomainError);
    EXPECT_THROW(ham.value(0.0, 0.0), SingularDenominator);
    EXPECT_THROW(envelope_flow(ham, {1.2, 0.0}, 1.0, 1e-3), LeftDomain);
    EXPECT_THROW(envelope_flow(ham, {0.9053957534613095, 0.026105238444010317}, 20.0, 1e-3), LeftDomain);
    const auto fr = envelope_flow(ham, {0.9053957534613095, 0.026105238444010317}, 20.0, 1e-3, true);
    EXPECT_TRUE(fr.left_domain);
    EXPECT_LT(fr.ts.grid.t_end, 20.0);
}

TEST(Hamiltonian, PrintedCentreIsASaddle) {
    const PulsationHamiltonian ham;
    const auto eq = locate_equilibrium(ham, {1 / std::numbers::sqrt2, 0.0});
    EXPECT_LT(eq.gradient_norm, 1e-12);
    EXPECT_NEAR(eq.point[0], 1 / std::numbers::sqrt2, 1e-10);
    EXPECT_EQ(eq.kind, EquilibriumKind::saddle);
    EXPECT_FALSE(eq.linearized_period().has_value());
}

TEST(Flow, ReversibleUnderK2Reflection) {
    const PulsationHamiltonian ham;
    const double tau = 0.5, h = 1e-4;
    const auto fwd = envelope_flow(ham, {0.5, 0.3}, tau, h);
    const auto& end = fwd.ts.states.back();
    const auto back = envelope_flow(ham, {end[0], -end[1]}, tau, h);
    EXPECT_NEAR(back.ts.states.back()[0], 0.5, 1e-8);
    EXPECT_NEAR(back.ts.states.back()[1], -0.3, 1e-8);
    EXPECT_LT(fwd.max_rel_drift, 1e-7);
}

TEST(Flow, ConservationSegmentStopsAtRegionEdge) {
    const PulsationHamiltonian ham;
    const auto fr = envelope_flow(ham, {0.9053957534613095, 0.026105238444010317}, 20.0, 1e-3, true);
    const auto seg = conservation_in_region(fr);
    EXPECT_GT(seg.samples, 100u);
    EXPECT_LT(seg.tau_prime_end, fr.ts.grid.t_end);
    EXPECT_LT(seg.max_rel_drift, 1e-7);
}

TEST(AmplitudeRoots, StatedLevel) {
    const auto r = amplitude_roots(1.0 / (4 * kPi), 1.0, 1.0);
    EXPECT_NEAR(r.r_minus, 0.0, 1e-14);
    EXPECT_NEAR(r.r_plus, 1.0, 1e-14);
    EXPECT_NEAR(max_envelope_estimate(r, nondimensionalize(OscParams::reference())), 45.0, 1e-12);
}

TEST(AmplitudeRoots, VietaRelations) {
    for (double A : {0.5, 1.0, 2.0}) {
        for (double Omega : {0.8, 1.0, 1.7}) {
            for (double H0 : {0.1, 0.5, 3.0, -0.4}) {
                const double w = 4 * kPi * std::pow(Omega, 3) * H0;
                const double A2 = A * A;
                AmplitudeRoots r;
                try {
                    r = amplitude_roots(H0, A, Omega);
                } catch (const InfeasibleLevel&) {
                    EXPECT_LT(amplitude_radical(H0, A, Omega), 0.0);
                    continue;
                }
                EXPECT_NEAR(r.r_plus + r.r_minus, 2.0 * (A2 - 0.5 * w) / w, 1e-12);
                EXPECT_NEAR(r.r_plus * r.r_minus, 2.0 * A2 * (A2 - w) / (w * w), 1e-12);
            }
        }
    }
}

TEST(AmplitudeRoots, DoubleRootAtThreshold) {
    const double H0 = (std::numbers::sqrt2 - 1) / (2 * kPi);
    EXPECT_NEAR(amplitude_radical(H0, 1, 1), 0.0, 1e-14);
    const auto r = amplitude_roots(H0 * (1 + 1e-14), 1, 1);
    EXPECT_NEAR(r.r_plus, r.r_minus, 1e-5);
}

TEST(AmplitudeRoots, Errors) {
    EXPECT_THROW(amplitude_roots(0.0, 1, 1), ZeroLevel);
    EXPECT_THROW(amplitude_roots(0.01, 1, 1), InfeasibleLevel);
}

TEST(Period, HarmonicBothWays) {
    const HarmonicH ham;
    const auto pc = compare_periods(ham, {0, 0}, {0.5, 0.0}, 1e-3, 100.0);
    EXPECT_NEAR(pc.by_flow, 2 * kPi, 1e-9);
    EXPECT_NEAR(pc.by_contour, 2 * kPi, 1e-9);
    const auto eq = locate_equilibrium(ham, {0.1, -0.2});
    EXPECT_EQ(eq.kind, EquilibriumKind::centre);
    EXPECT_NEAR(*eq.linearized_period(), 2 * kPi, 1e-8);
}

TEST(Period, DuffingBothWays) {
    const DuffingH ham;
    ContourOptions opt;
    opt.max_radius = 3.0;
    for (double H0 : {0.01, 0.5, 2.0}) {
        const Vec2 start = level_point(ham, {0, 0}, H0, 0.0, opt);
        const auto pc = compare_periods(ham, {0, 0}, start, 1e-3, 100.0, opt);
        const double T = duffing_period(H0);
        EXPECT_NEAR(pc.by_flow, T, 1e-8 * T) << H0;
        EXPECT_NEAR(pc.by_contour, T, 1e-8 * T) << H0;
    }
    EXPECT_NEAR(duffing_period(1e-8), 2 * kPi, 1e-6);
}

TEST(Period, PendulumBothWays) {
    const PendulumH ham;
    for (double alpha : {0.3, 1.5, 2.8}) {
        const double H0 = -std::cos(alpha);
        const double T = 4.0 * std::comp_ellint_1(std::sin(alpha / 2));
        const double flow = period_by_return(ham, {alpha, 0.0}, 1e-3, 100.0);
        ContourOptions opt;
        opt.max_radius = 4.0;
        const double contour = period_by_contour(ham, {0, 0}, H0, opt);
        EXPECT_NEAR(flow, T, 1e-7 * T) << alpha;
        EXPECT_NEAR(contour, T, 1e-7 * T) << alpha;
    }
}

TEST(Period, OpenLevelSetIsRejected) {
    const PendulumH ham;
    ContourOptions opt;
    opt.max_radius = 3.0;
    EXPECT_THROW(period_by_contour(ham, {0, 0}, 2.0, opt), NotClosedOrbit);
    EXPECT_THROW(period_by_return(ham, {0.0, 2.5}, 1e-3, 50.0), NotClosedOrbit);
}

TEST(Period, InAllTimeVariables) {
    const auto np = nondimensionalize(OscParams::reference());
    const auto p = period_in_variables(1.0, np, 1.0);
    EXPECT_DOUBLE_EQ(p.tau, 6561.0);
    EXPECT_NEAR(p.theta, 6561.0 / 0.04, 1e-9);
    EXPECT_NEAR(p.t, p.theta, 1e-9);
}

TEST(LevelSet, StatedLevelHasNoPeriod) {
    const auto s = level_set_summary(1.0 / (4 * kPi), OscParams::reference());
    EXPECT_TRUE(s.feasible);
    EXPECT_EQ(s.equilibrium.kind, EquilibriumKind::saddle);
    EXPECT_FALSE(s.period.has_value());
    EXPECT_NE(s.period_error.find("saddle"), std::string::npos);
}

TEST(InitialData, Stationary) {
    const auto s = stationary_initial_data(nondimensionalize(OscParams::reference()));
    EXPECT_NEAR(s[0], 1.0 / 9.0, 1e-15);
    EXPECT_EQ(s[1], 0.0);
    EXPECT_NEAR(s[2], -9.0 / (0.2 * std::numbers::sqrt2), 1e-12);
    EXPECT_EQ(s[3], 0.0);
}

TEST(Asymptotics, ParticularSolutionWithinBudget) {
    const double budget = std::pow(3.0, -4);
    for (double a : {0.0, 0.7, 2.0}) {
        const double e3 = asymptotic_error(3.0, 2.0, a, PhaseConvention::forcing);
        const double e6 = asymptotic_error(6.0, 2.0, a, PhaseConvention::forcing);
        EXPECT_LT(e3, budget) << a;
        EXPECT_GT(e3 / e6, 8.0) << a;
    }
}

TEST(Asymptotics, PrintedPhaseSignMissesBudget) {
    EXPECT_GT(asymptotic_error(3.0, 2.0, 0.7, PhaseConvention::printed), std::pow(3.0, -4));
}

TEST(Asymptotics, DenominatorGuard) {
    NondimParams np;
    EXPECT_THROW(x0_asymptotic(0.0, 17.5, 0.0, np), DenominatorNearZero);
    EXPECT_NO_THROW(x0_asymptotic(0.0, 16.0, 0.0, np));
}

TEST(Reduction, ReportsFiniteDirectionAndScale) {
    const auto rc = reduction_check({0.5, 0.1}, OscParams::reference());
    EXPECT_TRUE(std::isfinite(rc.angle));
    EXPECT_GE(rc.angle, 0.0);
    EXPECT_LE(rc.angle, kPi);
    EXPECT_GT(rc.scale, 0.0);
}

TEST(Probe, RadialVelocityAroundOrigin) {
    const HarmonicH ham;
    const auto rp = radial_probe(ham, {0, 0}, 0.1);
    EXPECT_EQ(rp.evaluated, 360u);
    EXPECT_NEAR(rp.mean_radial, 0.0, 1e-14);
    EXPECT_NEAR(rp.max_radial, 0.0, 1e-14);
}
