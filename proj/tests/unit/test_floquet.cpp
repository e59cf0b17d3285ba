#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "resonant/floquet.hpp"

using namespace resonant;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Hill {
    double Q, R;
    State<2> operator()(double s, const State<2>& u) const {
        return {u[1], -(Q - 2.0 * R * std::cos(2.0 * s)) * u[0]};
    }
};

// Growth rate per unit s of a generic solution, from plain RK4 with the state
// renormalised every period, measured between periods 10 and 20.
double growth_rate_oracle(double Q, double R) {
    const std::size_t per_period = 4000;
    const double h = kTwoPi / per_period;
    State<2> u{1.0, 0.3};
    double log_growth = 0.0;
    for (int period = 0; period < 20; ++period) {
        for (std::size_t k = 0; k < per_period; ++k) {
            u = rk4_step(Hill{Q, R}, k * h, u, h);
        }
        const double n = std::hypot(u[0], u[1]);
        if (period >= 10) log_growth += std::log(n);
        u = {u[0] / n, u[1] / n};
    }
    return log_growth / (10.0 * kTwoPi);
}

}  // namespace

TEST(Monodromy, NeutralAtIntegerSquare) {
    const auto fr = monodromy(36.0, 0.0);
    EXPECT_EQ(fr.re_lambda1, 0.0);
    EXPECT_TRUE(fr.stable());
}

TEST(Monodromy, NegativeStiffnessGrowsAtUnitRate) {
    // u'' = u: multiplicator e^{2 pi}, exponent 1.
    EXPECT_NEAR(re_lambda1(-1.0, 0.0), 1.0, 1e-6);
}

TEST(Monodromy, FirstTongueIsUnstable) {
    EXPECT_GT(re_lambda1(1.0, 0.5), 0.0);
}

TEST(Monodromy, UnitDeterminant) {
    for (double Q : {0.5, 1.0, 9.5, 25.0, 36.0, 49.0}) {
        for (double R : {0.0, 3.0, 17.0, 40.0, 64.0}) {
            const auto fr = monodromy(Q, R);
            EXPECT_NEAR(fr.determinant, 1.0, 1e-9) << Q << " " << R;
            EXPECT_NEAR(std::abs(fr.rho1 * fr.rho2 - 1.0), 0.0, 1e-9) << Q << " " << R;
        }
    }
}

TEST(Monodromy, StabilityDichotomy) {
    for (double Q : {4.5, 16.0, 30.0}) {
        for (double R : {0.0, 5.0, 20.0, 50.0}) {
            const auto fr = monodromy(Q, R);
            if (std::abs(fr.trace) <= 2.0) {
                EXPECT_EQ(fr.re_lambda1, 0.0);
                EXPECT_NEAR(std::abs(fr.rho1), 1.0, 1e-12);
            } else {
                EXPECT_GT(fr.re_lambda1, 0.0);
                EXPECT_NEAR(fr.re_lambda1, std::log(std::abs(fr.rho1)) / kTwoPi, 1e-12);
            }
        }
    }
}

TEST(Monodromy, SymmetricInR) {
    for (double Q : {2.0, 25.0, 37.5}) {
        for (double R : {1.0, 12.0, 33.0}) {
            EXPECT_NEAR(re_lambda1(Q, R), re_lambda1(Q, -R), 1e-10);
        }
    }
}

TEST(Monodromy, RejectsBadInput) {
    EXPECT_THROW(monodromy(std::nan(""), 0.0), InvalidParameter);
    EXPECT_THROW(monodromy(1.0, 0.0, 1001), InvalidParameter);
}

TEST(Monodromy, AgreesWithRenormalisedRk4) {
    std::mt19937 gen(20240517);
    std::uniform_real_distribution<double> Qd(-2.0, 30.0), Rd(0.0, 20.0);
    int tested = 0;
    while (tested < 10) {
        const double Q = Qd(gen), R = Rd(gen);
        const double re = re_lambda1(Q, R);
        if (re < 0.05) continue;
        EXPECT_NEAR(growth_rate_oracle(Q, R), re, 0.02 * re) << "Q=" << Q << " R=" << R;
        ++tested;
    }
}

TEST(Damping, MultiplicatorWithoutParametricDrive) {
    EXPECT_NEAR(damped_multiplicator(36.04, 0.0, 0.1), std::exp(-0.4 * std::numbers::pi), 1e-12);
    EXPECT_NEAR(damped_multiplicator(36.04, 0.0, 0.1), 0.2846, 5e-5);
    EXPECT_NEAR(damped_multiplicator(36.0, 0.0, 0.0), 1.0, 1e-12);
}

TEST(Damping, ShiftedEquationMatchesSubstitution) {
    // x = u exp(-2 mu s) turns the damped equation into Hill's with Q = q - 4 mu^2.
    const double q = 30.0, r = 7.0, mu = 0.1;
    auto mp = MathieuParams::make(q, r, mu);
    const auto grid = IntegrationGrid::uniform(0, kTwoPi, kTwoPi / 20000);
    const auto x = rk4_integrate(DampedMathieuField{mp}, State<2>{1.0, 0.0}, grid);
    const auto u = rk4_integrate(Hill{mp.Q, r}, State<2>{1.0, 2.0 * mu}, grid);
    double worst = 0;
    for (std::size_t i = 0; i < x.size(); i += 10) {
        worst = std::max(worst, std::abs(x.states[i][0] - u.states[i][0] * std::exp(-2 * mu * x.time(i))));
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(Section, DissipationCrossingIsNeutral) {
    const auto section = stability_section(36.0, {0.0, 64.0}, 0.5, 1);
    const auto cross = dissipation_crossings(section, 0.1);
    ASSERT_FALSE(cross.empty());
    const double lo = std::max(0.0, cross.front() - 0.5), hi = cross.front() + 0.5;
    const double R = solve_exponent_level(36.0, 0.2, lo, hi);
    EXPECT_NEAR(re_lambda1(36.0, R), 0.2, 1e-8);
    EXPECT_NEAR(damped_multiplicator(36.04, R, 0.1), 1.0, 1e-6);
    EXPECT_THROW(solve_exponent_level(36.0, 0.2, 0.0, 1.0), InvalidParameter);
}

TEST(Surface, LatticeAndLayout) {
    const auto s = stability_surface({25.0, 26.0}, {0.0, 2.0}, 0.5, 2);
    EXPECT_EQ(s.Q.size(), 3u);
    EXPECT_EQ(s.R.size(), 5u);
    ASSERT_EQ(s.cells.size(), 15u);
    EXPECT_DOUBLE_EQ(s.at(2, 4).Q, 26.0);
    EXPECT_DOUBLE_EQ(s.at(2, 4).R, 2.0);
    for (const auto& c : s.cells) {
        EXPECT_NEAR(c.determinant, 1.0, 1e-9);
        if (std::abs(c.trace) <= 2.0) {
            EXPECT_EQ(c.re_lambda1, 0.0);
        }
    }
}

TEST(IntegralIndex, StableEnvelopeDecaysLinearly) {
    std::vector<double> tau, r;
    for (int i = 0; i <= 50; ++i) {
        tau.push_back(0.2 * i);
        r.push_back(0.0);
    }
    const auto L = integral_index(tau, r, 36.04, 0.1, 1);
    for (std::size_t i = 0; i < tau.size(); ++i) EXPECT_NEAR(L[i], -0.2 * tau[i], 1e-12);
    const auto L0 = integral_index(tau, r, 36.0, 0.0, 1);
    for (double v : L0) EXPECT_EQ(v, 0.0);
}

TEST(IntegralIndex, RejectsBadSamples) {
    EXPECT_THROW(integral_index({0.0, 1.0}, {0.0}, 36.0, 0.1), InvalidParameter);
    EXPECT_THROW(integral_index({0.0, 0.0}, {0.0, 0.0}, 36.0, 0.1), InvalidParameter);
    EXPECT_THROW(integral_index({0.0, 1.0}, {0.0, std::nan("")}, 36.0, 0.1), InvalidParameter);
}

TEST(ParticularSolution, UndampedClosedForm) {
    for (double a : {0.0, 0.7, 2.5}) {
        const auto mp = MathieuParams::make(36.0, 0.0, 0.0, a, 1.0);
        const auto ts = particular_solution(mp, 20.0, 1e-3);
        const double P = 4.0 / 35.0;
        double worst = 0;
        for (std::size_t i = 0; i < ts.size(); i += 7) {
            const double s = ts.time(i);
            const double exact = P * (std::cos(s - a / 2) - std::cos(a / 2) * std::cos(6 * s) -
                                      std::sin(a / 2) / 6.0 * std::sin(6 * s));
            worst = std::max(worst, std::abs(ts.states[i][0] - exact));
        }
        EXPECT_LT(worst, 1e-9) << "a=" << a;
    }
}

TEST(MathieuParams, FromEnvelope) {
    const auto mp = MathieuParams::from_envelope(3.0, std::complex<double>(0.0, -2.0), 0.1, 1.0);
    EXPECT_DOUBLE_EQ(mp.q, 36.0);
    EXPECT_DOUBLE_EQ(mp.r, 4.0);
    EXPECT_NEAR(mp.Q, 35.96, 1e-12);
    EXPECT_NEAR(mp.a, -std::numbers::pi / 2, 1e-15);
}
