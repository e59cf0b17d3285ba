#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "resonant/oscillator.hpp"

using namespace resonant;

TEST(Nondim, ReferenceParameters) {
    const auto np = nondimensionalize(OscParams::reference());
    EXPECT_DOUBLE_EQ(np.lambda, 3.0);
    EXPECT_DOUBLE_EQ(np.varepsilon, 0.2);
    EXPECT_DOUBLE_EQ(np.f, 1.0);
    EXPECT_DOUBLE_EQ(np.mu, 0.1);
}

TEST(Nondim, ScalesWithOmega) {
    const OscParams p{5.0, 2.0, 8.0, 0.4, 0.8, 1.5};
    const auto np = nondimensionalize(p);
    EXPECT_DOUBLE_EQ(np.lambda, 2.5);
    EXPECT_DOUBLE_EQ(np.varepsilon, 0.2);
    EXPECT_DOUBLE_EQ(np.f, 2.0);
    EXPECT_DOUBLE_EQ(np.mu, 0.2);
    EXPECT_DOUBLE_EQ(np.delta, 1.5);
}

TEST(Nondim, RoundTrip) {
    const OscParams p{4.2, 1.7, 0.9, 0.05, 0.31, 2.0};
    const auto q = to_dimensional(nondimensionalize(p), p.Omega);
    EXPECT_NEAR(q.omega, p.omega, 1e-14);
    EXPECT_NEAR(q.A, p.A, 1e-14);
    EXPECT_NEAR(q.nu, p.nu, 1e-14);
    EXPECT_NEAR(q.eps, p.eps, 1e-14);
    EXPECT_DOUBLE_EQ(q.delta, p.delta);
}

TEST(Nondim, ThetaAndPhysicalTrajectoriesCoincide) {
    OscParams p{5.0, 2.0, 1.0, 0.1, 0.3, 1.0};
    const OscState init{0.1, 0.0, 0.05, 0.0};
    const double t_end = 20.0, h = 1e-3;
    const auto phys = simulate(p, init, t_end, h);
    const NondimField nf{nondimensionalize(p)};
    const OscState init_theta{init[0], init[1] / p.Omega, init[2], init[3] / p.Omega};
    const auto nd = rk4_integrate(nf, init_theta, IntegrationGrid::uniform(0, p.Omega * t_end, p.Omega * h));
    ASSERT_EQ(phys.size(), nd.size());
    double worst = 0;
    for (std::size_t i = 0; i < phys.size(); i += 97) {
        worst = std::max(worst, std::abs(phys.states[i][0] - nd.states[i][0]));
        worst = std::max(worst, std::abs(phys.states[i][2] - nd.states[i][2]));
        worst = std::max(worst, std::abs(phys.states[i][1] - p.Omega * nd.states[i][1]));
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(Oscillator, DecoupledDrivenResponseMatchesClosedForm) {
    OscParams p{3.0, 1.0, 1.0, 0.1, 0.0, 1.0};
    const double w = 0.5 * p.Omega;
    const double k = p.omega * p.omega - w * w;
    const double den = k * k + p.nu * p.nu * w * w;
    const double C = p.A * k / den, D = p.A * p.nu * w / den;
    const double wd = std::sqrt(p.omega * p.omega - 0.25 * p.nu * p.nu);
    const double a = -C;
    const double b = (0.5 * p.nu * a - w * D) / wd;
    auto exact = [&](double t) {
        return C * std::cos(w * t) + D * std::sin(w * t) +
               std::exp(-0.5 * p.nu * t) * (a * std::cos(wd * t) + b * std::sin(wd * t));
    };
    const auto ts = simulate(p, OscState{}, 50.0, 1e-3, Method::rk4, true);
    double worst = 0;
    for (std::size_t i = 0; i < ts.size(); i += 53) {
        worst = std::max(worst, std::abs(ts.states[i][0] - exact(ts.time(i))));
        EXPECT_EQ(ts.states[i][2], 0.0);
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(Oscillator, GrowthLineAtReferenceParameters) {
    EXPECT_NEAR(linear_growth_line(OscParams::reference()), 0.8 / 1225.0, 1e-15);
}

TEST(Oscillator, ResonantDenominatorRejected) {
    OscParams p;
    p.omega = 0.5;
    EXPECT_THROW(linear_growth_line(p), ResonantDenominator);
    EXPECT_THROW(p.validate(), ResonantDenominator);
}

TEST(Oscillator, ValidationRejectsBadValues) {
    OscParams p;
    p.eps = 0.0;
    EXPECT_THROW(p.validate(), InvalidParameter);
    EXPECT_NO_THROW(p.validate(true));
    p = {};
    p.nu = -1;
    EXPECT_THROW(p.validate(), InvalidParameter);
    p = {};
    p.Omega = std::nan("");
    EXPECT_THROW(p.validate(), InvalidParameter);
}

TEST(Oscillator, DefaultStepResolvesFastPeriod) {
    const auto p = OscParams::reference();
    EXPECT_EQ(default_samples_per_period(p), 600u);
    EXPECT_NEAR(default_step(p) * 600.0, 2.0 * std::numbers::pi, 1e-14);
}

TEST(Oscillator, InitialEnvelopeSlopeMatchesGrowthLine) {
    const auto p = OscParams::reference();
    const auto ts = simulate(p, OscState{}, 2000.0, default_step(p));
    const auto fit = fit_initial_slope(p, ts);
    EXPECT_NEAR(fit.ratio_y(), 1.0, 0.1);
    EXPECT_EQ(fit.best_normalization(), "y");
}

TEST(Envelope, PeaksOfModulatedSine) {
    std::vector<double> t, s;
    for (int i = 0; i <= 200000; ++i) {
        t.push_back(i * 1e-3);
        s.push_back((1.0 + 0.01 * t.back()) * std::sin(t.back()));
    }
    const auto peaks = envelope_peaks(t, s);
    ASSERT_GE(peaks.size(), 60u);
    EXPECT_NEAR(peaks.front().t, std::numbers::pi / 2, 0.02);
    const auto fit = fit_line(peaks, 0, 200);
    EXPECT_NEAR(fit.slope, 0.01, 1e-4);
    EXPECT_NEAR(fit.intercept, 1.0, 1e-2);
    EXPECT_NEAR(envelope_at(peaks, 100.0), 2.0, 0.02);
}

TEST(Envelope, FitNeedsTwoPoints) {
    std::vector<EnvelopePeak> one{{1.0, 2.0}};
    EXPECT_THROW(fit_line(one, 0, 10), TooFewPoints);
}

TEST(Envelope, ExtremaAlternate) {
    std::vector<EnvelopePeak> peaks;
    for (int i = 0; i < 2000; ++i) {
        const double t = i * 0.5;
        peaks.push_back({t, 2.0 + std::sin(0.01 * t)});
    }
    const auto ex = envelope_extrema(peaks, 0.05);
    ASSERT_GE(ex.size(), 2u);
    EXPECT_TRUE(ex[0].is_maximum);
    EXPECT_NEAR(ex[0].t, 50 * std::numbers::pi, 0.5);
    EXPECT_NEAR(ex[0].value, 3.0, 1e-6);
    EXPECT_FALSE(ex[1].is_maximum);
    EXPECT_NEAR(ex[1].t, 150 * std::numbers::pi, 0.5);
}
