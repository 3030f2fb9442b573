#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "gutp/channel.hpp"
#include "gutp/random.hpp"
#include "gutp/scenario.hpp"

using namespace gutp;

namespace {

// Term-by-term absorption in dB/km, independent of the library.
double absorption_oracle_db_per_km(double f) {
    const double f2 = f * f;
    const double t1 = 0.11 * f2 / (1.0 + f2);
    const double t2 = 44.0 * f2 / (4100.0 + f2);
    const double t3 = 2.75e-4 * f2;
    return t1 + t2 + t3 + 0.003;
}

}  // namespace

TEST(Absorption, NineKilohertzPrintedValue) {
    const double a = absorption_coefficient(9.0);
    EXPECT_NEAR(a, 9.86e-4, 0.005e-4);
    EXPECT_NEAR(a, absorption_oracle_db_per_km(9.0) / 1000.0, 1e-18);
}

TEST(Absorption, ZeroFrequencyIsConstantTerm) { EXPECT_EQ(absorption_coefficient(0.0), 0.003 * 1e-3); }

TEST(Absorption, TwentyFiveKilohertz) {
    EXPECT_NEAR(absorption_coefficient(25.0), 6.1048e-3, 0.00005e-3);
    EXPECT_NEAR(absorption_coefficient(25.0), absorption_oracle_db_per_km(25.0) / 1000.0, 1e-17);
}

TEST(Absorption, IncreasesWithFrequency) {
    double prev = absorption_coefficient(0.0);
    for (double f = 0.5; f <= 100.0; f += 0.5) {
        const double a = absorption_coefficient(f);
        EXPECT_GT(a, prev);
        prev = a;
    }
}

TEST(Absorption, NegativeFrequencyIsDomainError) {
    EXPECT_THROW(absorption_coefficient(-1.0), DomainError);
}

TEST(Absorption, FloatInstantiation) { EXPECT_NEAR(absorption_coefficient(9.0f), 9.86e-4f, 1e-6f); }

TEST(NoiselessRss, ReferenceDistanceGivesTransmitPower) {
    const Environment env = Environment::underwater(2.0, 9.0, 13.5, 1.0);
    EXPECT_DOUBLE_EQ(noiseless_rss({1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, env), 13.5);
}

TEST(NoiselessRss, PureLogDistance) {
    const Environment env{2.0, 0.0, 0.0, 0.0, 1.0};
    EXPECT_NEAR(noiseless_rss({100.0, 0.0}, {0.0, 0.0}, env), -40.0, 1e-12);
}

TEST(NoiselessRss, OneKilometerWithAbsorption) {
    const Environment env = Environment::underwater(2.0, 9.0, 0.0, 1.0);
    const double oracle = -20.0 * std::log10(1000.0) - absorption_oracle_db_per_km(9.0) / 1000.0 * 999.0;
    const double p = noiseless_rss({1000.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, env);
    EXPECT_NEAR(p, oracle, 1e-12);
    EXPECT_NEAR(p, -60.985, 1e-3);
}

TEST(NoiselessRss, InsideReferenceDistanceIsDomainError) {
    const Environment env = Environment::underwater(2.0, 9.0, 0.0, 1.0);
    EXPECT_THROW(noiseless_rss({0.5, 0.0}, {0.0, 0.0}, env), DomainError);
}

TEST(NoiselessRss, DecreasesWithDistance) {
    const Environment env = Environment::underwater(2.0, 9.0, 0.0, 1.0);
    double prev = noiseless_rss({1.0, 0.0}, {0.0, 0.0}, env);
    for (double d = 2.0; d < 20000.0; d *= 1.3) {
        const double p = noiseless_rss({d, 0.0}, {0.0, 0.0}, env);
        EXPECT_LT(p, prev);
        prev = p;
    }
}

namespace {

struct Moments {
    double mean = 0.0;
    double sd = 0.0;
};

Moments draw(const NoiseModel& m, std::size_t n, std::uint64_t seed) {
    NoiseEngine rng(seed);
    double s = 0.0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = sample_noise(m, rng);
        s += x;
        s2 += x * x;
    }
    const double mean = s / static_cast<double>(n);
    return {mean, std::sqrt(s2 / static_cast<double>(n) - mean * mean)};
}

}  // namespace

TEST(Noise, ZeroMeanGaussianMillionDraws) {
    const auto mo = draw(NoiseModel::zero_mean(3.0), 1000000, 1);
    EXPECT_NEAR(mo.mean, 0.0, 0.01 * 3.0);
    EXPECT_NEAR(mo.sd, 3.0, 0.02);
}

TEST(Noise, BiasedGaussianMillionDraws) {
    const auto mo = draw(NoiseModel::biased(3.0, 2.0), 1000000, 2);
    EXPECT_NEAR(mo.mean, 2.0, 0.01 * 3.0);
    EXPECT_NEAR(mo.sd, 3.0, 0.02);
}

TEST(Noise, ImpulsiveMatchesVariance) {
    const NoiseModel m = NoiseModel::impulsive(3.0);
    const auto mo = draw(m, 1000000, 3);
    EXPECT_NEAR(mo.sd, 3.0, 0.02);
    EXPECT_NEAR(mo.mean, m.expected_mean(), 0.01 * 3.0);
    EXPECT_NEAR(m.expected_mean(), 2.0 + 3.0 * std::sqrt(6.0) / 2.0, 1e-12);
}

TEST(Noise, ScenarioFactory) {
    EXPECT_EQ(NoiseModel::scenario(1, 2.0).kind, NoiseKind::zero_mean_gaussian);
    EXPECT_EQ(NoiseModel::scenario(2, 2.0).kind, NoiseKind::biased_gaussian);
    EXPECT_EQ(NoiseModel::scenario(3, 2.0).kind, NoiseKind::gaussian_plus_impulsive);
    EXPECT_THROW(NoiseModel::scenario(4, 2.0), ConfigError);
}

TEST(Noise, WithSigmaKeepsImpulsiveBoundConsistent) {
    const NoiseModel m = NoiseModel::impulsive(1.0).with_sigma(4.0);
    EXPECT_DOUBLE_EQ(m.sigma_db, 4.0);
    EXPECT_DOUBLE_EQ(m.impulsive_upper_db, 4.0 * std::sqrt(6.0));
}

TEST(Noise, ValidateRejectsBadSigma) {
    EXPECT_THROW(NoiseModel::zero_mean(0.0).validate(), ConfigError);
    EXPECT_THROW(NoiseModel::zero_mean(-1.0).validate(), ConfigError);
}

TEST(Measurements, TinySigmaMatchesNoiseless) {
    const Scenario s = reference_scenario();
    const auto m = generate_measurements(s, NoiseModel::zero_mean(1e-12),
                                         [](std::size_t a) { return make_stream(9, 0, a); });
    ASSERT_EQ(m.size(), s.anchor_count());
    for (std::size_t i = 0; i < m.size(); ++i) {
        EXPECT_NEAR(m.rss_dbm[i], noiseless_rss(s.target_m, s.anchors_m[i], s.environment), 1e-9);
        EXPECT_EQ(m.anchor_index[i], i);
    }
}

TEST(Measurements, SameSeedIsByteIdentical) {
    const Scenario s = reference_scenario();
    const auto a = generate_measurements(s, NoiseModel::zero_mean(3.0),
                                         [](std::size_t i) { return make_stream(20250101, 42, i); });
    const auto b = generate_measurements(s, NoiseModel::zero_mean(3.0),
                                         [](std::size_t i) { return make_stream(20250101, 42, i); });
    ASSERT_EQ(a.rss_dbm.size(), b.rss_dbm.size());
    EXPECT_EQ(0, std::memcmp(a.rss_dbm.data(), b.rss_dbm.data(), a.rss_dbm.size() * sizeof(double)));
    EXPECT_EQ(a.anchor_index, b.anchor_index);
}

TEST(Measurements, SingleEngineOverload) {
    const Scenario s = reference_scenario();
    NoiseEngine r1(5);
    NoiseEngine r2(5);
    const auto a = generate_measurements(s, NoiseModel::zero_mean(2.0), r1);
    const auto b = generate_measurements(s, NoiseModel::zero_mean(2.0), r2);
    EXPECT_EQ(a.rss_dbm, b.rss_dbm);
}

TEST(Measurements, SingleAnchorOneKilometer) {
    Scenario s;
    s.anchors_m = {{0.0, 0.0, 0.0}};
    s.target_m = {1000.0, 0.0, 0.0};
    s.environment = Environment::underwater(2.0, 9.0, 0.0, 1.0);
    NoiseEngine rng(1);
    const auto m = generate_measurements(s, NoiseModel::zero_mean(1e-300), rng);
    EXPECT_NEAR(m.rss_dbm[0], -60.985, 1e-3);
}

TEST(Measurements, LabelsSelectStreams) {
    const Scenario full = reference_scenario();
    const Scenario part = with_anchor_prefix(full, 6);
    const auto stream = [](std::size_t a) { return make_stream(3, 7, a); };
    const auto a = generate_measurements(full, NoiseModel::zero_mean(2.0), stream);
    const auto b = generate_measurements(part, NoiseModel::zero_mean(2.0), stream);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(a.rss_dbm[i], b.rss_dbm[i]);
}

TEST(Random, StreamsDifferAcrossTrialsAndAnchors) {
    EXPECT_NE(stream_seed(1, 0, 0), stream_seed(1, 1, 0));
    EXPECT_NE(stream_seed(1, 0, 0), stream_seed(1, 0, 1));
    EXPECT_NE(stream_seed(1, 0, 0), stream_seed(2, 0, 0));
    EXPECT_EQ(stream_seed(1, 2, 3), stream_seed(1, 2, 3));
    auto a = make_stream(1, 0, 0);
    auto b = make_stream(1, 1, 0);
    EXPECT_NE(a(), b());
}
