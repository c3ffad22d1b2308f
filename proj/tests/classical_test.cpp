#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "qtrack/butterworth.hpp"
#include "qtrack/discrete.hpp"
#include "qtrack/music.hpp"
#include "qtrack/periodogram.hpp"
#include "qtrack/quinn_fernandes.hpp"
#include "qtrack/rng.hpp"
#include "qtrack/sme.hpp"

namespace {

using namespace qtrack;

constexpr double kPi = std::numbers::pi;

DiscreteRecord tone(std::size_t n, double theta, double phase = 0.0, double amp = 1.0, double dt = 1.0) {
    DiscreteRecord d{std::vector<double>(n), dt};
    for (std::size_t i = 0; i < n; ++i) d.samples[i] = amp * std::cos(theta * static_cast<double>(i) + phase);
    return d;
}

DiscreteRecord white(std::size_t n, double sd, std::uint64_t seed, double dt = 1.0) {
    RngStream rng(seed, 0);
    DiscreteRecord d{std::vector<double>(n), dt};
    for (double& v : d.samples) v = sd * rng.normal();
    return d;
}

template <class Fn>
ErrorKind kind_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::Io;
}

// ---------------------------------------------------------------- decimation

TEST(Decimate, DefaultRatesGiveEightyStepsPerSample) {
    EXPECT_EQ(steps_per_sample(1.0 / 4000, 50, 2 * kPi), 80u);
    EXPECT_EQ(kind_of([] { steps_per_sample(1.0 / 4000, 30, 2 * kPi); }), ErrorKind::IncompatibleSteps);
}

TEST(Decimate, PartitionsTheSum) {
    const SimParams p = SimParams::from_dimensionless(0.07);
    RngStream rng(4, 0);
    const auto rec = simulate_record(p, kSpinUp, 80 * 100 + 37, rng);
    const auto d = decimate(rec, 50, 2 * kPi);
    ASSERT_EQ(d.size(), 100u);
    EXPECT_NEAR(d.delta_t, 0.02, 1e-15);
    const double coarse = std::accumulate(d.samples.begin(), d.samples.end(), 0.0);
    const double fine = std::accumulate(rec.increments.begin(), rec.increments.begin() + 8000, 0.0);
    EXPECT_NEAR(coarse, fine, 1e-12);
}

TEST(Decimate, UnmeasuredRecordIsWhiteWithVarianceDeltaT) {
    const SimParams p = SimParams::from_dimensionless(0.0);
    RngStream rng(6, 0);
    const auto d = decimate(simulate_record(p, kSpinUp, 80 * 20000, rng), 50, 2 * kPi);
    double m = 0.0, v = 0.0, c1 = 0.0;
    for (double y : d.samples) m += y / static_cast<double>(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        v += (d.samples[i] - m) * (d.samples[i] - m) / static_cast<double>(d.size());
        if (i) c1 += (d.samples[i] - m) * (d.samples[i - 1] - m) / static_cast<double>(d.size());
    }
    EXPECT_NEAR(v / d.delta_t, 1.0, 0.04);
    EXPECT_NEAR(c1 / v, 0.0, 0.03);
}

TEST(SnrDb, FormulaValues) {
    EXPECT_NEAR(snr_db(0.12, 0.02), 10 * std::log10(0.0096), 1e-12);
    EXPECT_NEAR(snr_db(0.12, 0.02), -20.18, 0.01);
    EXPECT_NEAR(snr_db(0.03, 0.02), -26.2, 0.05);
    EXPECT_DOUBLE_EQ(snr_db(0.25, 1.0), 0.0);
}

// --------------------------------------------------------------- periodogram

TEST(Periodogram, MatchesDftBins) {
    const auto d = white(512, 1.0, 12, 0.02);
    const auto n = d.size();
    const double mean = std::accumulate(d.samples.begin(), d.samples.end(), 0.0) / static_cast<double>(n);
    for (std::size_t m = 1; m < n / 2; m += 7) {
        std::complex<double> bin{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i)
            bin += (d.samples[i] - mean) * std::polar(1.0, -2.0 * kPi * static_cast<double>(m * i % n) / static_cast<double>(n));
        const double omega = 2.0 * kPi * static_cast<double>(m) / (static_cast<double>(n) * d.delta_t);
        EXPECT_NEAR(periodogram(d, omega) / std::norm(bin), 1.0, 1e-9) << m;
    }
}

TEST(Periodogram, ToneDominatesDenseGrid) {
    const auto d = tone(1024, 0.3);
    const double peak = periodogram(d, 0.3);
    for (double w = 0.001; w < kPi; w += 0.0007) {
        if (std::abs(w - 0.3) < 2 * kPi / 1024) continue;
        ASSERT_LE(periodogram(d, w), peak) << w;
    }
}

TEST(Periodogram, ZeroRecordAndSymmetry) {
    const DiscreteRecord z{std::vector<double>(100, 0.0), 0.1};
    EXPECT_EQ(periodogram(z, 1.3), 0.0);
    const auto d = white(300, 1.0, 2, 0.1);
    for (double w : {0.3, 1.7, 5.2}) EXPECT_NEAR(periodogram(d, w), periodogram(d, -w), 1e-9 * periodogram(d, w));
}

TEST(PeriodogramMax, NoiselessToneIsExact) {
    const double w0 = 2 * kPi * 1.0037;
    const auto d = tone(2500, w0 * 0.02, 0.4, 1.0, 0.02);
    const auto e = periodogram_max(d, w0 * 0.9, w0 * 1.1);
    EXPECT_NEAR(e.mean, w0, 1e-4 * w0);
    EXPECT_FALSE(e.flagged());
    EXPECT_GT(e.info.at("refined_peak"), 0.0);
    EXPECT_LT(e.info.at("second_peak_ratio"), 1.0);
}

TEST(PeriodogramMax, WhiteNoiseIsFlaggedMostOfTheTime) {
    int flagged = 0;
    for (std::uint64_t s = 0; s < 40; ++s) {
        const auto d = white(25000, 0.1414, s, 0.02);
        flagged += periodogram_max(d, 2 * kPi * 0.9, 2 * kPi * 1.1).flagged() ? 1 : 0;
    }
    EXPECT_GE(flagged, 20);
}

TEST(PeriodogramMax, BandChecks) {
    const auto d = tone(100, 0.3);
    EXPECT_EQ(kind_of([&] { periodogram_max(d, 0.0, 0.5); }), ErrorKind::BandEmpty);
    EXPECT_EQ(kind_of([&] { periodogram_max(d, 0.5, 0.4); }), ErrorKind::BandEmpty);
    EXPECT_EQ(kind_of([&] { periodogram_max(d, 0.5, 3.2); }), ErrorKind::BandEmpty);
}

// ------------------------------------------------------------ Quinn-Fernandes

TEST(QuinnFernandes, NoiselessToneConverges) {
    const auto d = tone(2048, 0.3, 0.7);
    const auto e = quinn_fernandes(d, 0.32);
    EXPECT_NEAR(e.mean, 0.3, 1e-5);
    EXPECT_FALSE(e.flagged());
    EXPECT_EQ(e.traces.at("alpha").size(), e.iterations);
    EXPECT_EQ(e.traces.at("beta").size(), e.iterations);
    // With alpha <- beta each pass halves the frequency error, so reaching
    // |alpha - beta| <= 1e-6 from a 0.02 offset takes about 14 passes.
    EXPECT_LE(e.iterations, 16u);
}

TEST(QuinnFernandes, EachPassHalvesTheErrorOnACleanTone) {
    const auto d = tone(2048, 0.3, 0.7);
    const auto e = quinn_fernandes(d, 0.32);
    const auto& a = e.traces.at("alpha");
    for (std::size_t j = 0; j + 1 < 6; ++j) {
        const double r = (std::acos(a[j + 1] / 2) - 0.3) / (std::acos(a[j] / 2) - 0.3);
        EXPECT_NEAR(r, 0.5, 0.05) << j;
    }
}

TEST(QuinnFernandes, FixedPointStopsImmediately) {
    // Restarting at a converged answer stops after a single pass.
    const auto d = tone(4096, 0.9, 0.1);
    const auto first = quinn_fernandes(d, 0.95);
    const auto again = quinn_fernandes(d, first.mean);
    EXPECT_EQ(again.iterations, 1u);
    EXPECT_NEAR(again.mean, first.mean, 1e-6);
}

TEST(QuinnFernandes, PrintedRecursionDoesNotRecoverTheTone) {
    const auto d = tone(2048, 0.3, 0.7);
    QfOptions opt;
    opt.recursion = QfRecursion::AsPrinted;
    bool failed = false;
    try {
        const auto e = quinn_fernandes(d, 0.32, opt);
        failed = e.flagged() || std::abs(e.mean - 0.3) > 1e-3;
    } catch (const Error& err) {
        failed = err.kind() == ErrorKind::OutOfRange;
    }
    EXPECT_TRUE(failed);
}

TEST(QuinnFernandes, ArgumentChecks) {
    const auto d = tone(100, 0.3);
    EXPECT_EQ(kind_of([&] { quinn_fernandes(d, 0.0); }), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of([&] { quinn_fernandes(d, 3.2); }), ErrorKind::InvalidArgument);
}

TEST(QuinnFernandes, IterationCapFlags) {
    RngStream rng(3, 3);
    auto d = tone(512, 0.3, 0.2, 0.2);
    for (double& v : d.samples) v += rng.normal();
    QfOptions opt;
    opt.max_iter = 1;
    opt.tol = 1e-15;
    const auto e = quinn_fernandes(d, 0.5, opt);
    EXPECT_EQ(e.status, EstimateStatus::NoConvergence);
    EXPECT_EQ(e.info.at("converged"), 0.0);
}

// ---------------------------------------------------------- autocovariances

TEST(Autocovariance, ConstantRecordIsZero) {
    const DiscreteRecord d{std::vector<double>(200, 3.5), 1.0};
    const auto c = autocovariance_toeplitz(d, 5);
    for (double v : c.lags) EXPECT_NEAR(v, 0.0, 1e-24);
}

TEST(Autocovariance, WhiteNoise) {
    const double sd = 1.7;
    const std::size_t n = 200000;
    const auto c = autocovariance_toeplitz(white(n, sd, 8), 5);
    const double tol = 5 * sd * sd / std::sqrt(static_cast<double>(n));
    EXPECT_NEAR(c.lags[0], sd * sd, 5 * tol);
    for (std::size_t j = 1; j < 5; ++j) EXPECT_NEAR(c.lags[j], 0.0, tol);
}

TEST(Autocovariance, ToneClosedForm) {
    const double a = 2.0, w = 0.37;
    const std::size_t n = 20000;
    const auto c = autocovariance_toeplitz(tone(n, w, 0.0, a), 5);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(c.lags[j], 0.5 * a * a * std::cos(w * static_cast<double>(j)), 20.0 / n);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            EXPECT_EQ(c.at(i, j), c.at(j, i));
            EXPECT_EQ(c.at(i, j), c.lags[i > j ? i - j : j - i]);
        }
}

TEST(Autocovariance, Preconditions) {
    EXPECT_EQ(kind_of([] { autocovariance_toeplitz(tone(100, 0.3), 2); }), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of([] { autocovariance_toeplitz(tone(19, 0.3), 5); }), ErrorKind::RecordTooShort);
}

// ---------------------------------------------------------------- Jacobi

TEST(SymmetricEig, Identity) {
    std::vector<double> a(25, 0.0);
    for (int i = 0; i < 5; ++i) a[i * 5 + i] = 1.0;
    const auto e = symmetric_eig(a, 5);
    for (double v : e.values) EXPECT_EQ(v, 1.0);
}

TEST(SymmetricEig, DiagonalIsSortedAscending) {
    const auto e = symmetric_eig({3, 0, 0, 0, 1, 0, 0, 0, 2}, 3);
    EXPECT_EQ(e.values, (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(std::abs(e.vectors[0][1]), 1.0);
}

TEST(SymmetricEig, RandomReconstructionAndOrthonormality) {
    RngStream rng(10, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 5;
        std::vector<double> a(m * m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i; j < m; ++j) a[i * m + j] = a[j * m + i] = rng.normal();
        const auto e = symmetric_eig(a, m);
        double fro = 0.0;
        for (double v : a) fro += v * v;
        fro = std::sqrt(fro);
        for (std::size_t i = 0; i + 1 < m; ++i) EXPECT_LE(e.values[i], e.values[i + 1]);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                double rec = 0.0, dot = 0.0;
                for (std::size_t q = 0; q < m; ++q) rec += e.values[q] * e.vectors[q][i] * e.vectors[q][j];
                for (std::size_t q = 0; q < m; ++q) dot += e.vectors[i][q] * e.vectors[j][q];
                ASSERT_NEAR(rec, a[i * m + j], 1e-10);
                ASSERT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-10);
            }
        // Residual |C v - g v| <= 1e-10 |C|.
        for (std::size_t q = 0; q < m; ++q)
            for (std::size_t i = 0; i < m; ++i) {
                double cv = 0.0;
                for (std::size_t j = 0; j < m; ++j) cv += a[i * m + j] * e.vectors[q][j];
                ASSERT_NEAR(cv, e.values[q] * e.vectors[q][i], 1e-10 * fro);
            }
    }
}

TEST(SymmetricEig, SizeLimits) {
    EXPECT_EQ(kind_of([] { symmetric_eig({1, 2, 3}, 2); }), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of([] { symmetric_eig(std::vector<double>(33 * 33, 0.0), 33); }), ErrorKind::InvalidArgument);
}

// --------------------------------------------------------------------- MUSIC

TEST(Music, ExactCovarianceNullsTheSteeringVector) {
    // C_j = (A^2 / 2) cos(theta j) has an exactly rank-2 signal subspace.
    const double dt = 0.02, w0 = 2 * kPi * 1.013;
    std::vector<double> a(25);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            a[i * 5 + j] = 0.5 * std::cos(w0 * dt * (static_cast<double>(i) - static_cast<double>(j)));
    const auto eig = symmetric_eig(a, 5);
    EXPECT_LT(eig.values[2], 1e-12);
    const double at = music_spectrum(eig, 3, w0, dt);
    for (double f : {0.99, 0.999, 1.001, 1.01}) EXPECT_GT(at, 1e6 * music_spectrum(eig, 3, w0 * f, dt));
}

TEST(Music, NoiselessTonePeaksAtTheTone) {
    const double dt = 0.14, w0 = 2 * kPi * 1.013;
    const auto d = tone(50000, w0 * dt, 0.3, 1.0, dt);
    const auto e = music_estimate(d, w0 * 0.9, w0 * 1.1);
    EXPECT_NEAR(e.mean, w0, 1e-4 * w0);
    EXPECT_EQ(e.info.at("noise_dim"), 3.0);
    EXPECT_FALSE(e.flagged());
    EXPECT_EQ(e.info.at("at_band_edge"), 0.0);
    // Three eigenvalues sit near zero; the biased autocovariance leaves O(1/N) residue.
    const auto& ev = e.traces.at("eigenvalues");
    EXPECT_LT(ev[2], 1e-3 * ev[4]);
    EXPECT_GT(ev[3], 0.1 * ev[4]);
}

TEST(Music, OversampledToneErrorShrinksWithLength) {
    // At 50 samples per period the steering vectors of nearby frequencies are
    // nearly parallel, so the O(1/N) covariance residue moves the peak.
    const double dt = 0.02, w0 = 2 * kPi * 1.013;
    const double short_err = std::abs(music_estimate(tone(5000, w0 * dt, 0.3, 1.0, dt), w0 * 0.9, w0 * 1.1).mean / w0 - 1);
    const double long_err = std::abs(music_estimate(tone(50000, w0 * dt, 0.3, 1.0, dt), w0 * 0.9, w0 * 1.1).mean / w0 - 1);
    EXPECT_LT(short_err, 5e-3);
    EXPECT_LT(long_err, 0.25 * short_err);
}

TEST(Music, PrintedSubspaceRunsToTheBandEdge) {
    // With four noise vectors one of them lies in the signal plane and the
    // spectrum has no interior peak.
    const double dt = 0.02, w0 = 2 * kPi;
    const auto d = tone(5000, w0 * dt, 0.3, 1.0, dt);
    MusicOptions opt;
    opt.subspace = NoiseSubspace::AsPrinted;
    EXPECT_EQ(music_estimate(d, w0 * 0.9, w0 * 1.1, opt).info.at("at_band_edge"), 1.0);
}

TEST(Music, PrintedSubspaceUsesFourNoiseVectors) {
    MusicOptions opt;
    opt.subspace = NoiseSubspace::AsPrinted;
    EXPECT_EQ(noise_dimension(opt), 4u);
    opt.subspace = NoiseSubspace::RealRank2;
    EXPECT_EQ(noise_dimension(opt), 3u);
}

TEST(Music, WhiteNoiseIsFlagged) {
    int flagged = 0;
    for (std::uint64_t s = 0; s < 20; ++s)
        flagged += music_estimate(white(20000, 1.0, 100 + s, 0.02), 2 * kPi * 0.9, 2 * kPi * 1.1).flagged() ? 1 : 0;
    EXPECT_GE(flagged, 15);
}

TEST(Music, PrefilteredNoisyToneLandsNearTheTruth) {
    const double dt = 0.02, w0 = 2 * kPi;
    RngStream rng(55, 0);
    auto d = tone(25000, w0 * dt, 0.3, 1.0, dt);
    for (double& v : d.samples) v += 3.0 * rng.normal();
    const auto e = music_prefiltered(d, w0 * 1.01);
    EXPECT_NEAR(e.mean, w0, 0.01 * w0);
    EXPECT_GT(e.info.at("skipped_samples"), 0.0);
}

TEST(EstimatorSanity, AllThreeAgreeOnANoiselessTone) {
    const double dt = 0.14, w0 = 2 * kPi * 0.987;
    const auto d = tone(50000, w0 * dt, 1.1, 1.0, dt);
    const auto p = periodogram_max(d, w0 * 0.9, w0 * 1.1);
    const auto q = quinn_fernandes(d, w0 * 1.01);
    const auto m = music_estimate(d, w0 * 0.9, w0 * 1.1);
    EXPECT_NEAR(p.mean, w0, 1e-4 * w0);
    EXPECT_NEAR(q.mean, w0, 1e-4 * w0);
    EXPECT_NEAR(m.mean, w0, 1e-4 * w0);
}

// ---------------------------------------------------------------- Butterworth

TEST(Butterworth, InBandUnityAndStopbandAttenuation) {
    const double dt = 0.02, wc = 2 * kPi;
    const ButterworthBandpass f(wc * 0.9, wc * 1.1, dt, 4);
    EXPECT_NEAR(std::abs(f.response(wc, dt)), 1.0, 0.01);
    EXPECT_LE(20 * std::log10(std::abs(f.response(2 * wc, dt))), -30.0);
    EXPECT_LE(20 * std::log10(std::abs(f.response(0.5 * wc, dt))), -30.0);
    // Gain is normalized at the prewarped centre.
    EXPECT_NEAR(std::abs(f.response(f.center() * 1.0, dt)), 1.0, 1e-12);
}

TEST(Butterworth, SteadyStateToneAmplitude) {
    const double dt = 0.02, wc = 2 * kPi;
    const auto d = tone(5000, wc * dt, 0.0, 1.0, dt);
    const auto y = butterworth_bandpass(d, wc);
    double peak = 0.0;
    for (std::size_t i = 4000; i < y.size(); ++i) peak = std::max(peak, std::abs(y.samples[i]));
    EXPECT_NEAR(peak, 1.0, 0.01);
}

TEST(Butterworth, PolesInsideUnitCircle) {
    for (std::size_t order : {1u, 2u, 3u, 4u, 6u}) {
        for (double frac : {0.02, 0.1, 0.3}) {
            const ButterworthBandpass f(2 * kPi * (1 - frac), 2 * kPi * (1 + frac), 0.02, order);
            EXPECT_EQ(f.poles().size(), 2 * order);
            for (const auto& z : f.poles()) EXPECT_LT(std::abs(z), 1.0);
            EXPECT_GT(f.transient_samples(), 0u);
        }
    }
}

TEST(Butterworth, ZeroInZeroOut) {
    const DiscreteRecord z{std::vector<double>(300, 0.0), 0.02};
    const auto y = butterworth_bandpass(z, 2 * kPi);
    for (double v : y.samples) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(y.size(), z.size());
}

TEST(Butterworth, BandOutOfRange) {
    const DiscreteRecord z{std::vector<double>(300, 0.0), 0.02};
    EXPECT_EQ(kind_of([&] { butterworth_bandpass(z, 150.0); }), ErrorKind::BandOutOfRange);
    EXPECT_EQ(kind_of([&] { butterworth_bandpass(z, 2 * kPi, 1.5); }), ErrorKind::BandOutOfRange);
}

} // namespace
