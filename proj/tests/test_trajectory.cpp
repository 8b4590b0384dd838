#include <gtest/gtest.h>

#include "synthstab/errors.hpp"
#include "synthstab/fft.hpp"
#include "synthstab/textio.hpp"
#include "synthstab/trajectory.hpp"
#include "test_util.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace synthstab;

namespace {

std::vector<double> random_signal(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> s(n);
    for (double& v : s) v = g(rng);
    return s;
}

// Direct least-squares line through the window, evaluated at `at`.
double line_fit_at(std::span<const double> y, std::size_t first, std::size_t count, double at) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const double x = static_cast<double>(first + k);
        sx += x;
        sy += y[first + k];
        sxx += x * x;
        sxy += x * y[first + k];
    }
    const double n = static_cast<double>(count);
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    return intercept + slope * at;
}

// Direct least-squares polynomial of any degree through the window (local
// abscissae, Householder QR), evaluated at `at`.
double poly_fit_at(std::span<const double> y, std::size_t first, std::size_t count, int degree, double at) {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(count), degree + 1);
    Eigen::VectorXd b(static_cast<Eigen::Index>(count));
    const double mid = static_cast<double>(first) + 0.5 * static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) {
        const double x = static_cast<double>(first + k) - mid;
        for (int d = 0; d <= degree; ++d) a(static_cast<Eigen::Index>(k), d) = std::pow(x, d);
        b(static_cast<Eigen::Index>(k)) = y[first + k];
    }
    const Eigen::VectorXd c = a.householderQr().solve(b);
    double v = 0.0;
    for (int d = degree; d >= 0; --d) v = v * (at - mid) + c(d);
    return v;
}

// Brute-force smoother: centred window in the interior, first / last full
// window at the ends.
std::vector<double> brute_force_sg(std::span<const double> y, int window, int degree) {
    const std::size_t n = y.size(), w = static_cast<std::size_t>(window), half = w / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t first = i < half ? 0 : i - half;
        if (first + w > n) first = n - w;
        const double at = static_cast<double>(i);
        out[i] = degree == 1 ? line_fit_at(y, first, w, at) : poly_fit_at(y, first, w, degree, at);
    }
    return out;
}

double band_energy(const std::vector<double>& s) {
    const auto spec = fft_real(s);
    double e = 0;
    for (std::size_t k = 2; k <= 6; ++k) e += std::norm(spec[k]);
    return e;
}

}  // namespace

// =============================================================================
// Accumulation
// =============================================================================

TEST(Accumulate, ZeroMotion) {
    const std::vector<AffineParams> params(5, AffineParams::identity());
    const Trajectory t = accumulate(params);
    ASSERT_EQ(t.size(), 5u);
    for (const auto* s : t.series()) {
        for (double v : *s) EXPECT_EQ(v, 0.0);
    }
}

TEST(Accumulate, ConstantTranslation) {
    const std::vector<AffineParams> params(4, AffineParams{1, 0, 0, 1});
    EXPECT_EQ(accumulate(params).tx, (std::vector<double>{1, 2, 3, 4}));
}

TEST(Accumulate, ScaleInLogSpace) {
    const std::vector<AffineParams> params{{0, 0, 0, 2.0}, {0, 0, 0, 0.5}, {0, 0, 0, 4.0}};
    const Trajectory t = accumulate(params);
    EXPECT_NEAR(t.log_s[0], std::log(2.0), 1e-15);
    EXPECT_NEAR(t.log_s[1], 0.0, 1e-15);
    EXPECT_NEAR(t.log_s[2], std::log(4.0), 1e-15);
}

TEST(Accumulate, DifferencesInvert) {
    std::mt19937_64 rng(3);
    std::vector<AffineParams> params;
    for (int i = 0; i < 200; ++i) {
        AffineParams p = synthstab::testing::random_params(rng, 5.0);
        p.theta *= 0.1;
        params.push_back(p);
    }
    const auto back = differences(accumulate(params));
    ASSERT_EQ(back.size(), params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        EXPECT_NEAR(back[i].tx, params[i].tx, 1e-12);
        EXPECT_NEAR(back[i].ty, params[i].ty, 1e-12);
        EXPECT_NEAR(back[i].theta, params[i].theta, 1e-12);
        EXPECT_NEAR(back[i].s, params[i].s, 1e-12);
    }
}

// =============================================================================
// Extrema and envelopes
// =============================================================================

TEST(Extrema, Alternating) {
    const std::vector<double> s{0, 1, 0, 1, 0};
    const Extrema e = find_extrema(s);
    EXPECT_EQ(e.maxima, (std::vector<std::size_t>{0, 1, 3, 4}));
    EXPECT_EQ(e.minima, (std::vector<std::size_t>{0, 2, 4}));
}

TEST(Extrema, MonotoneHasOnlyEndpoints) {
    const std::vector<double> s{1, 2, 3, 4};
    const Extrema e = find_extrema(s);
    EXPECT_EQ(e.maxima, (std::vector<std::size_t>{0, 3}));
    EXPECT_EQ(e.minima, (std::vector<std::size_t>{0, 3}));
}

TEST(Extrema, PlateauReportsFirstIndex) {
    const std::vector<double> s{0, 2, 2, 2, 0, 1};
    const Extrema e = find_extrema(s);
    EXPECT_EQ(e.maxima, (std::vector<std::size_t>{0, 1, 5}));
    EXPECT_EQ(e.minima, (std::vector<std::size_t>{0, 4, 5}));
}

TEST(Extrema, RandomWalkMaximaDominateNeighbours) {
    std::vector<double> walk(1000, 0.0);
    const auto steps = random_signal(77, walk.size());
    for (std::size_t i = 1; i < walk.size(); ++i) walk[i] = walk[i - 1] + steps[i];
    const Extrema e = find_extrema(walk);
    ASSERT_GT(e.maxima.size(), 10u);
    for (std::size_t i : e.maxima) {
        if (i == 0 || i + 1 == walk.size()) continue;
        EXPECT_GE(walk[i], walk[i - 1]);
        EXPECT_GE(walk[i], walk[i + 1]);
    }
    for (std::size_t i : e.minima) {
        if (i == 0 || i + 1 == walk.size()) continue;
        EXPECT_LE(walk[i], walk[i - 1]);
        EXPECT_LE(walk[i], walk[i + 1]);
    }
}

TEST(Extrema, TooShort) {
    const std::vector<double> s{1, 2};
    EXPECT_THROW(find_extrema(s), SignalTooShort);
    EXPECT_THROW(envelope(s), SignalTooShort);
}

TEST(Envelope, ConstantSignal) {
    const std::vector<double> s(20, 3.5);
    const EnvelopePair env = envelope(s);
    EXPECT_EQ(env.upper, s);
    EXPECT_EQ(env.lower, s);
}

TEST(Envelope, SinusoidAmplitude) {
    const double amp = 2.0;
    std::vector<double> s(400);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = amp * std::sin(2 * M_PI * static_cast<double>(i) / 40.0 + 0.3);
    const EnvelopePair env = envelope(s);
    for (std::size_t i = 40; i + 40 < s.size(); ++i) {
        EXPECT_NEAR(env.upper[i], amp, 0.1 * amp) << i;
        EXPECT_NEAR(env.lower[i], -amp, 0.1 * amp) << i;
    }
}

TEST(Envelope, RampIsItsOwnEnvelope) {
    std::vector<double> s(50);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = 0.5 * static_cast<double>(i) - 3.0;
    const EnvelopePair env = envelope(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(env.upper[i], s[i], 1e-9);
        EXPECT_NEAR(env.lower[i], s[i], 1e-9);
    }
}

TEST(Envelope, UpperNeverBelowLower) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto s = random_signal(seed, 300);
        const EnvelopePair env = envelope(s);
        for (std::size_t i = 0; i < s.size(); ++i) EXPECT_GE(env.upper[i] + 1e-9, env.lower[i]);
    }
}

TEST(Envelope, QuadraticThroughKnots) {
    // Three knots of y = x^2 are reproduced exactly everywhere.
    const std::vector<std::size_t> knots{0, 4, 9};
    const std::vector<double> values{0, 16, 81};
    const auto y = interpolate_knots(knots, values, 10);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(y[i], static_cast<double>(i * i), 1e-9);
    const std::vector<std::size_t> two{0, 9};
    const std::vector<double> line{1, 10};
    const auto l = interpolate_knots(two, line, 10);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(l[i], 1.0 + static_cast<double>(i), 1e-12);
}

// =============================================================================
// Savitzky-Golay
// =============================================================================

TEST(SavitzkyGolay, OrderOneIsMovingAverageInside) {
    const std::vector<double> s{0, 0, 0, 5, 0, 0, 0};
    EXPECT_NEAR(savitzky_golay(s, 5, 1)[3], 1.0, 1e-12);
}

TEST(SavitzkyGolay, MatchesBruteForceOrderOne) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto s = random_signal(seed, 500);
        const auto got = savitzky_golay(s, 51, 1);
        const auto want = brute_force_sg(s, 51, 1);
        for (std::size_t i = 0; i < s.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-9) << "seed " << seed << " i " << i;
    }
}

TEST(SavitzkyGolay, MatchesBruteForceHigherOrders) {
    const auto s = random_signal(31, 120);
    for (int order : {0, 2, 3, 4}) {
        for (int window : {7, 11, 21}) {
            const auto got = savitzky_golay(s, window, order);
            const auto want = brute_force_sg(s, window, order);
            for (std::size_t i = 0; i < s.size(); ++i) {
                ASSERT_NEAR(got[i], want[i], 1e-9) << "order " << order << " window " << window << " i " << i;
            }
        }
    }
}

TEST(SavitzkyGolay, ReproducesPolynomials) {
    for (int order = 0; order <= 3; ++order) {
        std::vector<double> s(200);
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double x = static_cast<double>(i) / 20.0;
            s[i] = 1.5 + (order >= 1 ? 0.7 * x : 0) + (order >= 2 ? -0.2 * x * x : 0) + (order >= 3 ? 0.03 * x * x * x : 0);
        }
        const auto got = savitzky_golay(s, 51, order);
        for (std::size_t i = 0; i < s.size(); ++i) ASSERT_NEAR(got[i], s[i], 1e-9) << "order " << order;
    }
}

TEST(SavitzkyGolay, WindowValidation) {
    const auto s = random_signal(1, 30);
    EXPECT_THROW(savitzky_golay(s, 10, 1), BadWindow);
    EXPECT_THROW(savitzky_golay(s, 3, 3), BadWindow);
    EXPECT_THROW(savitzky_golay(s, 51, 1, false), BadWindow);
    // Clamping to 29 behaves exactly like asking for 29.
    EXPECT_EQ(savitzky_golay(s, 51, 1), savitzky_golay(s, 29, 1));
}

// =============================================================================
// Trajectory smoothing
// =============================================================================

TEST(SmoothTrajectory, ConstantVelocityIsPreserved) {
    const std::vector<AffineParams> params(80, AffineParams{1.5, -0.5, 0.002, 1.001});
    const SmoothedTrajectory st = smooth_trajectory(accumulate(params));
    for (const auto* d : st.delta.series()) {
        for (double v : *d) EXPECT_NEAR(v, 0.0, 1e-6);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        EXPECT_NEAR(st.corrected[i].tx, 1.5, 1e-6);
        EXPECT_NEAR(st.corrected[i].ty, -0.5, 1e-6);
        EXPECT_NEAR(st.corrected[i].theta, 0.002, 1e-6);
        EXPECT_NEAR(st.corrected[i].s, 1.001, 1e-6);
    }
}

TEST(SmoothTrajectory, ZeroMotion) {
    const std::vector<AffineParams> params(30, AffineParams::identity());
    for (const AffineParams& p : smooth_trajectory(accumulate(params)).corrected) {
        EXPECT_NEAR(p.tx, 0.0, 1e-12);
        EXPECT_NEAR(p.ty, 0.0, 1e-12);
        EXPECT_NEAR(p.theta, 0.0, 1e-12);
        EXPECT_NEAR(p.s, 1.0, 1e-12);
    }
}

TEST(SmoothTrajectory, JitterEnergyDrops) {
    std::vector<AffineParams> params;
    for (int i = 0; i < 256; ++i) params.push_back({1.0 + 2.0 * std::sin(1.9 * i), 0.5 * std::cos(2.3 * i), 0.0, 1.0});
    const Trajectory hat = accumulate(params);
    const SmoothedTrajectory st = smooth_trajectory(hat);
    EXPECT_LT(band_energy(st.smoothed.tx), band_energy(hat.tx));
}

TEST(SmoothTrajectory, CorrectedAccumulatesToSmoothed) {
    std::vector<AffineParams> params;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 150; ++i) params.push_back({g(rng), g(rng), 0.01 * g(rng), std::exp(0.01 * g(rng))});
    const Trajectory hat = accumulate(params);
    const SmoothedTrajectory st = smooth_trajectory(hat);
    const Trajectory again = accumulate(st.corrected);
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& a = *again.series()[k];
        const auto& b = *st.smoothed.series()[k];
        const auto& h = *hat.series()[k];
        const auto& d = *st.delta.series()[k];
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_NEAR(a[i], b[i], 1e-9);
            EXPECT_NEAR(h[i] - b[i], d[i], 1e-12);
        }
    }
}

TEST(SmoothTrajectory, TranslationEquivariant) {
    std::vector<AffineParams> params;
    for (int i = 0; i < 90; ++i) params.push_back({std::sin(0.8 * i), std::cos(1.1 * i), 0.0, 1.0});
    const Trajectory hat = accumulate(params);
    Trajectory shifted = hat;
    for (double& v : shifted.tx) v += 7.0;
    const SmoothedTrajectory a = smooth_trajectory(hat);
    const SmoothedTrajectory b = smooth_trajectory(shifted);
    for (std::size_t i = 0; i < hat.size(); ++i) {
        EXPECT_NEAR(b.smoothed.tx[i], a.smoothed.tx[i] + 7.0, 1e-9);
        EXPECT_NEAR(b.delta.tx[i], a.delta.tx[i], 1e-9);
        if (i > 0) EXPECT_NEAR(b.corrected[i].tx, a.corrected[i].tx, 1e-9);
    }
}

TEST(SmoothTrajectory, Errors) {
    const std::vector<AffineParams> two(2, AffineParams::identity());
    EXPECT_THROW(smooth_trajectory(accumulate(two)), SignalTooShort);
    const std::vector<AffineParams> many(40, AffineParams::identity());
    EXPECT_THROW(smooth_trajectory(accumulate(many), {8, 1, true}), BadWindow);
}

TEST(SmoothTrajectory, CsvLayout) {
    synthstab::testing::TempDir dir("traj_csv");
    const std::vector<AffineParams> params(10, AffineParams{1, 0, 0, 1});
    const Trajectory hat = accumulate(params);
    write_trajectory_csv(dir / "t.csv", hat, smooth_trajectory(hat).smoothed);
    const std::string text = read_file(dir / "t.csv");
    EXPECT_EQ(text.substr(0, text.find('\n')), "frame,tx_hat,ty_hat,th_hat,logs_hat,tx_tilde,ty_tilde,th_tilde,logs_tilde");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 11);
    Trajectory short_one = hat;
    short_one.tx.pop_back();
    EXPECT_THROW(write_trajectory_csv(dir / "u.csv", hat, short_one), LengthMismatch);
}
