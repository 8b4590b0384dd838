#include <gtest/gtest.h>

#include "synthstab/dataset.hpp"
#include "synthstab/errors.hpp"
#include "synthstab/metrics.hpp"
#include "synthstab/stabilizer.hpp"
#include "synthstab/textio.hpp"
#include "test_util.hpp"

#include <cmath>
#include <filesystem>

using namespace synthstab;
using synthstab::testing::smooth_texture;

namespace {

float max_abs_diff(const Frame& a, const Frame& b) {
    float m = 0.0f;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) m = std::max(m, std::abs(a.pixels[i] - b.pixels[i]));
    return m;
}

}  // namespace

// =============================================================================
// Warp and crop
// =============================================================================

TEST(Warp, IdentityIsExact) {
    const Frame f = smooth_texture(40, 30);
    const WarpResult r = warp_frame(f, AffineParams::identity());
    EXPECT_EQ(r.frame, f);
    EXPECT_EQ(r.valid_fraction, 1.0);
}

TEST(Warp, ShiftedOutEntirely) {
    const Frame f = smooth_texture(40, 30);
    const WarpResult r = warp_frame(f, AffineParams{40, 0, 0, 1});
    EXPECT_EQ(r.valid_fraction, 0.0);
    for (float v : r.frame.pixels) EXPECT_EQ(v, 0.0f);
}

TEST(Warp, IntegerShiftMovesPixels) {
    const Frame f = smooth_texture(40, 30);
    const WarpResult r = warp_frame(f, AffineParams{3, -2, 0, 1}, 7.0f);
    for (int y = 0; y < 30; ++y) {
        for (int x = 0; x < 40; ++x) {
            const int sx = x - 3, sy = y + 2;
            const float expect = (sx >= 0 && sy < 30) ? f.at(sx, sy) : 7.0f;
            EXPECT_NEAR(r.frame.at(x, y), expect, 1e-4f);
        }
    }
    EXPECT_NEAR(r.valid_fraction, (37.0 * 28.0) / (40.0 * 30.0), 1e-12);
}

TEST(Warp, RoundTripRecoversInterior) {
    const Frame f = smooth_texture(96, 96);
    const AffineParams p{3.3, -2.1, 0.05, 1.03};
    const AffineMatrix m = params_to_matrix(p);
    const Frame there = warp_frame(f, m).frame;
    const Frame back = warp_frame(there, invert(m)).frame;
    for (int y = 20; y < 76; ++y) {
        for (int x = 20; x < 76; ++x) EXPECT_NEAR(back.at(x, y), f.at(x, y), 2.0f);
    }
}

TEST(Warp, SingularThrows) {
    AffineMatrix m;
    m.m = {1, 2, 0, 2, 4, 0};
    EXPECT_THROW(warp_frame(Frame(8, 8), m), SingularTransform);
}

TEST(Warp, SerialAndParallelAgree) {
    const Frame f = smooth_texture(80, 64);
    const AffineParams p{1.7, 0.4, -0.1, 0.95};
    const WarpResult s = warp_frame(f, p, 0.0f, Exec::Serial);
    const WarpResult q = warp_frame(f, p, 0.0f, Exec::Parallel);
    EXPECT_EQ(s.frame, q.frame);
    EXPECT_EQ(s.valid_fraction, q.valid_fraction);
}

TEST(Crop, Examples) {
    const Frame f = smooth_texture(100, 100);
    EXPECT_EQ(crop(f, 1.0), f);
    const Frame half = crop(f, 0.5);
    ASSERT_EQ(half.width, 50);
    ASSERT_EQ(half.height, 50);
    EXPECT_EQ(half, sub_image(f, 25, 25, 50, 50));
    EXPECT_THROW(crop(f, 0.0), InvalidSpec);
    EXPECT_THROW(crop(f, 1.5), InvalidSpec);
}

TEST(Crop, CompositionWithinOnePixel) {
    const Frame f = smooth_texture(128, 96);
    for (double r1 : {0.9, 0.8, 0.7}) {
        for (double r2 : {0.95, 0.8, 0.6}) {
            const Frame twice = crop(crop(f, r1), r2);
            const Frame once = crop(f, r1 * r2);
            EXPECT_LE(std::abs(twice.width - once.width), 2) << r1 << ' ' << r2;
            EXPECT_LE(std::abs(twice.height - once.height), 2) << r1 << ' ' << r2;
            const CropRect a = centered_crop(128, 96, r1);
            const CropRect b = centered_crop(a.width, a.height, r2);
            const CropRect c = centered_crop(128, 96, r1 * r2);
            EXPECT_LE(std::abs(a.x0 + b.x0 - c.x0), 1);
            EXPECT_LE(std::abs(a.y0 + b.y0 - c.y0), 1);
        }
    }
}

// =============================================================================
// Stabilization
// =============================================================================

TEST(Correction, UndoesTrajectoryOffset) {
    const Point2 c = frame_center(100, 80);
    const AffineParams corr = correction_from_delta(2.0, -1.0, 0.0, 0.0, c);
    EXPECT_NEAR(corr.tx, -2.0, 1e-12);
    EXPECT_NEAR(corr.ty, 1.0, 1e-12);
    const AffineParams rot = correction_from_delta(0.0, 0.0, 0.1, std::log(1.1), c);
    EXPECT_NEAR(rot.theta, -0.1, 1e-12);
    EXPECT_NEAR(rot.s, 1.0 / 1.1, 1e-12);
    const Point2 fixed = apply(params_to_matrix(rot), c);
    EXPECT_NEAR(fixed.x, c.x, 1e-9);
    EXPECT_NEAR(fixed.y, c.y, 1e-9);
}

TEST(Stabilize, ZeroMotionIsPlainCrop) {
    std::vector<Frame> frames;
    for (int i = 0; i < 12; ++i) frames.push_back(smooth_texture(64, 48, 0.1 * i));
    const std::vector<AffineParams> est(11, AffineParams::identity());
    const StabilizationResult r = stabilize_video(frames, est);
    ASSERT_EQ(r.frames.size(), frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        EXPECT_EQ(r.frames[i], crop(frames[i], 0.8));
        EXPECT_EQ(r.applied[i], AffineParams::identity());
        EXPECT_EQ(r.valid_fraction[i], 1.0);
    }
    EXPECT_TRUE(r.warnings.empty());
}

TEST(Stabilize, LinearDollyBarelyChanges) {
    const Scene scene = synthstab::testing::test_scene(5);
    CameraPath path;
    for (int t = 0; t < 60; ++t) path.poses.push_back({200.0 + 1.5 * t, 260.0 - 0.75 * t, 0.0, 1.0});
    const auto frames = render_video(scene, path, 128, 128);
    const auto gt = ground_truth_pairs(emit_mark_points(scene, path, MarkConfig{}, 128, 128), 60);
    const StabilizationResult r = stabilize_video(frames, gt);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        EXPECT_NEAR(r.applied[i].tx, 0.0, 0.1);
        EXPECT_NEAR(r.applied[i].ty, 0.0, 0.1);
        EXPECT_NEAR(r.applied[i].theta, 0.0, 1e-3);
        EXPECT_LE(max_abs_diff(r.frames[i], crop(frames[i], 0.8)), 2.0f) << "frame " << i;
    }
}

TEST(Stabilize, JitteredVideoGetsSteadier) {
    GeneratorConfig cfg;
    cfg.n_frames = 120;
    cfg.canvas_size = 768;
    cfg.seed = 8;
    const Video v = generate_video(cfg, 0).video;
    const StabilizationResult r = stabilize_video(v.frames, v.gt_affine);
    const double before = stability_scores(pair_motion_series(v.frames)).average;
    const double after = stability_scores(pair_motion_series(r.frames)).average;
    EXPECT_GT(after, before);
}

TEST(Stabilize, LengthMismatch) {
    const std::vector<Frame> frames(5, Frame(32, 32));
    const std::vector<AffineParams> est(3);
    EXPECT_THROW(stabilize_video(frames, est), LengthMismatch);
}

TEST(Stabilize, LargeCorrectionWarnsAboutBorder) {
    std::vector<Frame> frames;
    std::vector<AffineParams> est;
    for (int i = 0; i < 20; ++i) frames.push_back(smooth_texture(64, 64, 0.2 * i));
    for (int i = 0; i < 19; ++i) est.push_back({i % 2 == 0 ? 20.0 : -20.0, 0.0, 0.0, 1.0});
    const StabilizationResult r = stabilize_video(frames, est);
    bool any_partial = false;
    for (double f : r.valid_fraction) any_partial = any_partial || f < 1.0;
    EXPECT_TRUE(any_partial);
    EXPECT_FALSE(r.warnings.empty());
}

TEST(Stabilize, DeterministicAndSerialMatchesParallel) {
    GeneratorConfig cfg;
    cfg.n_frames = 40;
    cfg.width = 96;
    cfg.height = 96;
    cfg.canvas_size = 512;
    const Video v = generate_video(cfg, 0).video;
    StabilizerConfig serial;
    serial.exec = Exec::Serial;
    const StabilizationResult a = stabilize_video(v.frames, v.gt_affine, serial);
    const StabilizationResult b = stabilize_video(v.frames, v.gt_affine);
    ASSERT_EQ(a.frames.size(), b.frames.size());
    for (std::size_t i = 0; i < a.frames.size(); ++i) EXPECT_EQ(a.frames[i], b.frames[i]);
    EXPECT_EQ(a.applied, b.applied);
    EXPECT_EQ(a.valid_fraction, b.valid_fraction);
}

TEST(Stabilize, WritesOutputs) {
    synthstab::testing::TempDir dir("stab_out");
    std::vector<Frame> frames(6, smooth_texture(32, 32));
    const StabilizationResult r = stabilize_video(frames, std::vector<AffineParams>(5));
    write_stabilization(dir.str(), r, {{"backend", "oracle"}, {"window", "51"}});
    EXPECT_EQ(read_frame_sequence(dir.str()).size(), 6u);
    EXPECT_EQ(read_params_file(dir / "applied_transforms.txt"), r.applied);
    const auto kv = parse_key_values(read_file(dir / "stabilize_report.txt"), ':');
    EXPECT_EQ(kv.at("backend"), "oracle");
    EXPECT_EQ(kv.at("window"), "51");
}
