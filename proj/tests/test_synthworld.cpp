#include <gtest/gtest.h>

#include "synthstab/errors.hpp"
#include "synthstab/synthworld.hpp"
#include "test_util.hpp"

#include <cmath>
#include <map>
#include <set>

using namespace synthstab;

namespace {

// Pair motion derived from the camera model p = z R(-theta)(w - c) + C:
// p' = (z'/z) R(theta - theta') (p - C) + z' R(-theta')(c - c') + C.
AffineParams analytic_delta(const CameraPose& a, const CameraPose& b, int w, int h) {
    const double dx = a.center_x - b.center_x, dy = a.center_y - b.center_y;
    const double co = std::cos(b.theta), si = std::sin(b.theta);
    const AffineParams centered{b.zoom * (co * dx + si * dy), b.zoom * (-si * dx + co * dy),
                                canonical_angle(a.theta - b.theta), b.zoom / a.zoom};
    return from_centered(centered, frame_center(w, h));
}

double centroid_x(const Frame& f, float value) {
    double sum = 0;
    int n = 0;
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            if (f.at(x, y) == value) {
                sum += x;
                ++n;
            }
        }
    }
    return n > 0 ? sum / n : NAN;
}

}  // namespace

// =============================================================================
// Scene
// =============================================================================

TEST(Scene, DeterministicForFixedSeed) {
    SceneSpec spec;
    spec.seed = 42;
    spec.canvas_size = 512;
    spec.n_layers = 2;
    spec.layer_depths = default_layer_depths(2);
    EXPECT_EQ(build_scene(spec), build_scene(spec));
    SceneSpec other = spec;
    other.seed = 43;
    EXPECT_FALSE(build_scene(spec) == build_scene(other));
}

TEST(Scene, SpecValidation) {
    SceneSpec spec;
    spec.canvas_size = 3 * spec.frame_width;
    EXPECT_THROW(build_scene(spec), InvalidSpec);
    SceneSpec layers;
    layers.n_layers = 2;
    EXPECT_THROW(layers.validate(), InvalidSpec);
    EXPECT_THROW(parse_texture_style("plaid"), InvalidSpec);
    EXPECT_EQ(parse_texture_style(to_string(TextureStyle::Blobs)), TextureStyle::Blobs);
}

TEST(Scene, TexturesStayInDisplayRange) {
    const Scene scene = synthstab::testing::test_scene();
    ASSERT_EQ(scene.layers.size(), 1u);
    EXPECT_TRUE(scene.layers[0].alpha.empty());
    for (float v : scene.layers[0].texture.pixels) {
        EXPECT_GE(v, 16.0f);
        EXPECT_LE(v, 240.0f);
    }
}

// =============================================================================
// Camera model
// =============================================================================

TEST(Camera, ScreenWorldInverse) {
    const CameraPose pose{300.5, 210.25, 0.3, 1.2};
    const AffineMatrix m = compose(world_to_screen(pose, 128, 96, 2.0, 512), screen_to_world(pose, 128, 96, 2.0, 512));
    EXPECT_NEAR(m.m[0], 1, 1e-12);
    EXPECT_NEAR(m.m[2], 0, 1e-9);
    EXPECT_NEAR(m.m[5], 0, 1e-9);
}

TEST(Camera, PoseCentreMapsToFrameCentre) {
    const CameraPose pose{300.5, 210.25, -0.7, 0.9};
    const Point2 p = apply(world_to_screen(pose, 128, 96), {pose.center_x, pose.center_y});
    EXPECT_NEAR(p.x, 63.5, 1e-12);
    EXPECT_NEAR(p.y, 47.5, 1e-12);
}

TEST(Camera, PoseAfterRealizesPairMotion) {
    const CameraPose a{256, 256, 0.4, 1.1};
    const AffineParams motion{3.5, -2.0, 0.03, 0.98};
    const CameraPose b = pose_after(a, motion, 128, 128);
    const AffineParams got = analytic_delta(a, b, 128, 128);
    EXPECT_NEAR(got.tx, motion.tx, 1e-9);
    EXPECT_NEAR(got.ty, motion.ty, 1e-9);
    EXPECT_NEAR(got.theta, motion.theta, 1e-12);
    EXPECT_NEAR(got.s, motion.s, 1e-12);
}

TEST(Camera, ZeroNoiseShakyEqualsSmooth) {
    SmoothSpec smooth;
    smooth.velocity_x = 1.0;
    smooth.omega = 1e-3;
    const CameraPaths paths = generate_camera_path(smooth, NoiseProfile::none(), 30);
    for (std::size_t i = 0; i < 30; ++i) {
        EXPECT_EQ(paths.shaky.poses[i].center_x, paths.smooth.poses[i].center_x);
        EXPECT_EQ(paths.shaky.poses[i].center_y, paths.smooth.poses[i].center_y);
        EXPECT_EQ(paths.shaky.poses[i].theta, paths.smooth.poses[i].theta);
        EXPECT_EQ(paths.shaky.poses[i].zoom, paths.smooth.poses[i].zoom);
    }
}

TEST(Camera, SingleSinusoidIsExactlyTheOffset) {
    NoiseProfile noise = NoiseProfile::none();
    noise.n_sinusoids = 1;
    noise.amp = {3.0, 3.0};
    noise.freq = {0.1, 0.1};
    noise.seed = 9;
    const CameraPaths paths = generate_camera_path(SmoothSpec{}, noise, 50);
    const Sinusoid& sx = paths.shake.axes[kShakeX].at(0);
    EXPECT_EQ(sx.amp, 3.0);
    EXPECT_EQ(sx.freq, 0.1);
    for (int t = 0; t < 50; ++t) {
        const double offset = paths.shaky.poses[static_cast<std::size_t>(t)].center_x -
                              paths.smooth.poses[static_cast<std::size_t>(t)].center_x;
        EXPECT_NEAR(offset, 3.0 * std::sin(2 * M_PI * 0.1 * t + sx.phase), 1e-12);
    }
}

TEST(Camera, DefaultShakeWithinAmplitudeBound) {
    NoiseProfile noise;
    noise.seed = 21;
    const int n = 400;
    const CameraPaths paths = generate_camera_path(SmoothSpec{}, noise, n);
    double mean_abs = 0.0;
    for (int t = 0; t < n; ++t) {
        const auto i = static_cast<std::size_t>(t);
        const double offset = paths.shaky.poses[i].center_x - paths.smooth.poses[i].center_x;
        EXPECT_NEAR(offset, paths.shake.periodic(kShakeX, t) + paths.shake.jitter_x[i], 1e-12);
        mean_abs += std::abs(paths.shake.periodic(kShakeX, t)) / n;
    }
    for (const Sinusoid& s : paths.shake.axes[kShakeX]) {
        EXPECT_GE(s.amp, noise.amp.lo);
        EXPECT_LE(s.amp, noise.amp.hi);
        EXPECT_GE(s.freq, noise.freq.lo);
        EXPECT_LE(s.freq, noise.freq.hi);
    }
    EXPECT_LE(mean_abs, noise.amp.hi * noise.n_sinusoids);
    EXPECT_GT(mean_abs, 0.0);
}

TEST(Camera, PathNeedsTwoFrames) {
    EXPECT_THROW(generate_camera_path(SmoothSpec{}, NoiseProfile::none(), 1), InvalidSpec);
}

TEST(Camera, PlannedPathStaysOnCanvas) {
    SceneSpec spec;
    spec.canvas_size = 512;
    const SmoothSpec s = plan_smooth_path(5, 300, spec, 2.0, 10.0);
    const double radius = 0.5 * std::hypot(128, 128) + 10.0;
    for (int t = 0; t < 300; ++t) {
        const CameraPose p = s.at(t);
        EXPECT_GE(p.center_x - radius, 0.0);
        EXPECT_LE(p.center_x + radius, 511.0);
        EXPECT_GE(p.center_y - radius, 0.0);
        EXPECT_LE(p.center_y + radius, 511.0);
    }
}

// =============================================================================
// Rendering
// =============================================================================

TEST(Render, SamePoseTwiceIsIdentical) {
    const Scene scene = synthstab::testing::test_scene();
    const CameraPose pose{255.5, 255.5, 0.0, 1.0};
    EXPECT_EQ(render_frame(scene, pose, 64, 48), render_frame(scene, pose, 64, 48));
}

TEST(Render, CameraTranslationShiftsContent) {
    const Scene scene = synthstab::testing::test_scene();
    const int k = 5;
    const CameraPose a{255.5, 255.5, 0.0, 1.0};
    const CameraPose b{255.5 + k, 255.5, 0.0, 1.0};
    const Frame fa = render_frame(scene, a, 128, 128);
    const Frame fb = render_frame(scene, b, 128, 128);
    for (int y = 0; y < 128; ++y) {
        for (int x = 0; x + k < 128; ++x) EXPECT_NEAR(fb.at(x, y), fa.at(x + k, y), 1e-6);
    }
}

TEST(Render, OutsideCanvasIsBlack) {
    const Scene scene = synthstab::testing::test_scene();
    const Frame f = render_frame(scene, {-200.0, -200.0, 0.0, 1.0}, 64, 64);
    for (float v : f.pixels) EXPECT_EQ(v, 0.0f);
}

TEST(Render, DeeperLayerMovesHalfAsFar) {
    // Hand-built two-layer world: a bright square on the depth-1 plane, which
    // is transparent elsewhere, over an opaque depth-2 plane with its own square.
    const int canvas = 512;
    Scene scene;
    scene.canvas_size = canvas;
    Layer near;
    near.depth = 1.0;
    near.texture = Frame(canvas, canvas, 0.0f);
    near.alpha.assign(near.texture.size(), 0.0f);
    for (int y = 240; y < 250; ++y) {
        for (int x = 230; x < 240; ++x) {
            near.texture.at(x, y) = 200.0f;
            near.alpha[near.texture.index(x, y)] = 1.0f;
        }
    }
    Layer far;
    far.depth = 2.0;
    far.texture = Frame(canvas, canvas, 50.0f);
    for (int y = 260; y < 270; ++y) {
        for (int x = 270; x < 280; ++x) far.texture.at(x, y) = 120.0f;
    }
    scene.layers = {near, far};

    const CameraPose a{255.5, 255.5, 0.0, 1.0};
    const CameraPose b{263.5, 255.5, 0.0, 1.0};
    const Frame fa = render_frame(scene, a, 128, 128);
    const Frame fb = render_frame(scene, b, 128, 128);
    EXPECT_NEAR(centroid_x(fa, 200.0f) - centroid_x(fb, 200.0f), 8.0, 1e-9);
    EXPECT_NEAR(centroid_x(fa, 120.0f) - centroid_x(fb, 120.0f), 4.0, 1e-9);
}

TEST(Render, SerialAndParallelAgree) {
    const Scene scene = synthstab::testing::test_scene(8);
    const CameraPose pose{250.2, 270.7, 0.3, 1.1};
    EXPECT_EQ(render_frame(scene, pose, 96, 80, Exec::Serial), render_frame(scene, pose, 96, 80, Exec::Parallel));
}

// =============================================================================
// Mark points and ground truth
// =============================================================================

TEST(Marks, StaticCameraKeepsPositions) {
    const Scene scene = synthstab::testing::test_scene();
    CameraPath path;
    path.poses.assign(40, CameraPose{255.5, 255.5, 0.2, 1.0});
    MarkConfig cfg;
    const auto records = emit_mark_points(scene, path, cfg, 128, 128);
    ASSERT_FALSE(records.empty());
    std::map<std::uint64_t, Point2> first;
    for (const auto& r : records) {
        auto [it, inserted] = first.emplace(r.uid, Point2{r.x, r.y});
        if (!inserted) {
            EXPECT_NEAR(r.x, it->second.x, 1e-9);
            EXPECT_NEAR(r.y, it->second.y, 1e-9);
        }
    }
    const auto gt = ground_truth_pairs(records, 40);
    ASSERT_EQ(gt.size(), 39u);
    for (const auto& p : gt) {
        EXPECT_NEAR(p.tx, 0, 1e-9);
        EXPECT_NEAR(p.ty, 0, 1e-9);
        EXPECT_NEAR(p.theta, 0, 1e-12);
        EXPECT_NEAR(p.s, 1, 1e-12);
    }
}

TEST(Marks, CameraTranslationMovesMarks) {
    const Scene scene = synthstab::testing::test_scene();
    const double k = 1.5, zoom = 1.25;
    CameraPath path;
    for (int t = 0; t < 30; ++t) path.poses.push_back({300.0 - k * t, 256.0, 0.0, zoom});
    const auto records = emit_mark_points(scene, path, MarkConfig{}, 128, 128);
    std::map<std::uint64_t, std::pair<int, double>> last;
    for (const auto& r : records) {
        const auto it = last.find(r.uid);
        if (it != last.end()) {
            EXPECT_EQ(r.frame_id, it->second.first + 1);
            EXPECT_NEAR(r.x - it->second.second, k * zoom, 1e-9);
        }
        last[r.uid] = {r.frame_id, r.x};
    }
}

TEST(Marks, LifetimeAndCoverage) {
    const Scene scene = synthstab::testing::test_scene();
    CameraPath path;
    for (int t = 0; t < 30; ++t) path.poses.push_back({256.0 + 1.2 * t, 250.0 - 0.7 * t, 0.01 * t, 1.0});
    MarkConfig cfg;
    cfg.K = 10;
    cfg.sampling_period = 5;
    cfg.beta_frames = 12;
    const auto records = emit_mark_points(scene, path, cfg, 128, 128);
    std::map<std::uint64_t, std::set<int>> frames_of;
    std::map<int, int> alive;
    for (const auto& r : records) {
        frames_of[r.uid].insert(r.frame_id);
        ++alive[r.frame_id];
    }
    for (const auto& [uid, frames] : frames_of) {
        EXPECT_LE(frames.size(), 12u);
        EXPECT_EQ(*frames.rbegin() - *frames.begin() + 1, static_cast<int>(frames.size())) << "uid " << uid;
    }
    for (int f = 5; f < 30; ++f) EXPECT_GE(alive[f], cfg.K) << "frame " << f;
}

TEST(Marks, GroundTruthMatchesAnalyticPoseDelta) {
    const Scene scene = synthstab::testing::test_scene();
    NoiseProfile noise;
    noise.seed = 4;
    SmoothSpec smooth;
    smooth.start_x = 240;
    smooth.start_y = 260;
    smooth.velocity_x = 1.1;
    smooth.velocity_y = -0.6;
    smooth.omega = 2e-3;
    smooth.zoom_rate = 1e-3;
    const CameraPaths paths = generate_camera_path(smooth, noise, 60);
    const auto records = emit_mark_points(scene, paths.shaky, MarkConfig{}, 128, 128);
    const auto gt = ground_truth_pairs(records, 60);
    for (std::size_t i = 0; i + 1 < paths.shaky.size(); ++i) {
        const AffineParams expect = analytic_delta(paths.shaky.poses[i], paths.shaky.poses[i + 1], 128, 128);
        EXPECT_NEAR(gt[i].tx, expect.tx, 1e-6);
        EXPECT_NEAR(gt[i].ty, expect.ty, 1e-6);
        EXPECT_NEAR(gt[i].theta, expect.theta, 1e-6);
        EXPECT_NEAR(gt[i].s, expect.s, 1e-6);
        EXPECT_EQ(pair_from_marks(records, static_cast<int>(i)), gt[i]);
    }
}

TEST(Marks, MissingFrameReportsPair) {
    const Scene scene = synthstab::testing::test_scene();
    CameraPath path;
    for (int t = 0; t < 20; ++t) path.poses.push_back({256.0 + t, 256.0, 0.0, 1.0});
    auto records = emit_mark_points(scene, path, MarkConfig{}, 128, 128);
    std::erase_if(records, [](const MarkRecord& r) { return r.frame_id == 7; });
    try {
        ground_truth_pairs(records, 20);
        FAIL() << "expected InsufficientMarks";
    } catch (const InsufficientMarks& e) {
        EXPECT_EQ(e.pair_index(), 6u);
    }
}

TEST(Marks, ConfigValidation) {
    MarkConfig cfg;
    cfg.K = 2;
    EXPECT_THROW(cfg.validate(), InvalidSpec);
    cfg.K = 16;
    cfg.beta_frames = 1;
    EXPECT_THROW(cfg.validate(), InvalidSpec);
    MarkConfig period;
    period.beta_frames = 24;
    EXPECT_EQ(period.period(), 12);
}
