#include <gtest/gtest.h>

#include "synthstab/errors.hpp"
#include "synthstab/flow.hpp"
#include "test_util.hpp"

#include <algorithm>

using namespace synthstab;

namespace {

double median(std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
    return v[v.size() / 2];
}

// Frames of the shared test scene seen from two camera centres; content moves
// by (-dx, -dy) on screen when the camera moves by (dx, dy).
std::pair<Frame, Frame> shifted_pair(double dx, double dy, int side = 128) {
    const Scene scene = synthstab::testing::test_scene();
    const CameraPose a{255.5, 255.5, 0.0, 1.0};
    const CameraPose b{255.5 + dx, 255.5 + dy, 0.0, 1.0};
    return {render_frame(scene, a, side, side), render_frame(scene, b, side, side)};
}

}  // namespace

TEST(Flow, IdenticalFramesGiveZeroFlow) {
    const Frame f = render_frame(synthstab::testing::test_scene(), {255.5, 255.5, 0.0, 1.0}, 128, 96);
    const FlowField flow = compute_flow(f, f);
    ASSERT_EQ(flow.width, 128);
    ASSERT_EQ(flow.height, 96);
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
        if (!flow.valid[i]) continue;
        EXPECT_EQ(flow.u[i], 0.0f);
        EXPECT_EQ(flow.v[i], 0.0f);
    }
    for (const FlowSample& s : flow.samples) {
        EXPECT_TRUE(s.valid);
        EXPECT_EQ(s.disp.x, 0.0);
        EXPECT_EQ(s.disp.y, 0.0);
    }
}

TEST(Flow, ShiftedFrameMedianFlow) {
    const auto [a, b] = shifted_pair(-3.0, 0.0);
    const FlowField flow = compute_flow(a, b);
    std::vector<double> u, v;
    for (int y = 16; y < 112; ++y) {
        for (int x = 16; x < 112; ++x) {
            const std::size_t i = flow.index(x, y);
            if (!flow.valid[i]) continue;
            u.push_back(flow.u[i]);
            v.push_back(flow.v[i]);
        }
    }
    ASSERT_GT(u.size(), 1000u);
    EXPECT_NEAR(median(u), 3.0, 0.5);
    EXPECT_NEAR(median(v), 0.0, 0.5);
}

TEST(Flow, LargeShiftNeedsPyramid) {
    const auto [a, b] = shifted_pair(7.0, -9.0);
    const FlowField flow = compute_flow(a, b);
    std::vector<double> u, v;
    for (const FlowSample& s : flow.samples) {
        if (!s.valid) continue;
        u.push_back(s.disp.x);
        v.push_back(s.disp.y);
    }
    ASSERT_FALSE(u.empty());
    EXPECT_NEAR(median(u), -7.0, 0.25);
    EXPECT_NEAR(median(v), 9.0, 0.25);
}

TEST(Flow, SubPixelShift) {
    const auto [a, b] = shifted_pair(-1.5, 0.25);
    const FlowField flow = compute_flow(a, b);
    std::vector<double> u, v;
    for (const FlowSample& s : flow.samples) {
        if (!s.valid || s.texture < 0.5) continue;
        u.push_back(s.disp.x);
        v.push_back(s.disp.y);
    }
    ASSERT_FALSE(u.empty());
    EXPECT_NEAR(median(u), 1.5, 0.2);
    EXPECT_NEAR(median(v), -0.25, 0.2);
}

TEST(Flow, ConstantFramesStillReturnField) {
    const Frame f(64, 64, 128.0f);
    const FlowField flow = compute_flow(f, f);
    EXPECT_EQ(flow.u.size(), 64u * 64u);
    for (const FlowSample& s : flow.samples) EXPECT_EQ(s.texture, 0.0);
}

TEST(Flow, BlockTexture) {
    EXPECT_EQ(block_texture(Frame(16, 16, 9.0f), 0, 0, 8), 0.0);
    // A pure horizontal ramp has a rank-one structure tensor.
    Frame ramp(16, 16);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) ramp.at(x, y) = static_cast<float>(4 * x);
    }
    EXPECT_NEAR(block_texture(ramp, 4, 4, 8), 0.0, 1e-9);
    EXPECT_GT(block_texture(synthstab::testing::smooth_texture(32, 32), 8, 8, 8), 0.5);
}

TEST(Flow, SizeMismatchThrows) {
    EXPECT_THROW(compute_flow(Frame(32, 32), Frame(32, 31)), FrameMismatch);
}

TEST(Flow, SerialAndParallelAgree) {
    const auto [a, b] = shifted_pair(2.3, -1.7);
    const FlowField p = compute_flow(a, b, {}, Exec::Parallel);
    const FlowField s = compute_flow(a, b, {}, Exec::Serial);
    EXPECT_EQ(p.u, s.u);
    EXPECT_EQ(p.v, s.v);
    EXPECT_EQ(p.valid, s.valid);
}
