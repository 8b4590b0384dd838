#pragma once

#include "synthstab/affine.hpp"
#include "synthstab/exec.hpp"
#include "synthstab/image.hpp"

#include <cstdint>
#include <vector>

namespace synthstab {

struct FlowOptions {
    int levels = 3;             ///< pyramid levels, >= 1
    int block = 8;              ///< block side at every level
    int search = 4;             ///< integer search radius around the prediction
    int refine_iterations = 3;  ///< sub-pixel gradient refinement steps (0 disables)
};

/// One block of the level-0 grid.
struct FlowSample {
    Point2 center;      ///< block centre in frame a
    Point2 disp;        ///< displacement into frame b
    bool valid = false;
    double texture = 0; ///< min eigenvalue of the block structure tensor, per pixel
};

/// Dense displacement field from frame a to frame b (b(x + d) ~ a(x)).
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> u;
    std::vector<float> v;
    std::vector<std::uint8_t> valid;
    std::vector<FlowSample> samples;

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
    }
};

/// Coarse-to-fine block matching: each block's displacement minimizes the sum
/// of absolute differences within the search radius around the upsampled
/// coarser estimate, followed by sub-pixel refinement. Blocks whose match
/// would leave the image are marked invalid. Throws FrameMismatch.
FlowField compute_flow(const Frame& a, const Frame& b, const FlowOptions& opts = {}, Exec exec = Exec::Parallel);

/// Minimum eigenvalue of the gradient structure tensor of a block, divided by
/// its pixel count. Near zero on textureless content.
double block_texture(const Frame& f, int x0, int y0, int block);

}  // namespace synthstab
