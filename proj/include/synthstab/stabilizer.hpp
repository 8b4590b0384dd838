#pragma once

#include "synthstab/affine.hpp"
#include "synthstab/exec.hpp"
#include "synthstab/image.hpp"
#include "synthstab/trajectory.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace synthstab {

struct WarpResult {
    Frame frame;
    double valid_fraction = 0.0;  ///< share of output pixels sampled inside the input
};

/// Inverse-mapped bilinear warp: output pixel p samples the input at A^-1 p;
/// samples outside the input take `fill`. Throws SingularTransform.
WarpResult warp_frame(const Frame& frame, const AffineMatrix& a, float fill = 0.0f, Exec exec = Exec::Parallel);
WarpResult warp_frame(const Frame& frame, const AffineParams& p, float fill = 0.0f, Exec exec = Exec::Parallel);

/// Centred ratio*W x ratio*H sub-image (see centered_crop). Throws InvalidSpec.
Frame crop(const Frame& frame, double ratio);

struct StabilizerConfig {
    SmoothingConfig smoothing;
    double crop_ratio = 0.8;
    float fill = 0.0f;
    Exec exec = Exec::Parallel;
};

struct StabilizationResult {
    std::vector<Frame> frames;
    std::vector<AffineParams> applied;   ///< per frame, top-left origin
    std::vector<double> valid_fraction;  ///< per frame, within the crop window
    std::vector<std::string> warnings;
    Trajectory measured;                 ///< frame-centred cumulative estimates
    Trajectory smoothed;
};

/// Transform taking frame i + 1 from the measured to the smoothed trajectory,
/// given the trajectory offset delta = T^ - T~ at pair i (frame-centred).
AffineParams correction_from_delta(double d_tx, double d_ty, double d_theta, double d_log_s, Point2 center);

/// Smooths the trajectory of `estimates` (pair i maps frame i to i + 1),
/// warps frame 0 by identity and frame i + 1 by its correction, then crops.
/// Throws LengthMismatch, and propagates smoothing errors.
StabilizationResult stabilize_video(std::span<const Frame> frames, std::span<const AffineParams> estimates,
                                    const StabilizerConfig& cfg = {});

/// Writes frame_%06d.pgm files, applied_transforms.txt and stabilize_report.txt
/// (the `echo` pairs first, then valid fractions and warnings).
void write_stabilization(const std::string& dir, const StabilizationResult& result,
                         const std::vector<std::pair<std::string, std::string>>& echo);

}  // namespace synthstab
