#pragma once

#include "synthstab/affine.hpp"
#include "synthstab/exec.hpp"
#include "synthstab/flow.hpp"
#include "synthstab/image.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace synthstab {

/// Projective map, row-major, normalized so h[8] == 1.
struct Homography {
    std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

    double operator()(int r, int c) const { return h[static_cast<std::size_t>(r * 3 + c)]; }
    Point2 apply(Point2 p) const;
};

/// Normalized DLT over all correspondences. Throws DegenerateHomography with
/// fewer than 4 points or a design matrix of rank < 8 (relative 1e-10).
Homography estimate_homography(std::span<const Correspondence> corrs);

struct TrackingOptions {
    FlowOptions flow;
    double min_texture = 0.5;
    double inlier_px = 1.5;
    double min_inlier_fraction = 0.5;
    int min_points = 8;
    int rounds = 3;
};

/// DLT refitted on the points within max(3 x median, inlier_px) transfer
/// error. Throws DegenerateHomography when fewer than `min_points` or
/// `min_inlier_fraction` of the points end up within inlier_px.
Homography robust_homography(std::span<const Correspondence> corrs, const TrackingOptions& opts = {});

/// Homography from frame a to frame b via block-matching correspondences.
/// Throws DegenerateHomography, FrameMismatch.
Homography track_homography(const Frame& a, const Frame& b, const TrackingOptions& opts = {},
                            Exec exec = Exec::Serial);

struct MotionSeries {
    std::vector<double> translation;  ///< sqrt(h02^2 + h12^2)
    std::vector<double> tx;           ///< h02
    std::vector<double> ty;           ///< h12
    std::vector<double> rotation;     ///< atan2(h10, h00)
    std::vector<std::string> warnings;
};

/// Per consecutive pair; untrackable pairs contribute 0 and a warning.
/// Throws InvalidSpec with fewer than two frames.
MotionSeries pair_motion_series(std::span<const Frame> frames, const TrackingOptions& opts = {},
                                Exec exec = Exec::Parallel);

/// Spectral power in bins 2..6 over bins 1..n/2. A series without variation
/// scores 1. Throws SeriesTooShort below 8 samples.
double stability_score(std::span<const double> series);

struct StabilityScores {
    double translation = 0.0;
    double rotation = 0.0;
    double average = 0.0;
};

/// With `separate_xy`, the translation score is the mean of the x and y
/// scores instead of the score of the magnitude series.
StabilityScores stability_scores(const MotionSeries& series, bool separate_xy = false);

struct DistortionResult {
    double score = 0.0;               ///< minimum over fitted frames
    std::vector<double> per_frame;    ///< sigma2 / sigma1, negative when the fit failed
    std::vector<std::string> warnings;
};

/// Anisotropy of the original -> stabilized homography per frame. Each
/// original frame is centre-cropped to the stabilized size first. Throws
/// LengthMismatch, AllFramesFailed.
DistortionResult distortion_score(std::span<const Frame> original, std::span<const Frame> stabilized,
                                  const TrackingOptions& opts = {}, Exec exec = Exec::Parallel);

/// sigma2 / sigma1 of the 2x2 linear block.
double anisotropy(const Homography& h);

/// Fraction of the stabilized window (centred in a width x height frame and
/// warped by `applied`) whose source lies inside the original frame.
double window_valid_fraction(int width, int height, int crop_width, int crop_height, const AffineParams& applied);

/// Mean over frames of (crop area x valid fraction) / original area.
/// Throws LengthMismatch.
double cropping_ratio(std::span<const Frame> original, std::span<const Frame> stabilized,
                      std::span<const AffineParams> applied);

struct EvalMetadata {
    std::vector<AffineParams> applied;  ///< per output frame
    bool complete = true;               ///< pipeline produced every frame
};

struct MetricsReport {
    StabilityScores stability;
    StabilityScores input_stability;
    double distortion = 0.0;
    bool distortion_failed = false;
    double cropping_ratio = 0.0;
    bool success = false;
    std::vector<double> distortion_per_frame;
    std::vector<std::string> warnings;
};

/// Throws LengthMismatch when the sequences are not aligned.
MetricsReport evaluate(std::span<const Frame> original, std::span<const Frame> stabilized,
                       const EvalMetadata& meta, const TrackingOptions& opts = {}, Exec exec = Exec::Parallel);

/// `key: value` lines.
std::string format_report(const MetricsReport& r);
void write_report(const std::string& path, const MetricsReport& r);

struct BatchRow {
    std::string video_id;
    MetricsReport report;
};

/// Header video_id,stability,distortion,cropping,success plus one row per video.
std::string format_batch_summary(std::span<const BatchRow> rows);
void write_batch_summary(const std::string& path, std::span<const BatchRow> rows);
double success_rate(std::span<const BatchRow> rows);

}  // namespace synthstab
