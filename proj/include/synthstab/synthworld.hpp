#pragma once

#include "synthstab/affine.hpp"
#include "synthstab/exec.hpp"
#include "synthstab/image.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace synthstab {

// =============================================================================
// Scene
// =============================================================================

enum class TextureStyle { Checker, Noise, Blobs, Mixed };

std::string to_string(TextureStyle style);
TextureStyle parse_texture_style(std::string_view name);

struct SceneSpec {
    std::uint64_t seed = 1;
    int canvas_size = 1024;  ///< side of every square layer texture, pixels
    int frame_width = 128;
    int frame_height = 128;
    int n_layers = 1;
    std::vector<double> layer_depths{1.0};  ///< ascending, first == 1 (base plane)
    TextureStyle texture_style = TextureStyle::Mixed;

    /// Throws InvalidSpec.
    void validate() const;
};

/// One texture plane. Layers nearer than the deepest one carry an alpha mask.
struct Layer {
    double depth = 1.0;
    Frame texture;
    std::vector<float> alpha;  ///< empty means opaque

    float alpha_at(int x, int y) const;
};

struct Scene {
    int canvas_size = 0;
    std::vector<Layer> layers;  ///< layers[0] is the base plane

    bool operator==(const Scene& other) const;
};

Scene build_scene(const SceneSpec& spec);

/// `n_layers` depths evenly spread over [1, max_depth].
std::vector<double> default_layer_depths(int n_layers, double max_depth = 3.0);

// =============================================================================
// Camera
// =============================================================================

struct CameraPose {
    double center_x = 0.0;  ///< base-layer world pixels
    double center_y = 0.0;
    double theta = 0.0;     ///< radians
    double zoom = 1.0;      ///< > 0
};

struct CameraPath {
    std::vector<CameraPose> poses;
    std::size_t size() const { return poses.size(); }
};

/// World (layer texture) coordinates -> screen coordinates. A layer at depth d
/// sees the camera translation relative to the canvas centre scaled by 1/d.
AffineMatrix world_to_screen(const CameraPose& pose, int width, int height, double depth = 1.0,
                             int canvas_size = 0);
AffineMatrix screen_to_world(const CameraPose& pose, int width, int height, double depth = 1.0,
                             int canvas_size = 0);

/// Pose whose base-layer view relates to `from` by the frame-pair motion `params`.
CameraPose pose_after(const CameraPose& from, const AffineParams& params, int width, int height);

/// Low-order polynomial camera track, evaluated at frame t:
///   center = start + v t + a t^2 / 2 + j t^3 / 6,  theta = theta0 + omega t,
///   zoom = zoom0 * exp(zoom_rate t).
struct SmoothSpec {
    double start_x = 512.0;
    double start_y = 512.0;
    double velocity_x = 0.0, velocity_y = 0.0;
    double accel_x = 0.0, accel_y = 0.0;
    double jerk_x = 0.0, jerk_y = 0.0;
    double theta0 = 0.0;
    double omega = 0.0;
    double zoom0 = 1.0;
    double zoom_rate = 0.0;

    CameraPose at(double t) const;
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Shake model: per axis, a sum of sinusoids whose amplitude, frequency and
/// phase are sampled uniformly, plus white Gaussian jitter.
struct NoiseProfile {
    int n_sinusoids = 3;
    Range amp{0.5, 2.5};          ///< pixels (centre x and y)
    Range freq{0.05, 0.25};       ///< cycles per frame
    Range rot_amp{0.0, 0.004};    ///< radians
    Range zoom_amp{0.0, 0.004};   ///< relative zoom amplitude
    double jitter_sigma = 0.3;    ///< pixels
    double rot_jitter_sigma = 0.0005;  ///< radians
    std::uint64_t seed = 1;

    void validate() const;
    static NoiseProfile none();
};

struct Sinusoid {
    double amp = 0.0;
    double freq = 0.0;
    double phase = 0.0;

    double at(double t) const;
};

enum ShakeAxis { kShakeX = 0, kShakeY = 1, kShakeTheta = 2, kShakeZoom = 3 };

struct ShakeSignal {
    std::array<std::vector<Sinusoid>, 4> axes;
    std::vector<double> jitter_x, jitter_y, jitter_theta;

    /// Sum of the sinusoids of `axis` at frame t (jitter excluded).
    double periodic(ShakeAxis axis, double t) const;
};

ShakeSignal sample_shake(const NoiseProfile& noise, int n_frames);

struct CameraPaths {
    CameraPath smooth;
    CameraPath shaky;
    ShakeSignal shake;
};

/// Requires n_frames >= 2 (InvalidSpec otherwise).
CameraPaths generate_camera_path(const SmoothSpec& smooth, const NoiseProfile& noise, int n_frames);

/// Random polynomial track that keeps the view inside the canvas for
/// `n_frames` frames, with peak speed near `max_speed` px/frame.
SmoothSpec plan_smooth_path(std::uint64_t seed, int n_frames, const SceneSpec& scene,
                            double max_speed, double margin);

// =============================================================================
// Rendering
// =============================================================================

/// Composites the layer stack (deepest first) through the camera with bilinear
/// sampling; samples outside the canvas are black / transparent. Output is
/// quantized to integer intensities.
Frame render_frame(const Scene& scene, const CameraPose& pose, int width, int height,
                   Exec exec = Exec::Parallel);

std::vector<Frame> render_video(const Scene& scene, const CameraPath& path, int width, int height,
                                Exec exec = Exec::Parallel);

// =============================================================================
// Mark-point ground truth
// =============================================================================

struct MarkRecord {
    std::uint64_t uid = 0;
    int frame_id = 0;
    double x = 0.0;
    double y = 0.0;

    bool operator==(const MarkRecord&) const = default;
};

struct MarkConfig {
    int K = 16;                  ///< points sampled per sampling instant
    int beta_frames = 24;        ///< object lifetime, frames
    int sampling_period = 0;     ///< 0 selects beta_frames / 2
    std::uint64_t seed = 1;
    bool scatter_layers = false; ///< attach to the first opaque layer instead of the base plane

    int period() const;
    void validate() const;
};

/// Samples hypothetical objects on screen every sampling period, anchors each
/// to a stationary world point, and records its screen position while it is
/// visible and younger than beta_frames. Sorted by frame then uid.
std::vector<MarkRecord> emit_mark_points(const Scene& scene, const CameraPath& path,
                                         const MarkConfig& cfg, int width, int height);

/// Similarity for pair (i, i+1) from uids shared by both frames.
/// Throws InsufficientMarks(i).
AffineParams pair_from_marks(std::span<const MarkRecord> records, int pair_index);

/// One similarity per consecutive pair; output length n_frames - 1.
std::vector<AffineParams> ground_truth_pairs(std::span<const MarkRecord> records, int n_frames);

}  // namespace synthstab
