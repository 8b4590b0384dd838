#include "synthstab/synthworld.hpp"

#include "synthstab/errors.hpp"
#include "synthstab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace synthstab {

// =============================================================================
// Texture synthesis
// =============================================================================

namespace {

constexpr float kTextureLow = 16.0f;
constexpr float kTextureHigh = 240.0f;

double smoothstep(double e0, double e1, double x) {
    const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

void normalize_unit(std::vector<float>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const float low = *lo, span = *hi - *lo;
    if (span <= 0.0f) {
        std::fill(v.begin(), v.end(), 0.5f);
        return;
    }
    for (float& x : v) x = (x - low) / span;
}

// Multi-octave value noise: random lattice, smoothstep interpolation.
std::vector<float> value_noise(int side, Rng& rng, int coarsest_period, int finest_period) {
    std::vector<float> out(static_cast<std::size_t>(side) * side, 0.0f);
    double weight = 1.0;
    for (int period = coarsest_period; period >= finest_period; period /= 2) {
        const int cells = side / period + 2;
        std::vector<double> lattice(static_cast<std::size_t>(cells) * cells);
        for (double& v : lattice) v = rng.uniform(-1.0, 1.0);
        for (int y = 0; y < side; ++y) {
            const double gy = static_cast<double>(y) / period;
            const int iy = static_cast<int>(gy);
            const double ty = smoothstep(0.0, 1.0, gy - iy);
            for (int x = 0; x < side; ++x) {
                const double gx = static_cast<double>(x) / period;
                const int ix = static_cast<int>(gx);
                const double tx = smoothstep(0.0, 1.0, gx - ix);
                const auto at = [&](int cx, int cy) { return lattice[static_cast<std::size_t>(cy) * cells + cx]; };
                const double top = at(ix, iy) + tx * (at(ix + 1, iy) - at(ix, iy));
                const double bottom = at(ix, iy + 1) + tx * (at(ix + 1, iy + 1) - at(ix, iy + 1));
                out[static_cast<std::size_t>(y) * side + x] += static_cast<float>(weight * (top + ty * (bottom - top)));
            }
        }
        weight *= 0.6;
    }
    return out;
}

std::vector<float> blob_field(int side, Rng& rng) {
    std::vector<float> out(static_cast<std::size_t>(side) * side, 0.0f);
    const int count = std::max(8, side * side / 1500);
    for (int b = 0; b < count; ++b) {
        const double cx = rng.uniform(0.0, side);
        const double cy = rng.uniform(0.0, side);
        const double r = rng.uniform(4.0, 28.0);
        const double amp = rng.uniform(-1.0, 1.0);
        const int x0 = std::max(0, static_cast<int>(cx - 3 * r));
        const int x1 = std::min(side - 1, static_cast<int>(cx + 3 * r));
        const int y0 = std::max(0, static_cast<int>(cy - 3 * r));
        const int y1 = std::min(side - 1, static_cast<int>(cy + 3 * r));
        const double inv = 1.0 / (2.0 * r * r);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                out[static_cast<std::size_t>(y) * side + x] += static_cast<float>(amp * std::exp(-d2 * inv));
            }
        }
    }
    return out;
}

// Checkerboard with soft edges at a random orientation.
std::vector<float> checker_field(int side, Rng& rng) {
    std::vector<float> out(static_cast<std::size_t>(side) * side);
    const double cell = rng.uniform(12.0, 40.0);
    const double angle = rng.uniform(0.0, std::numbers::pi / 2.0);
    const double c = std::cos(angle), s = std::sin(angle);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const double u = (c * x + s * y) * std::numbers::pi / cell;
            const double v = (-s * x + c * y) * std::numbers::pi / cell;
            out[static_cast<std::size_t>(y) * side + x] = static_cast<float>(std::tanh(3.0 * std::sin(u) * std::sin(v)));
        }
    }
    return out;
}

Frame make_texture(int side, TextureStyle style, Rng& rng) {
    std::vector<float> field;
    switch (style) {
        case TextureStyle::Noise:
            field = value_noise(side, rng, 128, 4);
            break;
        case TextureStyle::Blobs:
            field = blob_field(side, rng);
            break;
        case TextureStyle::Checker:
            field = checker_field(side, rng);
            break;
        case TextureStyle::Mixed: {
            auto noise = value_noise(side, rng, 128, 4);
            auto blobs = blob_field(side, rng);
            auto checker = checker_field(side, rng);
            normalize_unit(noise);
            normalize_unit(blobs);
            normalize_unit(checker);
            field.resize(noise.size());
            for (std::size_t i = 0; i < field.size(); ++i) {
                field[i] = 0.5f * noise[i] + 0.3f * blobs[i] + 0.2f * checker[i];
            }
            break;
        }
    }
    normalize_unit(field);
    Frame tex(side, side);
    for (std::size_t i = 0; i < field.size(); ++i) {
        tex.pixels[i] = kTextureLow + (kTextureHigh - kTextureLow) * field[i];
    }
    return tex;
}

std::vector<float> make_alpha(int side, Rng& rng) {
    auto field = value_noise(side, rng, 256, 32);
    normalize_unit(field);
    for (float& a : field) a = static_cast<float>(smoothstep(0.30, 0.42, a));
    return field;
}

}  // namespace

std::string to_string(TextureStyle style) {
    switch (style) {
        case TextureStyle::Checker: return "checker";
        case TextureStyle::Noise: return "noise";
        case TextureStyle::Blobs: return "blobs";
        case TextureStyle::Mixed: return "mixed";
    }
    return "mixed";
}

TextureStyle parse_texture_style(std::string_view name) {
    if (name == "checker") return TextureStyle::Checker;
    if (name == "noise") return TextureStyle::Noise;
    if (name == "blobs") return TextureStyle::Blobs;
    if (name == "mixed") return TextureStyle::Mixed;
    throw InvalidSpec("unknown texture style '" + std::string(name) + "'");
}

void SceneSpec::validate() const {
    if (frame_width <= 0 || frame_height <= 0) throw InvalidSpec("frame size must be positive");
    const int side = std::max(frame_width, frame_height);
    if (canvas_size < 4 * side) {
        throw InvalidSpec("canvas_size " + std::to_string(canvas_size) + " < 4 x frame side " +
                          std::to_string(side));
    }
    if (n_layers < 1) throw InvalidSpec("n_layers must be >= 1");
    if (static_cast<int>(layer_depths.size()) != n_layers) {
        throw InvalidSpec("layer_depths must hold n_layers entries");
    }
    if (layer_depths.front() != 1.0) throw InvalidSpec("first layer depth must be 1");
    for (std::size_t i = 1; i < layer_depths.size(); ++i) {
        if (!(layer_depths[i] >= layer_depths[i - 1])) throw InvalidSpec("layer depths must ascend");
    }
}

float Layer::alpha_at(int x, int y) const {
    return alpha.empty() ? 1.0f : alpha[texture.index(x, y)];
}

bool Scene::operator==(const Scene& other) const {
    if (canvas_size != other.canvas_size || layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].depth != other.layers[i].depth || !(layers[i].texture == other.layers[i].texture) ||
            layers[i].alpha != other.layers[i].alpha) {
            return false;
        }
    }
    return true;
}

std::vector<double> default_layer_depths(int n_layers, double max_depth) {
    std::vector<double> depths(static_cast<std::size_t>(std::max(n_layers, 1)), 1.0);
    for (int i = 1; i < n_layers; ++i) depths[static_cast<std::size_t>(i)] = 1.0 + (max_depth - 1.0) * i / (n_layers - 1);
    return depths;
}

Scene build_scene(const SceneSpec& spec) {
    spec.validate();
    Scene scene;
    scene.canvas_size = spec.canvas_size;
    scene.layers.resize(static_cast<std::size_t>(spec.n_layers));
    for (int i = 0; i < spec.n_layers; ++i) {
        Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(i)));
        Layer& layer = scene.layers[static_cast<std::size_t>(i)];
        layer.depth = spec.layer_depths[static_cast<std::size_t>(i)];
        layer.texture = make_texture(spec.canvas_size, spec.texture_style, rng);
        if (i + 1 < spec.n_layers) layer.alpha = make_alpha(spec.canvas_size, rng);
    }
    return scene;
}

// =============================================================================
// Camera
// =============================================================================

AffineMatrix world_to_screen(const CameraPose& pose, int width, int height, double depth, int canvas_size) {
    const Point2 c = frame_center(width, height);
    double cx = pose.center_x, cy = pose.center_y;
    if (depth != 1.0) {
        const double k = (canvas_size - 1) * 0.5;
        cx = k + (cx - k) / depth;
        cy = k + (cy - k) / depth;
    }
    const double co = pose.zoom * std::cos(pose.theta);
    const double si = pose.zoom * std::sin(pose.theta);
    // p = z R(-theta) (w - c_d) + C
    AffineMatrix m{{co, si, 0.0, -si, co, 0.0}};
    m.m[2] = c.x - (co * cx + si * cy);
    m.m[5] = c.y - (-si * cx + co * cy);
    return m;
}

AffineMatrix screen_to_world(const CameraPose& pose, int width, int height, double depth, int canvas_size) {
    return invert(world_to_screen(pose, width, height, depth, canvas_size));
}

CameraPose pose_after(const CameraPose& from, const AffineParams& params, int width, int height) {
    const AffineMatrix m = compose(params_to_matrix(params), world_to_screen(from, width, height));
    CameraPose pose;
    pose.zoom = std::hypot(m.m[0], m.m[3]);
    pose.theta = std::atan2(m.m[1], m.m[0]);
    const Point2 c = frame_center(width, height);
    // c_w solves z R(-theta) c_w = C - t
    const AffineMatrix linear{{m.m[0], m.m[1], 0.0, m.m[3], m.m[4], 0.0}};
    const Point2 w = apply(invert(linear), Point2{c.x - m.m[2], c.y - m.m[5]});
    pose.center_x = w.x;
    pose.center_y = w.y;
    return pose;
}

CameraPose SmoothSpec::at(double t) const {
    CameraPose p;
    p.center_x = start_x + velocity_x * t + accel_x * t * t / 2.0 + jerk_x * t * t * t / 6.0;
    p.center_y = start_y + velocity_y * t + accel_y * t * t / 2.0 + jerk_y * t * t * t / 6.0;
    p.theta = theta0 + omega * t;
    p.zoom = zoom0 * std::exp(zoom_rate * t);
    return p;
}

void NoiseProfile::validate() const {
    const auto check = [](Range r, const char* name) {
        if (!(r.lo >= 0.0) || !(r.hi >= r.lo)) throw InvalidSpec(std::string(name) + " range must satisfy 0 <= lo <= hi");
    };
    if (n_sinusoids < 0) throw InvalidSpec("n_sinusoids must be >= 0");
    check(amp, "amp");
    check(freq, "freq");
    check(rot_amp, "rot_amp");
    check(zoom_amp, "zoom_amp");
    if (zoom_amp.hi * n_sinusoids >= 1.0) throw InvalidSpec("zoom amplitude would make zoom non-positive");
    if (!(jitter_sigma >= 0.0) || !(rot_jitter_sigma >= 0.0)) throw InvalidSpec("jitter sigmas must be >= 0");
}

NoiseProfile NoiseProfile::none() {
    NoiseProfile n;
    n.n_sinusoids = 0;
    n.amp = n.freq = n.rot_amp = n.zoom_amp = Range{0.0, 0.0};
    n.jitter_sigma = 0.0;
    n.rot_jitter_sigma = 0.0;
    return n;
}

double Sinusoid::at(double t) const {
    return amp * std::sin(2.0 * std::numbers::pi * freq * t + phase);
}

double ShakeSignal::periodic(ShakeAxis axis, double t) const {
    double sum = 0.0;
    for (const Sinusoid& s : axes[static_cast<std::size_t>(axis)]) sum += s.at(t);
    return sum;
}

ShakeSignal sample_shake(const NoiseProfile& noise, int n_frames) {
    noise.validate();
    Rng rng(noise.seed);
    ShakeSignal shake;
    const std::array<Range, 4> amps{noise.amp, noise.amp, noise.rot_amp, noise.zoom_amp};
    for (std::size_t axis = 0; axis < 4; ++axis) {
        for (int k = 0; k < noise.n_sinusoids; ++k) {
            Sinusoid s;
            s.amp = rng.uniform(amps[axis].lo, amps[axis].hi);
            s.freq = rng.uniform(noise.freq.lo, noise.freq.hi);
            s.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            shake.axes[axis].push_back(s);
        }
    }
    const auto n = static_cast<std::size_t>(std::max(n_frames, 0));
    shake.jitter_x.resize(n);
    shake.jitter_y.resize(n);
    shake.jitter_theta.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        shake.jitter_x[t] = noise.jitter_sigma * rng.normal();
        shake.jitter_y[t] = noise.jitter_sigma * rng.normal();
        shake.jitter_theta[t] = noise.rot_jitter_sigma * rng.normal();
    }
    return shake;
}

CameraPaths generate_camera_path(const SmoothSpec& smooth, const NoiseProfile& noise, int n_frames) {
    if (n_frames < 2) throw InvalidSpec("camera path needs at least 2 frames");
    CameraPaths out;
    out.shake = sample_shake(noise, n_frames);
    out.smooth.poses.reserve(static_cast<std::size_t>(n_frames));
    out.shaky.poses.reserve(static_cast<std::size_t>(n_frames));
    for (int t = 0; t < n_frames; ++t) {
        const CameraPose base = smooth.at(t);
        CameraPose shaky = base;
        const auto i = static_cast<std::size_t>(t);
        shaky.center_x += out.shake.periodic(kShakeX, t) + out.shake.jitter_x[i];
        shaky.center_y += out.shake.periodic(kShakeY, t) + out.shake.jitter_y[i];
        shaky.theta += out.shake.periodic(kShakeTheta, t) + out.shake.jitter_theta[i];
        shaky.zoom *= 1.0 + out.shake.periodic(kShakeZoom, t);
        out.smooth.poses.push_back(base);
        out.shaky.poses.push_back(shaky);
    }
    return out;
}

SmoothSpec plan_smooth_path(std::uint64_t seed, int n_frames, const SceneSpec& scene, double max_speed,
                            double margin) {
    scene.validate();
    Rng rng(seed);
    const double T = std::max(1, n_frames - 1);
    const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double speed = max_speed * rng.uniform(0.4, 1.0);

    SmoothSpec spec;
    spec.velocity_x = speed * std::cos(dir);
    spec.velocity_y = speed * std::sin(dir);
    spec.accel_x = rng.uniform(-1.0, 1.0) * 0.8 * max_speed / T;
    spec.accel_y = rng.uniform(-1.0, 1.0) * 0.8 * max_speed / T;
    spec.jerk_x = rng.uniform(-1.0, 1.0) * 1.6 * max_speed / (T * T);
    spec.jerk_y = rng.uniform(-1.0, 1.0) * 1.6 * max_speed / (T * T);
    spec.omega = rng.uniform(-1.0, 1.0) * 3e-4;
    spec.start_x = spec.start_y = 0.0;

    double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
    for (int t = 0; t <= static_cast<int>(T); ++t) {
        const CameraPose p = spec.at(t);
        min_x = std::min(min_x, p.center_x);
        max_x = std::max(max_x, p.center_x);
        min_y = std::min(min_y, p.center_y);
        max_y = std::max(max_y, p.center_y);
    }
    const double radius = 0.5 * std::hypot(scene.frame_width, scene.frame_height) + margin;
    const double room = scene.canvas_size - 1 - 2.0 * radius;
    if (room <= 0.0) throw InvalidSpec("canvas too small for the camera view plus shake margin");
    const double extent = std::max(max_x - min_x, max_y - min_y);
    if (extent > room) {
        const double k = room / extent;
        spec.velocity_x *= k;
        spec.velocity_y *= k;
        spec.accel_x *= k;
        spec.accel_y *= k;
        spec.jerk_x *= k;
        spec.jerk_y *= k;
        min_x *= k;
        max_x *= k;
        min_y *= k;
        max_y *= k;
    }
    const double center = (scene.canvas_size - 1) * 0.5;
    spec.start_x = center - 0.5 * (min_x + max_x);
    spec.start_y = center - 0.5 * (min_y + max_y);
    return spec;
}

// =============================================================================
// Rendering
// =============================================================================

namespace {

struct LayerView {
    const Layer* layer;
    AffineMatrix to_world;
};

std::vector<LayerView> layer_views(const Scene& scene, const CameraPose& pose, int width, int height) {
    std::vector<LayerView> views;
    views.reserve(scene.layers.size());
    for (const Layer& layer : scene.layers) {
        views.push_back({&layer, screen_to_world(pose, width, height, layer.depth, scene.canvas_size)});
    }
    return views;
}

float shade_pixel(const std::vector<LayerView>& views, int x, int y) {
    float value = 0.0f;
    // Deepest layer first; nearer layers are composited over it.
    for (auto it = views.rbegin(); it != views.rend(); ++it) {
        const Point2 w = apply(it->to_world, Point2{static_cast<double>(x), static_cast<double>(y)});
        bool inside = false;
        const float tex = sample_bilinear(it->layer->texture, w.x, w.y, 0.0f, &inside);
        if (!inside) continue;
        if (it->layer->alpha.empty()) {
            value = tex;
            continue;
        }
        const Layer& l = *it->layer;
        const int x0 = std::clamp(static_cast<int>(std::floor(w.x)), 0, l.texture.width - 1);
        const int y0 = std::clamp(static_cast<int>(std::floor(w.y)), 0, l.texture.height - 1);
        const float a = l.alpha_at(x0, y0);
        value = value + a * (tex - value);
    }
    return std::clamp(std::nearbyint(value), 0.0f, 255.0f);
}

}  // namespace

Frame render_frame(const Scene& scene, const CameraPose& pose, int width, int height, Exec exec) {
    Frame out(width, height);
    const auto views = layer_views(scene, pose, width, height);
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) out.at(x, y) = shade_pixel(views, x, y);
        }
    } else {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) out.at(x, y) = shade_pixel(views, x, y);
        }
    }
    return out;
}

std::vector<Frame> render_video(const Scene& scene, const CameraPath& path, int width, int height, Exec exec) {
    std::vector<Frame> frames(path.size());
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::size_t i = 0; i < path.size(); ++i) {
            frames[i] = render_frame(scene, path.poses[i], width, height, Exec::Serial);
        }
    } else {
        for (std::size_t i = 0; i < path.size(); ++i) {
            frames[i] = render_frame(scene, path.poses[i], width, height, Exec::Serial);
        }
    }
    return frames;
}

// =============================================================================
// Mark points
// =============================================================================

int MarkConfig::period() const {
    return sampling_period > 0 ? sampling_period : std::max(1, beta_frames / 2);
}

void MarkConfig::validate() const {
    if (K < 3) throw InvalidSpec("K must be >= 3");
    if (beta_frames < 2) throw InvalidSpec("beta_frames must be >= 2");
    if (sampling_period < 0) throw InvalidSpec("sampling_period must be >= 0");
}

namespace {

struct HypotheticalObject {
    std::uint64_t uid;
    std::size_t layer;
    Point2 world;
    int birth;
};

// First layer (nearest first) that is opaque under the screen point; the
// deepest layer always terminates the ray.
std::size_t ray_hit_layer(const Scene& scene, const CameraPose& pose, Point2 p, int width, int height) {
    for (std::size_t i = 0; i + 1 < scene.layers.size(); ++i) {
        const Layer& l = scene.layers[i];
        const Point2 w = apply(screen_to_world(pose, width, height, l.depth, scene.canvas_size), p);
        if (!inside_grid(w.x, w.y, l.texture.width, l.texture.height)) continue;
        const int x = static_cast<int>(std::floor(w.x));
        const int y = static_cast<int>(std::floor(w.y));
        if (l.alpha_at(std::min(x, l.texture.width - 1), std::min(y, l.texture.height - 1)) >= 0.5f) return i;
    }
    return scene.layers.empty() ? 0 : scene.layers.size() - 1;
}

}  // namespace

std::vector<MarkRecord> emit_mark_points(const Scene& scene, const CameraPath& path, const MarkConfig& cfg,
                                         int width, int height) {
    cfg.validate();
    Rng rng(cfg.seed);
    const int period = cfg.period();
    std::vector<HypotheticalObject> alive;
    std::vector<MarkRecord> records;
    std::uint64_t next_uid = 1;

    const auto depth_of = [&](std::size_t layer) {
        return scene.layers.empty() ? 1.0 : scene.layers[layer].depth;
    };

    for (int f = 0; f < static_cast<int>(path.size()); ++f) {
        const CameraPose& pose = path.poses[static_cast<std::size_t>(f)];
        if (f % period == 0) {
            for (int k = 0; k < cfg.K; ++k) {
                const Point2 p{rng.uniform(0.0, width - 1.0), rng.uniform(0.0, height - 1.0)};
                const std::size_t layer = cfg.scatter_layers ? ray_hit_layer(scene, pose, p, width, height) : 0;
                const Point2 w = apply(screen_to_world(pose, width, height, depth_of(layer), scene.canvas_size), p);
                alive.push_back({next_uid++, layer, w, f});
            }
        }
        std::vector<HypotheticalObject> survivors;
        survivors.reserve(alive.size());
        for (const HypotheticalObject& obj : alive) {
            if (f - obj.birth >= cfg.beta_frames) continue;
            const Point2 s = apply(world_to_screen(pose, width, height, depth_of(obj.layer), scene.canvas_size), obj.world);
            if (!(s.x >= 0.0 && s.y >= 0.0 && s.x < width && s.y < height && s.x <= width - 1.0 &&
                  s.y <= height - 1.0)) {
                continue;
            }
            records.push_back({obj.uid, f, s.x, s.y});
            survivors.push_back(obj);
        }
        alive = std::move(survivors);
    }
    return records;
}

namespace {

using FrameMarks = std::vector<std::pair<std::uint64_t, Point2>>;

std::map<int, FrameMarks> group_by_frame(std::span<const MarkRecord> records) {
    std::map<int, FrameMarks> frames;
    for (const MarkRecord& r : records) frames[r.frame_id].push_back({r.uid, {r.x, r.y}});
    for (auto& [id, marks] : frames) {
        std::sort(marks.begin(), marks.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    return frames;
}

AffineParams fit_pair(const FrameMarks* a, const FrameMarks* b, int pair_index) {
    std::vector<Correspondence> corrs;
    if (a && b) {
        auto ia = a->begin();
        auto ib = b->begin();
        while (ia != a->end() && ib != b->end()) {
            if (ia->first < ib->first) {
                ++ia;
            } else if (ib->first < ia->first) {
                ++ib;
            } else {
                corrs.push_back({ia->second, ib->second});
                ++ia;
                ++ib;
            }
        }
    }
    if (corrs.size() < 2) throw InsufficientMarks(static_cast<std::size_t>(pair_index));
    return fit_similarity(corrs);
}

}  // namespace

AffineParams pair_from_marks(std::span<const MarkRecord> records, int pair_index) {
    FrameMarks a, b;
    for (const MarkRecord& r : records) {
        if (r.frame_id == pair_index) a.push_back({r.uid, {r.x, r.y}});
        if (r.frame_id == pair_index + 1) b.push_back({r.uid, {r.x, r.y}});
    }
    const auto by_uid = [](const auto& l, const auto& r) { return l.first < r.first; };
    std::sort(a.begin(), a.end(), by_uid);
    std::sort(b.begin(), b.end(), by_uid);
    return fit_pair(&a, &b, pair_index);
}

std::vector<AffineParams> ground_truth_pairs(std::span<const MarkRecord> records, int n_frames) {
    const auto frames = group_by_frame(records);
    std::vector<AffineParams> out;
    out.reserve(static_cast<std::size_t>(std::max(0, n_frames - 1)));
    for (int i = 0; i + 1 < n_frames; ++i) {
        const auto a = frames.find(i);
        const auto b = frames.find(i + 1);
        out.push_back(fit_pair(a == frames.end() ? nullptr : &a->second,
                               b == frames.end() ? nullptr : &b->second, i));
    }
    return out;
}

}  // namespace synthstab
