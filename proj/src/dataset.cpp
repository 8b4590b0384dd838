#include "synthstab/dataset.hpp"

#include "synthstab/errors.hpp"
#include "synthstab/rng.hpp"
#include "synthstab/textio.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>

namespace synthstab {

namespace fs = std::filesystem;

namespace {

std::uint64_t video_seed(const GeneratorConfig& cfg, int index) {
    return mix_seed(cfg.seed, static_cast<std::uint64_t>(index));
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void GeneratorConfig::validate() const {
    if (n_videos < 0) throw InvalidSpec("videos must be >= 0");
    if (n_frames < 2) throw InvalidSpec("frames must be >= 2");
    if (fps < 1) throw InvalidSpec("fps must be >= 1");
    if (width < 16 || height < 16) throw InvalidSpec("frame size must be at least 16x16");
    if (n_layers < 1) throw InvalidSpec("layers must be >= 1");
    if (!(max_depth >= 1.0)) throw InvalidSpec("max depth must be >= 1");
    if (!(max_speed >= 0.0)) throw InvalidSpec("max speed must be >= 0");
    scene_spec(0).validate();
    mark_config(0).validate();
    noise.validate();
}

SceneSpec GeneratorConfig::scene_spec(int video_index) const {
    SceneSpec spec;
    spec.seed = mix_seed(video_seed(*this, video_index), 0);
    spec.canvas_size = canvas_size;
    spec.frame_width = width;
    spec.frame_height = height;
    spec.n_layers = n_layers;
    spec.layer_depths = default_layer_depths(n_layers, max_depth);
    spec.texture_style = texture;
    return spec;
}

MarkConfig GeneratorConfig::mark_config(int video_index) const {
    MarkConfig m;
    m.K = K;
    m.beta_frames = beta_frames > 0 ? beta_frames : fps;
    m.sampling_period = sampling_period;
    m.seed = mix_seed(video_seed(*this, video_index), 3);
    m.scatter_layers = scatter_layers;
    return m;
}

NoiseProfile GeneratorConfig::noise_profile(int video_index) const {
    NoiseProfile n = noise;
    n.seed = mix_seed(video_seed(*this, video_index), 1);
    return n;
}

GeneratedVideo generate_video(const GeneratorConfig& cfg, int video_index, Exec exec) {
    cfg.validate();
    const SceneSpec spec = cfg.scene_spec(video_index);
    const Scene scene = build_scene(spec);
    const NoiseProfile noise = cfg.noise_profile(video_index);
    const double margin = noise.n_sinusoids * noise.amp.hi + 3.0 * noise.jitter_sigma + 2.0;
    const SmoothSpec smooth =
        plan_smooth_path(mix_seed(video_seed(cfg, video_index), 2), cfg.n_frames, spec, cfg.max_speed, margin);

    GeneratedVideo out;
    out.paths = generate_camera_path(smooth, noise, cfg.n_frames);
    Video& v = out.video;
    v.id = video_id(video_index);
    v.manifest = {cfg.n_frames, cfg.fps, cfg.width, cfg.height, video_seed(cfg, video_index), cfg.n_layers};
    v.frames = render_video(scene, out.paths.shaky, cfg.width, cfg.height, exec);
    v.marks = emit_mark_points(scene, out.paths.shaky, cfg.mark_config(video_index), cfg.width, cfg.height);
    v.gt_affine = ground_truth_pairs(v.marks, cfg.n_frames);
    return out;
}

std::string video_id(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "video_%03d", index);
    return buf;
}

std::string frame_filename(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.pgm", index);
    return buf;
}

// =============================================================================
// Text formats
// =============================================================================

void write_marks(const std::string& path, std::span<const MarkRecord> marks) {
    std::vector<MarkRecord> sorted(marks.begin(), marks.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const MarkRecord& a, const MarkRecord& b) {
        return a.frame_id != b.frame_id ? a.frame_id < b.frame_id : a.uid < b.uid;
    });
    std::string out;
    out.reserve(sorted.size() * 48);
    for (const MarkRecord& r : sorted) {
        out += std::to_string(r.frame_id) + ' ' + std::to_string(r.uid) + ' ' + fmt17(r.x) + ' ' + fmt17(r.y) + '\n';
    }
    write_file_atomic(path, out);
}

std::vector<MarkRecord> read_marks(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<MarkRecord> marks;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::istringstream ls(line);
        std::string f, uid, x, y;
        if (!(ls >> f >> uid >> x >> y)) throw IoFailure("malformed mark record in '" + path + "': " + line);
        marks.push_back({static_cast<std::uint64_t>(parse_int(uid)), static_cast<int>(parse_int(f)), parse_double(x),
                         parse_double(y)});
    }
    return marks;
}

void write_params_file(const std::string& path, std::span<const AffineParams> params) {
    std::string out;
    for (const AffineParams& p : params) out += format_params(p) + '\n';
    write_file_atomic(path, out);
}

std::vector<AffineParams> read_params_file(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<AffineParams> params;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        params.push_back(parse_params(line));
    }
    return params;
}

void write_manifest(const std::string& path, const VideoManifest& m) {
    std::ostringstream out;
    out << "n_frames=" << m.n_frames << '\n'
        << "fps=" << m.fps << '\n'
        << "width=" << m.width << '\n'
        << "height=" << m.height << '\n'
        << "seed=" << m.seed << '\n'
        << "n_layers=" << m.n_layers << '\n';
    write_file_atomic(path, out.str());
}

VideoManifest read_manifest(const std::string& path) {
    const auto kv = parse_key_values(read_file(path));
    const auto get = [&](const char* key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw IoFailure("manifest '" + path + "' lacks key '" + key + "'");
        return it->second;
    };
    VideoManifest m;
    m.n_frames = static_cast<int>(parse_int(get("n_frames")));
    m.fps = static_cast<int>(parse_int(get("fps")));
    m.width = static_cast<int>(parse_int(get("width")));
    m.height = static_cast<int>(parse_int(get("height")));
    m.seed = static_cast<std::uint64_t>(std::stoull(get("seed")));
    m.n_layers = static_cast<int>(parse_int(get("n_layers")));
    return m;
}

std::vector<Frame> read_frame_sequence(const std::string& dir) {
    std::vector<Frame> frames;
    for (int i = 0;; ++i) {
        const fs::path p = fs::path(dir) / frame_filename(i);
        if (!fs::exists(p)) break;
        frames.push_back(read_pgm(p.string()));
    }
    return frames;
}

void write_frame_sequence(const std::string& dir, std::span<const Frame> frames) {
    ensure_directory(dir);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        write_pgm((fs::path(dir) / frame_filename(static_cast<int>(i))).string(), frames[i]);
    }
}

// =============================================================================
// Videos and datasets
// =============================================================================

void write_video(const std::string& dir, const Video& video) {
    ensure_directory(dir);
    write_frame_sequence(dir, video.frames);
    write_marks((fs::path(dir) / "marks.txt").string(), video.marks);
    write_params_file((fs::path(dir) / "gt_affine.txt").string(), video.gt_affine);
    write_manifest((fs::path(dir) / "manifest.txt").string(), video.manifest);
}

Video read_video(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoFailure("video directory '" + dir + "' does not exist");
    Video v;
    v.id = fs::path(dir).filename().string();
    v.manifest = read_manifest((fs::path(dir) / "manifest.txt").string());
    v.frames = read_frame_sequence(dir);
    if (static_cast<int>(v.frames.size()) != v.manifest.n_frames) {
        throw IoFailure("'" + dir + "' holds " + std::to_string(v.frames.size()) + " frames, manifest says " +
                        std::to_string(v.manifest.n_frames));
    }
    for (const Frame& f : v.frames) {
        if (f.width != v.manifest.width || f.height != v.manifest.height) {
            throw IoFailure("frame size in '" + dir + "' disagrees with manifest");
        }
    }
    if (const auto marks = fs::path(dir) / "marks.txt"; fs::exists(marks)) v.marks = read_marks(marks.string());
    if (const auto gt = fs::path(dir) / "gt_affine.txt"; fs::exists(gt)) v.gt_affine = read_params_file(gt.string());
    return v;
}

void write_dataset_index(const std::string& out_dir, std::span<const std::string> ids) {
    ensure_directory(out_dir);
    std::string out;
    for (const std::string& id : ids) out += id + '\n';
    write_file_atomic((fs::path(out_dir) / "index.txt").string(), out);
}

void write_dataset(const std::string& out_dir, std::span<const Video> videos) {
    ensure_directory(out_dir);
    std::vector<std::string> ids;
    for (const Video& v : videos) {
        write_video((fs::path(out_dir) / v.id).string(), v);
        ids.push_back(v.id);
    }
    write_dataset_index(out_dir, ids);
}

std::vector<std::string> read_dataset_index(const std::string& root) {
    std::istringstream in(read_file((fs::path(root) / "index.txt").string()));
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (auto id = trim(line); !id.empty()) ids.push_back(id);
    }
    return ids;
}

std::string describe(const GeneratorConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "videos=" << c.n_videos << '\n'
        << "frames=" << c.n_frames << '\n'
        << "fps=" << c.fps << '\n'
        << "width=" << c.width << '\n'
        << "height=" << c.height << '\n'
        << "seed=" << c.seed << '\n'
        << "layers=" << c.n_layers << '\n'
        << "max_depth=" << c.max_depth << '\n'
        << "canvas=" << c.canvas_size << '\n'
        << "texture=" << to_string(c.texture) << '\n'
        << "k=" << c.K << '\n'
        << "beta=" << (c.beta_frames > 0 ? c.beta_frames : c.fps) << '\n'
        << "period=" << c.mark_config(0).period() << '\n'
        << "scatter_layers=" << (c.scatter_layers ? 1 : 0) << '\n'
        << "max_speed=" << c.max_speed << '\n'
        << "noise_sinusoids=" << c.noise.n_sinusoids << '\n'
        << "noise_amp=" << c.noise.amp.lo << ',' << c.noise.amp.hi << '\n'
        << "noise_freq=" << c.noise.freq.lo << ',' << c.noise.freq.hi << '\n'
        << "noise_rot_amp=" << c.noise.rot_amp.lo << ',' << c.noise.rot_amp.hi << '\n'
        << "noise_zoom_amp=" << c.noise.zoom_amp.lo << ',' << c.noise.zoom_amp.hi << '\n'
        << "noise_jitter=" << c.noise.jitter_sigma << '\n'
        << "noise_rot_jitter=" << c.noise.rot_jitter_sigma << '\n';
    return out.str();
}

}  // namespace synthstab
