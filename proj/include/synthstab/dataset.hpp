#pragma once

#include "synthstab/affine.hpp"
#include "synthstab/exec.hpp"
#include "synthstab/image.hpp"
#include "synthstab/synthworld.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace synthstab {

/// Contents of a per-video `manifest.txt`.
struct VideoManifest {
    int n_frames = 0;
    int fps = 24;
    int width = 0;
    int height = 0;
    std::uint64_t seed = 0;
    int n_layers = 1;

    bool operator==(const VideoManifest&) const = default;
};

struct Video {
    std::string id;
    VideoManifest manifest;
    std::vector<Frame> frames;
    std::vector<MarkRecord> marks;
    std::vector<AffineParams> gt_affine;
};

/// Everything `generate` needs to synthesize a dataset.
struct GeneratorConfig {
    int n_videos = 1;
    int n_frames = 100;
    int fps = 24;
    int width = 128;
    int height = 128;
    std::uint64_t seed = 1;
    int n_layers = 1;
    double max_depth = 3.0;
    int canvas_size = 1024;
    TextureStyle texture = TextureStyle::Mixed;
    NoiseProfile noise;            ///< seed is overridden per video
    int K = 16;
    int beta_frames = 0;           ///< 0 selects fps (one second)
    int sampling_period = 0;       ///< 0 selects beta / 2
    bool scatter_layers = false;
    double max_speed = 2.0;        ///< px/frame of the smooth track

    /// Throws InvalidSpec.
    void validate() const;
    SceneSpec scene_spec(int video_index) const;
    MarkConfig mark_config(int video_index) const;
    NoiseProfile noise_profile(int video_index) const;
};

/// Scene, camera path, frames and ground truth for one video.
struct GeneratedVideo {
    Video video;
    CameraPaths paths;
};

GeneratedVideo generate_video(const GeneratorConfig& cfg, int video_index, Exec exec = Exec::Parallel);

std::string video_id(int index);
std::string frame_filename(int index);

// Directory layout per video:
//   frame_%06d.pgm, marks.txt, gt_affine.txt, manifest.txt
// and an `index.txt` at the dataset root listing video ids.
void write_video(const std::string& dir, const Video& video);
Video read_video(const std::string& dir);

/// Writes every video under out_dir/<id>/ plus index.txt.
void write_dataset(const std::string& out_dir, std::span<const Video> videos);
void write_dataset_index(const std::string& out_dir, std::span<const std::string> ids);
std::vector<std::string> read_dataset_index(const std::string& root);

/// Echo of the generator configuration (key=value), written as generator_config.txt.
std::string describe(const GeneratorConfig& cfg);

// Text formats shared with other modules.
void write_marks(const std::string& path, std::span<const MarkRecord> marks);
std::vector<MarkRecord> read_marks(const std::string& path);
void write_params_file(const std::string& path, std::span<const AffineParams> params);
std::vector<AffineParams> read_params_file(const std::string& path);
void write_manifest(const std::string& path, const VideoManifest& m);
VideoManifest read_manifest(const std::string& path);

/// Reads frame_000000.pgm, frame_000001.pgm, ... until the first gap.
std::vector<Frame> read_frame_sequence(const std::string& dir);
void write_frame_sequence(const std::string& dir, std::span<const Frame> frames);

}  // namespace synthstab
