#pragma once

#include "synthstab/affine.hpp"
#include "synthstab/exec.hpp"
#include "synthstab/flow.hpp"
#include "synthstab/image.hpp"
#include "synthstab/nn.hpp"
#include "synthstab/synthworld.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace synthstab {

enum class Backend { Oracle, BlockMatch, Learned };

std::string to_string(Backend backend);
/// Accepts "oracle", "blockmatch", "learned". Throws InvalidSpec.
Backend parse_backend(std::string_view name);

/// Two consecutive grayscale frames and, optionally, the flow between them.
struct EstimatorInput {
    Frame frame_a;
    Frame frame_b;
    std::optional<FlowField> flow;

    /// Throws FrameMismatch.
    void validate() const;
};

// -----------------------------------------------------------------------------
// Ground-truth and block-matching estimators
// -----------------------------------------------------------------------------

/// Same result as pair_from_marks. Throws InsufficientMarks.
AffineParams estimate_oracle(std::span<const MarkRecord> records, int pair_index);

struct BlockMatchOptions {
    FlowOptions flow;
    double min_texture = 0.5;  ///< structure-tensor floor for a usable block
    int min_cells = 8;
    int rounds = 3;
    double reject_factor = 3.0;  ///< drop residuals above this multiple of the median
    double reject_floor = 0.05;  ///< px; residual threshold never goes below this
};

/// Similarity from block-centre correspondences of the flow (computed when
/// absent), fitted robustly. Throws DegenerateFlow when fewer than
/// `min_cells` textured, valid blocks survive.
AffineParams estimate_blockmatch(const EstimatorInput& input, const BlockMatchOptions& opts = {},
                                 Exec exec = Exec::Parallel);

/// Robust similarity fit: `rounds` passes of fit_similarity, each dropping
/// correspondences whose residual exceeds reject_factor x median.
AffineParams robust_similarity(std::vector<Correspondence> corrs, const BlockMatchOptions& opts);

// -----------------------------------------------------------------------------
// Learned estimator
// -----------------------------------------------------------------------------

struct TrainConfig {
    double learning_rate = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 40;
    int epochs_tr = 65;
    int epochs_rs = 2;
    int lr_drop_epoch = 10;       ///< f_tr switches to lr_after_drop after this many epochs; < 0 never
    double lr_after_drop = 1e-5;
    double dropout_rate = 0.5;
    int input_side = 64;
    bool use_flow = true;
    std::uint64_t seed = 1;

    /// Throws InvalidSpec.
    void validate() const;
    int channels() const { return use_flow ? 4 : 2; }
    /// key=value echo.
    std::string describe() const;
};

/// One regressor plus the target normalization it was trained with.
struct ModelWeights {
    Network net;
    std::vector<double> target_mean;
    std::vector<double> target_std;
    std::vector<double> loss_curve;  ///< mean training loss per epoch (normalized targets)
    int epochs = 0;

    bool operator==(const ModelWeights&) const = default;
};

/// f_tr regresses the frame-centred translation (in network-input pixels);
/// f_rs regresses (theta, s).
struct LearnedModel {
    ModelWeights tr;
    ModelWeights rs;
    TrainConfig config;
};

/// Network input: centre square of both frames resized to `side`, pixels / 255,
/// and with `use_flow` the flow u, v rescaled to input pixels and divided by 8.
/// `scale_out` receives input pixels per frame pixel.
Tensor prepare_input(const EstimatorInput& input, int side, bool use_flow, double* scale_out = nullptr,
                     Exec exec = Exec::Parallel);

struct TrainSample {
    Tensor input;
    double tx = 0.0;  ///< frame-centred translation in input pixels
    double ty = 0.0;
    double theta = 0.0;
    double s = 1.0;
};

/// Builds a training sample from a frame pair and its (top-left origin)
/// ground-truth similarity.
TrainSample make_train_sample(const EstimatorInput& input, const AffineParams& truth, const TrainConfig& cfg,
                              Exec exec = Exec::Parallel);

struct EpochLog {
    std::string network;  ///< "f_tr" or "f_rs"
    int epoch = 0;
    double loss = 0.0;
    double learning_rate = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains f_tr and f_rs independently with Adam on mean squared error of the
/// normalized targets. Throws NonFiniteLoss, InvalidSpec.
LearnedModel train(std::span<const TrainSample> samples, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Deterministic forward pass through both networks. Scale is clamped to > 0.01.
/// Throws ShapeMismatch.
AffineParams predict(const LearnedModel& model, const EstimatorInput& input, Exec exec = Exec::Parallel);
AffineParams predict(const ModelWeights& tr, const ModelWeights& rs, const EstimatorInput& input,
                     Exec exec = Exec::Parallel);

// Weight files (see write_tensor_file) with a `.meta` text sidecar.
void write_model_weights(const std::string& path, const ModelWeights& w, const TrainConfig& cfg);
/// Throws IoFailure, ShapeMismatch.
ModelWeights read_model_weights(const std::string& path);

// -----------------------------------------------------------------------------
// Sequences
// -----------------------------------------------------------------------------

struct SequenceOptions {
    Backend backend = Backend::BlockMatch;
    BlockMatchOptions blockmatch;
    std::span<const MarkRecord> marks;       ///< oracle backend
    const LearnedModel* model = nullptr;     ///< learned backend
    Exec exec = Exec::Parallel;
};

struct SequenceEstimate {
    std::vector<AffineParams> params;  ///< pair i maps frame i to frame i + 1
    std::vector<std::string> warnings;
};

/// Estimates every consecutive pair. Per-pair failures become identity plus a
/// warning. Throws InvalidSpec with fewer than two frames or a missing model.
SequenceEstimate estimate_sequence(std::span<const Frame> frames, const SequenceOptions& opts);

}  // namespace synthstab
