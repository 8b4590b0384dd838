#include "synthstab/motion.hpp"

#include "synthstab/errors.hpp"
#include "synthstab/rng.hpp"
#include "synthstab/textio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace synthstab {

namespace {

constexpr double kFlowScale = 8.0;

struct Targets {
    std::vector<std::vector<double>> values;  // normalized, per sample
    std::vector<double> mean;
    std::vector<double> std;
};

Targets normalize(const std::vector<std::array<double, 2>>& raw) {
    Targets t;
    t.mean.assign(2, 0.0);
    t.std.assign(2, 0.0);
    const double n = static_cast<double>(raw.size());
    for (const auto& r : raw) {
        t.mean[0] += r[0] / n;
        t.mean[1] += r[1] / n;
    }
    for (const auto& r : raw) {
        t.std[0] += (r[0] - t.mean[0]) * (r[0] - t.mean[0]) / n;
        t.std[1] += (r[1] - t.mean[1]) * (r[1] - t.mean[1]) / n;
    }
    for (double& s : t.std) s = s > 1e-24 ? std::sqrt(s) : 1.0;
    for (const auto& r : raw) {
        t.values.push_back({(r[0] - t.mean[0]) / t.std[0], (r[1] - t.mean[1]) / t.std[1]});
    }
    return t;
}

ModelWeights train_network(std::span<const TrainSample> samples, const Targets& targets, const TrainConfig& cfg,
                           const char* name, std::uint64_t stream, int epochs, bool drops_lr,
                           const EpochCallback& on_epoch) {
    NetConfig net_cfg;
    net_cfg.channels = cfg.channels();
    net_cfg.input_side = cfg.input_side;
    net_cfg.dropout = cfg.dropout_rate;

    ModelWeights w;
    w.net = Network(net_cfg, mix_seed(cfg.seed, stream));
    w.target_mean = targets.mean;
    w.target_std = targets.std;
    w.epochs = epochs;

    Adam adam(w.net.parameters(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    Rng shuffle(mix_seed(cfg.seed, stream + 10));
    const std::uint64_t dropout_base = mix_seed(cfg.seed, stream + 20);

    const std::size_t n = samples.size();
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::vector<std::vector<Tensor>> per_sample(batch);
    std::vector<double> losses(batch);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
        const double lr = (drops_lr && cfg.lr_drop_epoch >= 0 && epoch >= cfg.lr_drop_epoch) ? cfg.lr_after_drop
                                                                                               : cfg.learning_rate;
        double epoch_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += batch, ++batch_index) {
            const std::size_t count = std::min(batch, n - start);
            const double weight = 1.0 / static_cast<double>(count);
            const auto m = static_cast<long long>(count);
            // Per-sample gradients reduced in a fixed order keep training
            // bit-reproducible whatever the thread count.
#pragma omp parallel for schedule(static)
            for (long long k = 0; k < m; ++k) {
                const auto u = static_cast<std::size_t>(k);
                const std::size_t idx = order[start + u];
                per_sample[u] = w.net.zero_gradients();
                losses[u] = w.net.accumulate_gradient(
                    samples[idx].input, targets.values[idx],
                    mix_seed(dropout_base, static_cast<std::uint64_t>(epoch) * n + start + u), weight, per_sample[u]);
            }
            std::vector<Tensor> grads = w.net.zero_gradients();
            double loss = 0.0;
            for (std::size_t u = 0; u < count; ++u) {
                loss += losses[u] * weight;
                for (std::size_t p = 0; p < grads.size(); ++p) {
                    auto& g = grads[p].data;
                    const auto& s = per_sample[u][p].data;
                    for (std::size_t j = 0; j < g.size(); ++j) g[j] += s[j];
                }
            }
            if (!std::isfinite(loss)) throw NonFiniteLoss(static_cast<std::size_t>(epoch), batch_index);
            adam.step(w.net.parameters(), grads, lr);
            epoch_loss += loss * static_cast<double>(count) / static_cast<double>(n);
        }
        w.loss_curve.push_back(epoch_loss);
        if (on_epoch) on_epoch({name, epoch, epoch_loss, lr});
    }
    return w;
}

Frame field_frame(const std::vector<float>& values, int width, int height) {
    Frame f(width, height);
    f.pixels = values;
    return f;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !(lr_after_drop > 0.0)) throw InvalidSpec("learning rates must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw InvalidSpec("Adam betas must be in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw InvalidSpec("Adam epsilon must be positive");
    if (batch_size < 1) throw InvalidSpec("batch size must be >= 1");
    if (epochs_tr < 0 || epochs_rs < 0) throw InvalidSpec("epochs must be >= 0");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidSpec("dropout rate must be in [0, 1)");
    if (input_side < 8) throw InvalidSpec("input side must be >= 8");
}

std::string TrainConfig::describe() const {
    char buf[1024];
    std::snprintf(buf, sizeof(buf),
                  "learning_rate=%.17g\nadam_beta1=%.17g\nadam_beta2=%.17g\nadam_eps=%.17g\nbatch_size=%d\n"
                  "epochs_tr=%d\nepochs_rs=%d\nlr_drop_epoch=%d\nlr_after_drop=%.17g\ndropout_rate=%.17g\n"
                  "input_side=%d\nuse_flow=%d\nseed=%llu\n",
                  learning_rate, adam_beta1, adam_beta2, adam_eps, batch_size, epochs_tr, epochs_rs, lr_drop_epoch,
                  lr_after_drop, dropout_rate, input_side, use_flow ? 1 : 0, static_cast<unsigned long long>(seed));
    return buf;
}

Tensor prepare_input(const EstimatorInput& input, int side, bool use_flow, double* scale_out, Exec exec) {
    input.validate();
    double scale = 1.0;
    const Frame a = center_square(input.frame_a, side, &scale);
    const Frame b = center_square(input.frame_b, side);
    Tensor t({use_flow ? 4 : 2, side, side});
    const std::size_t plane = static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
    for (std::size_t i = 0; i < plane; ++i) {
        t.data[i] = a.pixels[i] / 255.0;
        t.data[plane + i] = b.pixels[i] / 255.0;
    }
    if (use_flow) {
        const FlowField computed =
            input.flow ? FlowField{} : compute_flow(input.frame_a, input.frame_b, FlowOptions{}, exec);
        const FlowField& flow = input.flow ? *input.flow : computed;
        const Frame u = center_square(field_frame(flow.u, flow.width, flow.height), side);
        const Frame v = center_square(field_frame(flow.v, flow.width, flow.height), side);
        for (std::size_t i = 0; i < plane; ++i) {
            t.data[2 * plane + i] = u.pixels[i] * scale / kFlowScale;
            t.data[3 * plane + i] = v.pixels[i] * scale / kFlowScale;
        }
    }
    if (scale_out) *scale_out = scale;
    return t;
}

TrainSample make_train_sample(const EstimatorInput& input, const AffineParams& truth, const TrainConfig& cfg,
                              Exec exec) {
    double scale = 1.0;
    TrainSample s;
    s.input = prepare_input(input, cfg.input_side, cfg.use_flow, &scale, exec);
    const AffineParams c = to_centered(truth, frame_center(input.frame_a.width, input.frame_a.height));
    s.tx = c.tx * scale;
    s.ty = c.ty * scale;
    s.theta = truth.theta;
    s.s = truth.s;
    return s;
}

LearnedModel train(std::span<const TrainSample> samples, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (samples.size() < static_cast<std::size_t>(cfg.batch_size)) {
        throw InvalidSpec("training needs at least batch_size (" + std::to_string(cfg.batch_size) + ") pairs, got " +
                          std::to_string(samples.size()));
    }
    const std::vector<int> shape{cfg.channels(), cfg.input_side, cfg.input_side};
    std::vector<std::array<double, 2>> tr, rs;
    for (const TrainSample& s : samples) {
        if (s.input.shape != shape) throw ShapeMismatch("training input shape differs from the configuration");
        tr.push_back({s.tx, s.ty});
        rs.push_back({s.theta, s.s});
    }
    LearnedModel model;
    model.config = cfg;
    model.tr = train_network(samples, normalize(tr), cfg, "f_tr", 1, cfg.epochs_tr, true, on_epoch);
    model.rs = train_network(samples, normalize(rs), cfg, "f_rs", 2, cfg.epochs_rs, false, on_epoch);
    return model;
}

AffineParams predict(const ModelWeights& tr, const ModelWeights& rs, const EstimatorInput& input, Exec exec) {
    const NetConfig& ct = tr.net.config();
    const NetConfig& cr = rs.net.config();
    if (ct.channels != cr.channels || ct.input_side != cr.input_side) {
        throw ShapeMismatch("f_tr and f_rs expect different inputs");
    }
    if (ct.channels != 2 && ct.channels != 4) throw ShapeMismatch("networks must take 2 or 4 channels");
    if (tr.target_mean.size() != 2 || tr.target_std.size() != 2 || rs.target_mean.size() != 2 ||
        rs.target_std.size() != 2) {
        throw ShapeMismatch("target normalization must have two entries");
    }
    double scale = 1.0;
    const Tensor x = prepare_input(input, ct.input_side, ct.channels == 4, &scale, exec);
    const std::vector<double> yt = tr.net.forward(x);
    const std::vector<double> yr = rs.net.forward(x);

    AffineParams centered;
    centered.tx = (yt[0] * tr.target_std[0] + tr.target_mean[0]) / scale;
    centered.ty = (yt[1] * tr.target_std[1] + tr.target_mean[1]) / scale;
    centered.theta = canonical_angle(yr[0] * rs.target_std[0] + rs.target_mean[0]);
    centered.s = std::max(yr[1] * rs.target_std[1] + rs.target_mean[1], std::nextafter(0.01, 1.0));
    return from_centered(centered, frame_center(input.frame_a.width, input.frame_a.height));
}

AffineParams predict(const LearnedModel& model, const EstimatorInput& input, Exec exec) {
    return predict(model.tr, model.rs, input, exec);
}

void write_model_weights(const std::string& path, const ModelWeights& w, const TrainConfig& cfg) {
    const NetConfig& c = w.net.config();
    std::vector<NamedTensor> tensors;
    Tensor arch({10});
    arch.data = {static_cast<double>(c.channels),       static_cast<double>(c.input_side),
                 static_cast<double>(c.conv_widths[0]), static_cast<double>(c.conv_widths[1]),
                 static_cast<double>(c.conv_widths[2]), static_cast<double>(c.conv_widths[3]),
                 static_cast<double>(c.hidden[0]),      static_cast<double>(c.hidden[1]),
                 static_cast<double>(c.outputs),        c.dropout};
    tensors.push_back({"architecture", arch});
    for (std::size_t i = 0; i < w.net.parameters().size(); ++i) {
        tensors.push_back({w.net.parameter_names()[i], w.net.parameters()[i]});
    }
    const auto vec = [](const std::vector<double>& v) {
        Tensor t({static_cast<int>(v.size())});
        t.data = v;
        return t;
    };
    tensors.push_back({"target_mean", vec(w.target_mean)});
    tensors.push_back({"target_std", vec(w.target_std)});
    tensors.push_back({"loss_curve", vec(w.loss_curve)});
    tensors.push_back({"epochs", vec({static_cast<double>(w.epochs)})});
    write_tensor_file(path, tensors);

    std::ostringstream meta;
    meta << cfg.describe();
    meta << "epochs=" << w.epochs << '\n';
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", w.loss_curve.empty() ? 0.0 : w.loss_curve.back());
    meta << "final_loss=" << buf << '\n';
    write_file_atomic(path + ".meta", meta.str());
}

ModelWeights read_model_weights(const std::string& path) {
    const std::vector<NamedTensor> tensors = read_tensor_file(path);
    for (const auto& t : tensors) {
        for (double v : t.tensor.data) {
            if (!std::isfinite(v)) throw IoFailure("non-finite value in tensor " + t.name + " of " + path);
        }
    }
    std::size_t pos = 0;
    const auto next = [&](const std::string& name) -> const Tensor& {
        if (pos >= tensors.size() || tensors[pos].name != name) {
            throw ShapeMismatch("weight file " + path + ": expected tensor '" + name + "'");
        }
        return tensors[pos++].tensor;
    };
    const Tensor& arch = next("architecture");
    if (arch.data.size() != 10) throw ShapeMismatch("architecture tensor must have 10 entries");
    NetConfig c;
    c.channels = static_cast<int>(arch.data[0]);
    c.input_side = static_cast<int>(arch.data[1]);
    for (std::size_t i = 0; i < 4; ++i) c.conv_widths[i] = static_cast<int>(arch.data[2 + i]);
    c.hidden = {static_cast<int>(arch.data[6]), static_cast<int>(arch.data[7])};
    c.outputs = static_cast<int>(arch.data[8]);
    c.dropout = arch.data[9];
    try {
        c.validate();
    } catch (const InvalidSpec& e) {
        throw ShapeMismatch(e.what());
    }
    ModelWeights w;
    w.net = Network(c, 0);
    std::vector<Tensor> params;
    for (const std::string& name : w.net.parameter_names()) params.push_back(next(name));
    w.net.set_parameters(std::move(params));
    w.target_mean = next("target_mean").data;
    w.target_std = next("target_std").data;
    w.loss_curve = next("loss_curve").data;
    const Tensor& epochs = next("epochs");
    if (epochs.data.size() != 1) throw ShapeMismatch("epochs tensor must have one entry");
    w.epochs = static_cast<int>(epochs.data[0]);
    if (w.target_mean.size() != static_cast<std::size_t>(c.outputs) ||
        w.target_std.size() != static_cast<std::size_t>(c.outputs)) {
        throw ShapeMismatch("target normalization does not match the output count");
    }
    return w;
}

}  // namespace synthstab
