#include "synthstab/cli.hpp"

#include "synthstab/dataset.hpp"
#include "synthstab/errors.hpp"
#include "synthstab/exec.hpp"
#include "synthstab/metrics.hpp"
#include "synthstab/motion.hpp"
#include "synthstab/stabilizer.hpp"
#include "synthstab/textio.hpp"
#include "synthstab/trajectory.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace synthstab {

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 1;
    std::string config;
    bool force = false;
    int threads = 0;
};

struct GenerateOptions {
    std::string out;
    GeneratorConfig gen;
    std::string texture = "mixed";
};

struct TrainOptions {
    std::string data;
    std::string out;
    TrainConfig train;
    bool no_flow = false;
};

struct StabilizeOptions {
    std::string input;
    std::string out;
    std::string backend = "blockmatch";
    std::string weights;
    SmoothingConfig smoothing;
    double crop = 0.8;
    bool no_flow = false;
};

struct EvaluateOptions {
    std::string original;
    std::string stabilized;
    std::string out;
    bool separate_xy = false;
};

/// Which exit code a library error maps to depends on the command.
enum class Command { None, Generate, Train, Stabilize, Evaluate };

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

bool is_dataset_root(const std::string& dir) { return fs::exists(fs::path(dir) / "index.txt"); }

bool has_entries(const std::string& dir) {
    return fs::exists(dir) && fs::is_directory(dir) && !fs::is_empty(dir);
}

// Applies `key=value` lines from the config file to options the command line
// left unset.
void apply_config(const std::string& path, CLI::App& app, CLI::App& sub) {
    const auto values = parse_key_values(read_file(path));
    for (const auto& [key, value] : values) {
        CLI::Option* opt = nullptr;
        for (CLI::App* scope : {&sub, &app}) {
            try {
                opt = scope->get_option("--" + key);
                break;
            } catch (const CLI::OptionNotFound&) {
            }
        }
        if (opt == nullptr) throw InvalidSpec("unknown config key '" + key + "' in " + path);
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

void prepare_output(const std::string& dir, bool force, const std::vector<std::string>& owned_prefixes) {
    if (has_entries(dir)) {
        if (!force) throw InvalidSpec("output directory " + dir + " is not empty (use --force)");
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            for (const auto& prefix : owned_prefixes) {
                if (name.rfind(prefix, 0) == 0) {
                    fs::remove_all(entry.path());
                    break;
                }
            }
        }
    }
    ensure_directory(dir);
}

int cmd_generate(const GlobalOptions& g, GenerateOptions o, std::ostream& out) {
    o.gen.seed = g.seed;
    o.gen.texture = parse_texture_style(o.texture);
    o.gen.validate();
    prepare_output(o.out, g.force, {"video_", "index.txt", "generator_config.txt"});
    write_file_atomic(o.out + "/generator_config.txt", describe(o.gen));
    std::vector<std::string> ids;
    for (int i = 0; i < o.gen.n_videos; ++i) {
        const GeneratedVideo gv = generate_video(o.gen, i);
        write_video(o.out + "/" + gv.video.id, gv.video);
        ids.push_back(gv.video.id);
        out << gv.video.id << ": " << gv.video.frames.size() << " frames " << gv.video.manifest.width << "x"
            << gv.video.manifest.height << ", " << gv.video.marks.size() << " mark records, seed "
            << gv.video.manifest.seed << '\n';
    }
    write_dataset_index(o.out, ids);
    return kExitOk;
}

int cmd_train(const GlobalOptions& g, TrainOptions o, std::ostream& out) {
    o.train.seed = g.seed;
    if (o.no_flow) o.train.use_flow = false;
    o.train.validate();
    if (!is_dataset_root(o.data)) throw IoFailure("no index.txt under " + o.data);
    std::vector<TrainSample> samples;
    for (const std::string& id : read_dataset_index(o.data)) {
        const Video v = read_video(o.data + "/" + id);
        const std::size_t first = samples.size();
        samples.resize(first + v.gt_affine.size());
        const auto n = static_cast<long long>(v.gt_affine.size());
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < n; ++i) {
            const auto u = static_cast<std::size_t>(i);
            samples[first + u] =
                make_train_sample({v.frames[u], v.frames[u + 1], std::nullopt}, v.gt_affine[u], o.train, Exec::Serial);
        }
    }
    out << "training on " << samples.size() << " pairs\n";
    prepare_output(o.out, g.force, {"f_tr.weights", "f_rs.weights", "train_log.csv"});

    std::string log = "network,epoch,loss,learning_rate\n";
    const LearnedModel model = train(samples, o.train, [&](const EpochLog& e) {
        log += e.network + "," + std::to_string(e.epoch) + "," + fmt(e.loss) + "," + fmt(e.learning_rate) + "\n";
        out << e.network << " epoch " << e.epoch << " loss " << fmt(e.loss) << '\n';
    });
    write_model_weights(o.out + "/f_tr.weights", model.tr, o.train);
    write_model_weights(o.out + "/f_rs.weights", model.rs, o.train);
    write_file_atomic(o.out + "/train_log.csv", log);
    return kExitOk;
}

void stabilize_one(const GlobalOptions& g, const StabilizeOptions& o, const std::string& in_dir,
                   const std::string& out_dir, const LearnedModel* model, std::ostream& out) {
    const std::vector<Frame> frames = read_frame_sequence(in_dir);
    if (frames.size() < 2) throw IoFailure("fewer than 2 frames in " + in_dir);
    SequenceOptions so;
    so.backend = parse_backend(o.backend);
    std::vector<MarkRecord> marks;
    if (so.backend == Backend::Oracle) {
        marks = read_marks(in_dir + "/marks.txt");
        so.marks = marks;
    }
    so.model = model;
    const SequenceEstimate est = estimate_sequence(frames, so);

    StabilizerConfig sc;
    sc.smoothing = o.smoothing;
    sc.crop_ratio = o.crop;
    StabilizationResult r = stabilize_video(frames, est.params, sc);
    r.warnings.insert(r.warnings.begin(), est.warnings.begin(), est.warnings.end());

    prepare_output(out_dir, g.force, {"frame_", "applied_transforms.txt", "stabilize_report.txt", "trajectory.csv"});
    write_stabilization(out_dir, r,
                        {{"backend", o.backend},
                         {"window", std::to_string(o.smoothing.window)},
                         {"polyorder", std::to_string(o.smoothing.polyorder)},
                         {"crop", fmt(o.crop)},
                         {"flow_channel", o.no_flow ? "false" : "true"},
                         {"seed", std::to_string(g.seed)}});
    write_trajectory_csv(out_dir + "/trajectory.csv", r.measured, r.smoothed);
    out << in_dir << " -> " << out_dir << ": " << r.frames.size() << " frames, " << r.warnings.size()
        << " warnings\n";
}

int cmd_stabilize(const GlobalOptions& g, const StabilizeOptions& o, std::ostream& out) {
    const Backend backend = parse_backend(o.backend);
    if (!(o.crop > 0.0 && o.crop <= 1.0)) throw InvalidSpec("crop ratio must be in (0, 1]");
    if (o.smoothing.window < 1 || o.smoothing.window % 2 == 0) throw BadWindow("window must be a positive odd number");
    if (o.smoothing.polyorder < 0 || o.smoothing.polyorder >= o.smoothing.window) {
        throw BadWindow("polyorder must be in [0, window)");
    }
    if (!fs::is_directory(o.input)) throw IoFailure("input directory " + o.input + " not found");

    LearnedModel model;
    const LearnedModel* model_ptr = nullptr;
    if (backend == Backend::Learned) {
        if (o.weights.empty()) throw InvalidSpec("--weights is required for the learned backend");
        model.tr = read_model_weights(o.weights + "/f_tr.weights");
        model.rs = read_model_weights(o.weights + "/f_rs.weights");
        const int channels = model.tr.net.config().channels;
        if (o.no_flow && channels != 2) {
            throw InvalidSpec("--no-flow-channel needs weights trained without the flow channels");
        }
        model_ptr = &model;
    }

    if (is_dataset_root(o.input)) {
        const std::vector<std::string> ids = read_dataset_index(o.input);
        ensure_directory(o.out);
        for (const auto& id : ids) stabilize_one(g, o, o.input + "/" + id, o.out + "/" + id, model_ptr, out);
        write_dataset_index(o.out, ids);
    } else {
        stabilize_one(g, o, o.input, o.out, model_ptr, out);
    }
    return kExitOk;
}

MetricsReport evaluate_one(const std::string& original_dir, const std::string& stabilized_dir,
                           const EvaluateOptions& o) {
    const std::vector<Frame> original = read_frame_sequence(original_dir);
    const std::vector<Frame> stabilized = read_frame_sequence(stabilized_dir);
    if (original.size() != stabilized.size()) {
        throw LengthMismatch(original_dir + " has " + std::to_string(original.size()) + " frames, " + stabilized_dir +
                             " has " + std::to_string(stabilized.size()));
    }
    EvalMetadata meta;
    const std::string applied = stabilized_dir + "/applied_transforms.txt";
    if (fs::exists(applied)) meta.applied = read_params_file(applied);
    MetricsReport r = evaluate(original, stabilized, meta);
    if (o.separate_xy) {
        r.stability = stability_scores(pair_motion_series(stabilized), true);
        r.input_stability = stability_scores(pair_motion_series(original), true);
    }
    return r;
}

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
    const std::string out_dir = o.out.empty() ? o.stabilized : o.out;
    if (!fs::is_directory(o.original)) throw IoFailure("original directory " + o.original + " not found");
    if (!fs::is_directory(o.stabilized)) throw IoFailure("stabilized directory " + o.stabilized + " not found");
    if (is_dataset_root(o.original)) {
        const std::vector<std::string> ids = read_dataset_index(o.original);
        std::vector<BatchRow> rows;
        for (const auto& id : ids) {
            const std::string sdir = o.stabilized + "/" + id;
            if (!fs::is_directory(sdir)) throw LengthMismatch("stabilized output for " + id + " is missing");
            BatchRow row{id, evaluate_one(o.original + "/" + id, sdir, o)};
            ensure_directory(out_dir + "/" + id);
            write_report(out_dir + "/" + id + "/report.txt", row.report);
            out << id << ": stability " << fmt(row.report.stability.average) << ", distortion "
                << (row.report.distortion_failed ? "failed" : fmt(row.report.distortion)) << ", cropping "
                << fmt(row.report.cropping_ratio) << ", success " << (row.report.success ? "true" : "false") << '\n';
            rows.push_back(std::move(row));
        }
        ensure_directory(out_dir);
        write_batch_summary(out_dir + "/batch_summary.csv", rows);
        out << "success rate " << fmt(success_rate(rows)) << '\n';
    } else {
        const MetricsReport r = evaluate_one(o.original, o.stabilized, o);
        ensure_directory(out_dir);
        write_report(out_dir + "/report.txt", r);
        out << format_report(r);
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synthetic-data video stabilization toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
    app.add_option("--config", g.config, "key=value file; command-line flags take precedence");
    app.add_flag("--force", g.force, "Overwrite existing outputs");
    app.add_option("--threads", g.threads, "OpenMP threads (0 keeps the runtime default)");

    GenerateOptions gen;
    CLI::App* generate = app.add_subcommand("generate", "Render a synthetic dataset with ground truth");
    generate->add_option("--out", gen.out, "Dataset directory")->required();
    generate->add_option("--videos", gen.gen.n_videos)->capture_default_str();
    generate->add_option("--frames", gen.gen.n_frames)->capture_default_str();
    generate->add_option("--fps", gen.gen.fps)->capture_default_str();
    generate->add_option("--width", gen.gen.width)->capture_default_str();
    generate->add_option("--height", gen.gen.height)->capture_default_str();
    generate->add_option("--layers", gen.gen.n_layers)->capture_default_str();
    generate->add_option("--max-depth", gen.gen.max_depth)->capture_default_str();
    generate->add_option("--canvas", gen.gen.canvas_size)->capture_default_str();
    generate->add_option("--texture", gen.texture, "checker, noise, blobs or mixed")->capture_default_str();
    generate->add_option("--sinusoids", gen.gen.noise.n_sinusoids)->capture_default_str();
    generate->add_option("--amp-min", gen.gen.noise.amp.lo)->capture_default_str();
    generate->add_option("--amp-max", gen.gen.noise.amp.hi)->capture_default_str();
    generate->add_option("--freq-min", gen.gen.noise.freq.lo)->capture_default_str();
    generate->add_option("--freq-max", gen.gen.noise.freq.hi)->capture_default_str();
    generate->add_option("--rot-amp-min", gen.gen.noise.rot_amp.lo)->capture_default_str();
    generate->add_option("--rot-amp-max", gen.gen.noise.rot_amp.hi)->capture_default_str();
    generate->add_option("--zoom-amp-min", gen.gen.noise.zoom_amp.lo)->capture_default_str();
    generate->add_option("--zoom-amp-max", gen.gen.noise.zoom_amp.hi)->capture_default_str();
    generate->add_option("--jitter", gen.gen.noise.jitter_sigma)->capture_default_str();
    generate->add_option("--rot-jitter", gen.gen.noise.rot_jitter_sigma)->capture_default_str();
    generate->add_option("--marks", gen.gen.K, "Mark points sampled per instant")->capture_default_str();
    generate->add_option("--beta", gen.gen.beta_frames, "Mark lifetime in frames (0: fps)")->capture_default_str();
    generate->add_option("--sampling-period", gen.gen.sampling_period, "0: beta / 2")->capture_default_str();
    generate->add_flag("--scatter-layers", gen.gen.scatter_layers);
    generate->add_option("--max-speed", gen.gen.max_speed, "Smooth-track speed, px/frame")->capture_default_str();

    TrainOptions tr;
    CLI::App* train_cmd = app.add_subcommand("train", "Train the translation and rotation/scale regressors");
    train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
    train_cmd->add_option("--out", tr.out, "Weights directory")->required();
    train_cmd->add_option("--lr", tr.train.learning_rate)->capture_default_str();
    train_cmd->add_option("--beta1", tr.train.adam_beta1)->capture_default_str();
    train_cmd->add_option("--beta2", tr.train.adam_beta2)->capture_default_str();
    train_cmd->add_option("--eps", tr.train.adam_eps)->capture_default_str();
    train_cmd->add_option("--batch", tr.train.batch_size)->capture_default_str();
    train_cmd->add_option("--epochs-tr", tr.train.epochs_tr)->capture_default_str();
    train_cmd->add_option("--epochs-rs", tr.train.epochs_rs)->capture_default_str();
    train_cmd->add_option("--lr-drop-epoch", tr.train.lr_drop_epoch, "Negative: never")->capture_default_str();
    train_cmd->add_option("--lr-after-drop", tr.train.lr_after_drop)->capture_default_str();
    train_cmd->add_option("--dropout", tr.train.dropout_rate)->capture_default_str();
    train_cmd->add_option("--input-side", tr.train.input_side)->capture_default_str();
    train_cmd->add_flag("--no-flow-channel", tr.no_flow, "Feed only the grayscale pair");

    StabilizeOptions st;
    CLI::App* stabilize = app.add_subcommand("stabilize", "Stabilize a video directory or a dataset");
    stabilize->add_option("--input", st.input, "Video or dataset directory")->required();
    stabilize->add_option("--out", st.out, "Output directory")->required();
    stabilize->add_option("--backend", st.backend, "oracle, blockmatch or learned")->capture_default_str();
    stabilize->add_option("--weights", st.weights, "Directory with f_tr.weights and f_rs.weights");
    stabilize->add_option("--window", st.smoothing.window)->capture_default_str();
    stabilize->add_option("--polyorder", st.smoothing.polyorder)->capture_default_str();
    stabilize->add_option("--crop", st.crop)->capture_default_str();
    stabilize->add_flag("--no-flow-channel", st.no_flow, "Learned backend without flow channels");

    EvaluateOptions ev;
    CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Score stabilized output against the original");
    evaluate_cmd->add_option("--original", ev.original, "Original video or dataset directory")->required();
    evaluate_cmd->add_option("--stabilized", ev.stabilized, "Stabilized video or dataset directory")->required();
    evaluate_cmd->add_option("--out", ev.out, "Report directory (default: the stabilized directory)");
    evaluate_cmd->add_flag("--separate-xy", ev.separate_xy, "Score x and y translation separately");

    Command command = Command::None;
    try {
        app.parse(argc, argv);
        CLI::App* sub = app.get_subcommands().front();
        if (!g.config.empty()) apply_config(g.config, app, *sub);
        set_thread_count(g.threads);
        out << "seed: " << g.seed << '\n';
        if (sub == generate) {
            command = Command::Generate;
            return cmd_generate(g, gen, out);
        }
        if (sub == train_cmd) {
            command = Command::Train;
            return cmd_train(g, tr, out);
        }
        if (sub == stabilize) {
            command = Command::Stabilize;
            return cmd_stabilize(g, st, out);
        }
        command = Command::Evaluate;
        return cmd_evaluate(ev, out);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    } catch (const NonFiniteLoss& e) {
        err << "error: " << e.what() << '\n';
        return kExitTraining;
    } catch (const IoFailure& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const LengthMismatch& e) {
        err << "error: " << e.what() << '\n';
        return command == Command::Evaluate ? kExitEvaluation : kExitValidation;
    } catch (const FrameMismatch& e) {
        err << "error: " << e.what() << '\n';
        return command == Command::Evaluate ? kExitEvaluation : kExitValidation;
    } catch (const AllFramesFailed& e) {
        err << "error: " << e.what() << '\n';
        return kExitEvaluation;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace synthstab
