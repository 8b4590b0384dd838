#include "synthstab/motion.hpp"

#include "synthstab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace synthstab {

std::string to_string(Backend backend) {
    switch (backend) {
        case Backend::Oracle: return "oracle";
        case Backend::BlockMatch: return "blockmatch";
        case Backend::Learned: return "learned";
    }
    return "unknown";
}

Backend parse_backend(std::string_view name) {
    if (name == "oracle") return Backend::Oracle;
    if (name == "blockmatch") return Backend::BlockMatch;
    if (name == "learned") return Backend::Learned;
    throw InvalidSpec("unknown backend '" + std::string(name) + "'");
}

void EstimatorInput::validate() const {
    if (frame_a.empty() || frame_b.empty()) throw FrameMismatch("empty frame");
    if (frame_a.width != frame_b.width || frame_a.height != frame_b.height) {
        throw FrameMismatch("frames differ in size");
    }
    if (flow && (flow->width != frame_a.width || flow->height != frame_a.height)) {
        throw FrameMismatch("flow field differs in size from the frames");
    }
}

AffineParams estimate_oracle(std::span<const MarkRecord> records, int pair_index) {
    return pair_from_marks(records, pair_index);
}

AffineParams robust_similarity(std::vector<Correspondence> corrs, const BlockMatchOptions& opts) {
    AffineParams p = fit_similarity(corrs);
    for (int round = 0; round < opts.rounds; ++round) {
        const AffineMatrix m = params_to_matrix(p);
        std::vector<double> res(corrs.size());
        for (std::size_t i = 0; i < corrs.size(); ++i) {
            const Point2 q = apply(m, corrs[i].src);
            res[i] = std::hypot(q.x - corrs[i].dst.x, q.y - corrs[i].dst.y);
        }
        std::vector<double> sorted = res;
        const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
        std::nth_element(sorted.begin(), mid, sorted.end());
        const double limit = std::max(opts.reject_factor * *mid, opts.reject_floor);
        std::vector<Correspondence> kept;
        kept.reserve(corrs.size());
        for (std::size_t i = 0; i < corrs.size(); ++i) {
            if (res[i] <= limit) kept.push_back(corrs[i]);
        }
        if (kept.size() == corrs.size() || kept.size() < 2) break;
        corrs = std::move(kept);
        p = fit_similarity(corrs);
    }
    return p;
}

AffineParams estimate_blockmatch(const EstimatorInput& input, const BlockMatchOptions& opts, Exec exec) {
    input.validate();
    const FlowField computed = input.flow ? FlowField{} : compute_flow(input.frame_a, input.frame_b, opts.flow, exec);
    const FlowField& flow = input.flow ? *input.flow : computed;

    std::vector<Correspondence> corrs;
    if (!flow.samples.empty()) {
        for (const FlowSample& s : flow.samples) {
            if (!s.valid || s.texture < opts.min_texture) continue;
            corrs.push_back({s.center, {s.center.x + s.disp.x, s.center.y + s.disp.y}});
        }
    } else {
        // A bare dense field: sample it on the block grid.
        const int step = std::max(1, opts.flow.block / 2);
        const int half = opts.flow.block / 2;
        for (int y = half; y + half <= flow.height; y += step) {
            for (int x = half; x + half <= flow.width; x += step) {
                const std::size_t i = flow.index(x, y);
                if (!flow.valid[i]) continue;
                if (block_texture(input.frame_a, x - half, y - half, opts.flow.block) < opts.min_texture) continue;
                const Point2 c{static_cast<double>(x), static_cast<double>(y)};
                corrs.push_back({c, {c.x + flow.u[i], c.y + flow.v[i]}});
            }
        }
    }
    if (static_cast<int>(corrs.size()) < opts.min_cells) {
        throw DegenerateFlow(std::to_string(corrs.size()) + " usable blocks, need " + std::to_string(opts.min_cells));
    }
    try {
        return robust_similarity(std::move(corrs), opts);
    } catch (const DegenerateConfiguration& e) {
        throw DegenerateFlow(e.what());
    }
}

SequenceEstimate estimate_sequence(std::span<const Frame> frames, const SequenceOptions& opts) {
    if (frames.size() < 2) throw InvalidSpec("need at least 2 frames");
    if (opts.backend == Backend::Learned && opts.model == nullptr) {
        throw InvalidSpec("learned backend requires a trained model");
    }
    const std::size_t pairs = frames.size() - 1;
    SequenceEstimate out;
    out.params.assign(pairs, AffineParams::identity());
    std::vector<std::string> errors(pairs);

    const auto run = [&](std::size_t i, Exec inner) {
        try {
            switch (opts.backend) {
                case Backend::Oracle:
                    out.params[i] = estimate_oracle(opts.marks, static_cast<int>(i));
                    break;
                case Backend::BlockMatch:
                    out.params[i] = estimate_blockmatch({frames[i], frames[i + 1], std::nullopt}, opts.blockmatch, inner);
                    break;
                case Backend::Learned:
                    out.params[i] = predict(*opts.model, {frames[i], frames[i + 1], std::nullopt}, inner);
                    break;
            }
        } catch (const Error& e) {
            out.params[i] = AffineParams::identity();
            errors[i] = e.what();
        }
    };

    const auto n = static_cast<long long>(pairs);
    if (opts.exec == Exec::Parallel && opts.backend != Backend::Oracle) {
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < n; ++i) run(static_cast<std::size_t>(i), Exec::Serial);
    } else {
        for (long long i = 0; i < n; ++i) run(static_cast<std::size_t>(i), opts.exec);
    }
    for (std::size_t i = 0; i < pairs; ++i) {
        if (!errors[i].empty()) out.warnings.push_back("pair " + std::to_string(i) + ": " + errors[i] + "; using identity");
    }
    return out;
}

}  // namespace synthstab
