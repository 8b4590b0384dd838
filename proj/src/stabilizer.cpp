#include "synthstab/stabilizer.hpp"

#include "synthstab/dataset.hpp"
#include "synthstab/errors.hpp"
#include "synthstab/metrics.hpp"
#include "synthstab/textio.hpp"

#include <cmath>
#include <cstdio>

namespace synthstab {

WarpResult warp_frame(const Frame& frame, const AffineMatrix& a, float fill, Exec exec) {
    if (frame.empty()) throw InvalidSpec("cannot warp an empty frame");
    if (std::abs(a.det()) < 1e-12) throw SingularTransform("warp determinant below 1e-12");
    const AffineMatrix inv = invert(a);
    WarpResult r;
    r.frame = Frame(frame.width, frame.height, fill);
    std::vector<long long> inside_rows(static_cast<std::size_t>(frame.height), 0);

    const auto row = [&](int y) {
        long long count = 0;
        for (int x = 0; x < frame.width; ++x) {
            const Point2 src = apply(inv, {static_cast<double>(x), static_cast<double>(y)});
            bool inside = false;
            r.frame.at(x, y) = sample_bilinear(frame, src.x, src.y, fill, &inside);
            count += inside ? 1 : 0;
        }
        inside_rows[static_cast<std::size_t>(y)] = count;
    };
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (int y = 0; y < frame.height; ++y) row(y);
    } else {
        for (int y = 0; y < frame.height; ++y) row(y);
    }
    long long inside = 0;
    for (long long c : inside_rows) inside += c;
    r.valid_fraction = static_cast<double>(inside) / static_cast<double>(frame.size());
    return r;
}

WarpResult warp_frame(const Frame& frame, const AffineParams& p, float fill, Exec exec) {
    return warp_frame(frame, params_to_matrix(p), fill, exec);
}

Frame crop(const Frame& frame, double ratio) {
    const CropRect r = centered_crop(frame.width, frame.height, ratio);
    return sub_image(frame, r.x0, r.y0, r.width, r.height);
}

AffineParams correction_from_delta(double d_tx, double d_ty, double d_theta, double d_log_s, Point2 center) {
    return from_centered({-d_tx, -d_ty, canonical_angle(-d_theta), std::exp(-d_log_s)}, center);
}

StabilizationResult stabilize_video(std::span<const Frame> frames, std::span<const AffineParams> estimates,
                                    const StabilizerConfig& cfg) {
    if (frames.empty() || estimates.size() + 1 != frames.size()) {
        throw LengthMismatch(std::to_string(frames.size()) + " frames need " +
                             std::to_string(frames.empty() ? 0 : frames.size() - 1) + " estimates, got " +
                             std::to_string(estimates.size()));
    }
    const int width = frames[0].width, height = frames[0].height;
    for (const Frame& f : frames) {
        if (f.width != width || f.height != height) throw FrameMismatch("frames differ in size");
    }
    const CropRect window = centered_crop(width, height, cfg.crop_ratio);
    const Point2 center = frame_center(width, height);

    std::vector<AffineParams> centered;
    centered.reserve(estimates.size());
    for (const AffineParams& p : estimates) centered.push_back(to_centered(p, center));

    StabilizationResult r;
    r.measured = accumulate(centered);
    const SmoothedTrajectory smooth = smooth_trajectory(r.measured, cfg.smoothing);
    r.smoothed = smooth.smoothed;

    r.applied.assign(frames.size(), AffineParams::identity());
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const Trajectory& d = smooth.delta;
        r.applied[i + 1] = correction_from_delta(d.tx[i], d.ty[i], d.theta[i], d.log_s[i], center);
    }

    r.frames.resize(frames.size());
    r.valid_fraction.assign(frames.size(), 0.0);
    std::vector<std::string> errors(frames.size());
    const auto one = [&](std::size_t i, Exec inner) {
        try {
            const WarpResult w = warp_frame(frames[i], r.applied[i], cfg.fill, inner);
            r.frames[i] = sub_image(w.frame, window.x0, window.y0, window.width, window.height);
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    };
    const auto n = static_cast<long long>(frames.size());
    if (cfg.exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < n; ++i) one(static_cast<std::size_t>(i), Exec::Serial);
    } else {
        for (long long i = 0; i < n; ++i) one(static_cast<std::size_t>(i), Exec::Serial);
    }
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!errors[i].empty()) {
            // A singular correction leaves the frame unwarped.
            r.warnings.push_back("frame " + std::to_string(i) + ": " + errors[i] + "; left uncorrected");
            r.applied[i] = AffineParams::identity();
            r.frames[i] = sub_image(frames[i], window.x0, window.y0, window.width, window.height);
        }
        r.valid_fraction[i] = window_valid_fraction(width, height, window.width, window.height, r.applied[i]);
        if (r.valid_fraction[i] < 1.0) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "frame %zu: %.4f of the crop window lies inside the source", i,
                          r.valid_fraction[i]);
            r.warnings.push_back(buf);
        }
    }
    return r;
}

void write_stabilization(const std::string& dir, const StabilizationResult& result,
                         const std::vector<std::pair<std::string, std::string>>& echo) {
    ensure_directory(dir);
    write_frame_sequence(dir, result.frames);
    write_params_file(dir + "/applied_transforms.txt", result.applied);
    std::string report;
    for (const auto& [k, v] : echo) report += k + ": " + v + "\n";
    report += "frames: " + std::to_string(result.frames.size()) + "\n";
    double min_valid = 1.0;
    for (double v : result.valid_fraction) min_valid = std::min(min_valid, v);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "min_valid_fraction: %.10f\n", min_valid);
    report += buf;
    for (std::size_t i = 0; i < result.valid_fraction.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "valid_fraction %zu: %.10f\n", i, result.valid_fraction[i]);
        report += buf;
    }
    report += "warnings: " + std::to_string(result.warnings.size()) + "\n";
    for (const auto& w : result.warnings) report += "warning: " + w + "\n";
    write_file_atomic(dir + "/stabilize_report.txt", report);
}

}  // namespace synthstab
