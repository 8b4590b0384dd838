#include "synthstab/metrics.hpp"

#include "synthstab/errors.hpp"
#include "synthstab/fft.hpp"
#include "synthstab/textio.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace synthstab {

Point2 Homography::apply(Point2 p) const {
    const double w = h[6] * p.x + h[7] * p.y + h[8];
    return {(h[0] * p.x + h[1] * p.y + h[2]) / w, (h[3] * p.x + h[4] * p.y + h[5]) / w};
}

namespace {

// Similarity moving the centroid to the origin and the mean distance to sqrt(2).
Eigen::Matrix3d normalizer(std::span<const Correspondence> corrs, bool use_src) {
    double cx = 0, cy = 0;
    for (const auto& c : corrs) {
        const Point2& p = use_src ? c.src : c.dst;
        cx += p.x;
        cy += p.y;
    }
    const double n = static_cast<double>(corrs.size());
    cx /= n;
    cy /= n;
    double mean_dist = 0;
    for (const auto& c : corrs) {
        const Point2& p = use_src ? c.src : c.dst;
        mean_dist += std::hypot(p.x - cx, p.y - cy) / n;
    }
    if (!(mean_dist > 1e-12)) throw DegenerateHomography("points coincide");
    const double s = std::sqrt(2.0) / mean_dist;
    Eigen::Matrix3d t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
}

double transfer_error(const Homography& h, const Correspondence& c) {
    const Point2 q = h.apply(c.src);
    return std::hypot(q.x - c.dst.x, q.y - c.dst.y);
}

double median(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

std::vector<Correspondence> flow_correspondences(const FlowField& flow, double min_texture) {
    std::vector<Correspondence> corrs;
    for (const FlowSample& s : flow.samples) {
        if (!s.valid || s.texture < min_texture) continue;
        corrs.push_back({s.center, {s.center.x + s.disp.x, s.center.y + s.disp.y}});
    }
    return corrs;
}

template <typename F>
void for_each_index(std::size_t n, Exec exec, F&& f) {
    const auto m = static_cast<long long>(n);
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < m; ++i) f(static_cast<std::size_t>(i));
    } else {
        for (long long i = 0; i < m; ++i) f(static_cast<std::size_t>(i));
    }
}

}  // namespace

Homography estimate_homography(std::span<const Correspondence> corrs) {
    if (corrs.size() < 4) throw DegenerateHomography("need at least 4 correspondences");
    for (const auto& c : corrs) {
        if (!std::isfinite(c.src.x) || !std::isfinite(c.src.y) || !std::isfinite(c.dst.x) || !std::isfinite(c.dst.y)) {
            throw DegenerateHomography("non-finite correspondence");
        }
    }
    const Eigen::Matrix3d ts = normalizer(corrs, true);
    const Eigen::Matrix3d td = normalizer(corrs, false);
    const auto rows = static_cast<Eigen::Index>(2 * corrs.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(rows, 9), 9);
    for (std::size_t i = 0; i < corrs.size(); ++i) {
        const Eigen::Vector3d p = ts * Eigen::Vector3d(corrs[i].src.x, corrs[i].src.y, 1.0);
        const Eigen::Vector3d q = td * Eigen::Vector3d(corrs[i].dst.x, corrs[i].dst.y, 1.0);
        const auto r = static_cast<Eigen::Index>(2 * i);
        a.block<1, 3>(r, 3) = -q.z() * p.transpose();
        a.block<1, 3>(r, 6) = q.y() * p.transpose();
        a.block<1, 3>(r + 1, 0) = q.z() * p.transpose();
        a.block<1, 3>(r + 1, 6) = -q.x() * p.transpose();
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(7) < 1e-10 * sv(0)) throw DegenerateHomography("design matrix has rank < 8");
    const Eigen::VectorXd v = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
    const Eigen::Matrix3d hm = td.inverse() * hn * ts;
    if (std::abs(hm(2, 2)) < 1e-12 * hm.norm()) throw DegenerateHomography("h22 vanishes");
    Homography out;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) out.h[static_cast<std::size_t>(r * 3 + c)] = hm(r, c) / hm(2, 2);
    }
    out.h[8] = 1.0;
    return out;
}

Homography robust_homography(std::span<const Correspondence> corrs, const TrackingOptions& opts) {
    if (static_cast<int>(corrs.size()) < opts.min_points) {
        throw DegenerateHomography(std::to_string(corrs.size()) + " correspondences, need " +
                                   std::to_string(opts.min_points));
    }
    std::vector<Correspondence> kept(corrs.begin(), corrs.end());
    Homography h = estimate_homography(kept);
    for (int round = 0; round < opts.rounds; ++round) {
        std::vector<double> err(corrs.size());
        for (std::size_t i = 0; i < corrs.size(); ++i) err[i] = transfer_error(h, corrs[i]);
        const double limit = std::max(3.0 * median(err), opts.inlier_px);
        std::vector<Correspondence> next;
        for (std::size_t i = 0; i < corrs.size(); ++i) {
            if (err[i] <= limit) next.push_back(corrs[i]);
        }
        if (next.size() < 4) break;
        const bool same = next.size() == kept.size();
        kept = std::move(next);
        h = estimate_homography(kept);
        if (same) break;
    }
    std::size_t inliers = 0;
    for (const auto& c : corrs) {
        if (transfer_error(h, c) < opts.inlier_px) ++inliers;
    }
    if (static_cast<int>(inliers) < opts.min_points ||
        static_cast<double>(inliers) < opts.min_inlier_fraction * static_cast<double>(corrs.size())) {
        throw DegenerateHomography(std::to_string(inliers) + " of " + std::to_string(corrs.size()) +
                                   " correspondences are inliers");
    }
    return h;
}

Homography track_homography(const Frame& a, const Frame& b, const TrackingOptions& opts, Exec exec) {
    const FlowField flow = compute_flow(a, b, opts.flow, exec);
    return robust_homography(flow_correspondences(flow, opts.min_texture), opts);
}

MotionSeries pair_motion_series(std::span<const Frame> frames, const TrackingOptions& opts, Exec exec) {
    if (frames.size() < 2) throw InvalidSpec("need at least 2 frames");
    const std::size_t pairs = frames.size() - 1;
    MotionSeries m;
    m.translation.assign(pairs, 0.0);
    m.tx.assign(pairs, 0.0);
    m.ty.assign(pairs, 0.0);
    m.rotation.assign(pairs, 0.0);
    std::vector<std::string> errors(pairs);
    for_each_index(pairs, exec, [&](std::size_t i) {
        try {
            const Homography h = track_homography(frames[i], frames[i + 1], opts, Exec::Serial);
            m.tx[i] = h(0, 2);
            m.ty[i] = h(1, 2);
            m.translation[i] = std::hypot(h(0, 2), h(1, 2));
            m.rotation[i] = std::atan2(h(1, 0), h(0, 0));
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < pairs; ++i) {
        if (!errors[i].empty()) m.warnings.push_back("pair " + std::to_string(i) + " untrackable: " + errors[i]);
    }
    return m;
}

double stability_score(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 8) throw SeriesTooShort("need at least 8 samples, got " + std::to_string(n));
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    if (*hi - *lo <= 1e-12) return 1.0;
    const auto spectrum = fft_real(series);
    double low = 0.0, total = 0.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        const double p = std::norm(spectrum[k]);
        total += p;
        if (k >= 2 && k <= 6) low += p;
    }
    return low / total;
}

StabilityScores stability_scores(const MotionSeries& series, bool separate_xy) {
    StabilityScores s;
    s.translation = separate_xy ? 0.5 * (stability_score(series.tx) + stability_score(series.ty))
                                : stability_score(series.translation);
    s.rotation = stability_score(series.rotation);
    s.average = 0.5 * (s.translation + s.rotation);
    return s;
}

double anisotropy(const Homography& h) {
    Eigen::Matrix2d m;
    m << h(0, 0), h(0, 1), h(1, 0), h(1, 1);
    const Eigen::Vector2d sv = Eigen::JacobiSVD<Eigen::Matrix2d>(m).singularValues();
    if (!(sv(0) > 0.0)) return 0.0;
    return sv(1) / sv(0);
}

DistortionResult distortion_score(std::span<const Frame> original, std::span<const Frame> stabilized,
                                  const TrackingOptions& opts, Exec exec) {
    if (original.size() != stabilized.size()) {
        throw LengthMismatch(std::to_string(original.size()) + " original vs " + std::to_string(stabilized.size()) +
                             " stabilized frames");
    }
    DistortionResult r;
    r.per_frame.assign(original.size(), -1.0);
    std::vector<std::string> errors(original.size());
    for_each_index(original.size(), exec, [&](std::size_t i) {
        try {
            const Frame& s = stabilized[i];
            const Frame& o = original[i];
            if (s.width > o.width || s.height > o.height) throw FrameMismatch("stabilized frame larger than original");
            const Frame ref = sub_image(o, (o.width - s.width) / 2, (o.height - s.height) / 2, s.width, s.height);
            r.per_frame[i] = anisotropy(track_homography(ref, s, opts, Exec::Serial));
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    bool any = false;
    r.score = 1.0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        if (!errors[i].empty()) {
            r.warnings.push_back("frame " + std::to_string(i) + " skipped: " + errors[i]);
            continue;
        }
        any = true;
        r.score = std::min(r.score, r.per_frame[i]);
    }
    if (!any) throw AllFramesFailed("no frame pair produced a homography");
    return r;
}

double window_valid_fraction(int width, int height, int crop_width, int crop_height, const AffineParams& applied) {
    const AffineMatrix inv = invert(params_to_matrix(applied));
    const int x0 = (width - crop_width) / 2, y0 = (height - crop_height) / 2;
    std::size_t inside = 0;
    for (int y = 0; y < crop_height; ++y) {
        for (int x = 0; x < crop_width; ++x) {
            const Point2 src = synthstab::apply(inv, {static_cast<double>(x + x0), static_cast<double>(y + y0)});
            if (inside_grid(src.x, src.y, width, height)) ++inside;
        }
    }
    return static_cast<double>(inside) / (static_cast<double>(crop_width) * crop_height);
}

double cropping_ratio(std::span<const Frame> original, std::span<const Frame> stabilized,
                      std::span<const AffineParams> applied) {
    if (original.size() != stabilized.size() || original.size() != applied.size()) {
        throw LengthMismatch("frame and transform counts differ");
    }
    if (original.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        const Frame& o = original[i];
        const Frame& s = stabilized[i];
        const double valid = window_valid_fraction(o.width, o.height, s.width, s.height, applied[i]);
        sum += static_cast<double>(s.width) * s.height * valid / (static_cast<double>(o.width) * o.height);
    }
    return sum / static_cast<double>(original.size());
}

MetricsReport evaluate(std::span<const Frame> original, std::span<const Frame> stabilized, const EvalMetadata& meta,
                       const TrackingOptions& opts, Exec exec) {
    if (original.size() != stabilized.size()) {
        throw LengthMismatch(std::to_string(original.size()) + " original vs " + std::to_string(stabilized.size()) +
                             " stabilized frames");
    }
    if (!meta.applied.empty() && meta.applied.size() != original.size()) {
        throw LengthMismatch("applied transform count differs from the frame count");
    }
    MetricsReport r;
    const MotionSeries out_series = pair_motion_series(stabilized, opts, exec);
    const MotionSeries in_series = pair_motion_series(original, opts, exec);
    r.stability = stability_scores(out_series);
    r.input_stability = stability_scores(in_series);
    for (const auto& w : out_series.warnings) r.warnings.push_back("stabilized " + w);
    try {
        DistortionResult d = distortion_score(original, stabilized, opts, exec);
        r.distortion = d.score;
        r.distortion_per_frame = std::move(d.per_frame);
        r.warnings.insert(r.warnings.end(), d.warnings.begin(), d.warnings.end());
    } catch (const AllFramesFailed& e) {
        r.distortion_failed = true;
        r.distortion = 0.0;
        r.warnings.push_back(e.what());
    }
    if (meta.applied.empty()) {
        std::vector<AffineParams> identity(original.size());
        r.cropping_ratio = cropping_ratio(original, stabilized, identity);
    } else {
        r.cropping_ratio = cropping_ratio(original, stabilized, meta.applied);
    }
    r.success = meta.complete && !r.distortion_failed && r.distortion <= 1.0;
    return r;
}

namespace {

std::string distortion_text(const MetricsReport& r) {
    if (r.distortion_failed) return "failed";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10f", r.distortion);
    return buf;
}

}  // namespace

std::string format_report(const MetricsReport& r) {
    char buf[1024];
    std::snprintf(buf, sizeof(buf),
                  "stability_translation: %.10f\nstability_rotation: %.10f\nstability_avg: %.10f\n"
                  "input_stability_avg: %.10f\ndistortion: %s\ncropping_ratio: %.10f\nsuccess: %s\nwarnings: %zu\n",
                  r.stability.translation, r.stability.rotation, r.stability.average, r.input_stability.average,
                  distortion_text(r).c_str(), r.cropping_ratio,
                  r.success ? "true" : "false", r.warnings.size());
    std::string out = buf;
    for (const auto& w : r.warnings) out += "warning: " + w + "\n";
    return out;
}

void write_report(const std::string& path, const MetricsReport& r) { write_file_atomic(path, format_report(r)); }

std::string format_batch_summary(std::span<const BatchRow> rows) {
    std::string out = "video_id,stability,distortion,cropping,success\n";
    char buf[512];
    for (const auto& row : rows) {
        const MetricsReport& r = row.report;
        std::snprintf(buf, sizeof(buf), "%s,%.10f,%s,%.10f,%s\n", row.video_id.c_str(), r.stability.average,
                      distortion_text(r).c_str(), r.cropping_ratio,
                      r.success ? "true" : "false");
        out += buf;
    }
    return out;
}

void write_batch_summary(const std::string& path, std::span<const BatchRow> rows) {
    write_file_atomic(path, format_batch_summary(rows));
}

double success_rate(std::span<const BatchRow> rows) {
    if (rows.empty()) return 0.0;
    const auto ok = std::count_if(rows.begin(), rows.end(), [](const BatchRow& r) { return r.report.success; });
    return static_cast<double>(ok) / static_cast<double>(rows.size());
}

}  // namespace synthstab
