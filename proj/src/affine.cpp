#include "synthstab/affine.hpp"

#include "synthstab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <charconv>
#include <numbers>

namespace synthstab {

bool AffineParams::valid() const {
    return std::isfinite(tx) && std::isfinite(ty) && std::isfinite(theta) && std::isfinite(s) &&
           s > 0.0 && theta > -std::numbers::pi && theta <= std::numbers::pi;
}

AffineMatrix AffineMatrix::translation(double tx, double ty) {
    return AffineMatrix{{1.0, 0.0, tx, 0.0, 1.0, ty}};
}

double canonical_angle(double theta) {
    double wrapped = std::remainder(theta, 2.0 * std::numbers::pi);
    if (wrapped <= -std::numbers::pi) wrapped += 2.0 * std::numbers::pi;
    return wrapped;
}

AffineMatrix params_to_matrix(const AffineParams& p) {
    const double c = p.s * std::cos(p.theta);
    const double sn = p.s * std::sin(p.theta);
    return AffineMatrix{{c, -sn, p.tx, sn, c, p.ty}};
}

AffineParams matrix_to_params(const AffineMatrix& a) {
    const double norm = std::hypot(a.m[0], a.m[3]);
    const double tol = 1e-6 * std::max(1.0, norm);
    if (!(norm > 0.0) || std::abs(a.m[0] - a.m[4]) > tol || std::abs(a.m[1] + a.m[3]) > tol) {
        throw NonSimilarity("2x2 block is not a nonzero scaled rotation");
    }
    AffineParams p;
    p.tx = a.m[2];
    p.ty = a.m[5];
    p.s = norm;
    p.theta = canonical_angle(std::atan2(a.m[3], a.m[0]));
    return p;
}

Point2 apply(const AffineMatrix& a, Point2 p) {
    return {a.m[0] * p.x + a.m[1] * p.y + a.m[2], a.m[3] * p.x + a.m[4] * p.y + a.m[5]};
}

AffineMatrix compose(const AffineMatrix& a, const AffineMatrix& b) {
    AffineMatrix r;
    r.m[0] = a.m[0] * b.m[0] + a.m[1] * b.m[3];
    r.m[1] = a.m[0] * b.m[1] + a.m[1] * b.m[4];
    r.m[2] = a.m[0] * b.m[2] + a.m[1] * b.m[5] + a.m[2];
    r.m[3] = a.m[3] * b.m[0] + a.m[4] * b.m[3];
    r.m[4] = a.m[3] * b.m[1] + a.m[4] * b.m[4];
    r.m[5] = a.m[3] * b.m[2] + a.m[4] * b.m[5] + a.m[5];
    return r;
}

AffineMatrix invert(const AffineMatrix& a) {
    const double d = a.det();
    if (std::abs(d) < 1e-12) throw SingularTransform("determinant below 1e-12");
    AffineMatrix r;
    r.m[0] = a.m[4] / d;
    r.m[1] = -a.m[1] / d;
    r.m[3] = -a.m[3] / d;
    r.m[4] = a.m[0] / d;
    r.m[2] = -(r.m[0] * a.m[2] + r.m[1] * a.m[5]);
    r.m[5] = -(r.m[3] * a.m[2] + r.m[4] * a.m[5]);
    return r;
}

AffineParams fit_similarity(std::span<const Correspondence> corrs) {
    if (corrs.size() < 2) throw DegenerateConfiguration("need at least 2 correspondences");

    // Centroid normalization decouples the translation from (a, b).
    double sx = 0, sy = 0, dx = 0, dy = 0;
    for (const auto& c : corrs) {
        if (!std::isfinite(c.src.x) || !std::isfinite(c.src.y) || !std::isfinite(c.dst.x) ||
            !std::isfinite(c.dst.y)) {
            throw DegenerateConfiguration("non-finite correspondence");
        }
        sx += c.src.x;
        sy += c.src.y;
        dx += c.dst.x;
        dy += c.dst.y;
    }
    const double n = static_cast<double>(corrs.size());
    sx /= n;
    sy /= n;
    dx /= n;
    dy /= n;

    double norm = 0, dot = 0, cross = 0;
    for (const auto& c : corrs) {
        const double x = c.src.x - sx, y = c.src.y - sy;
        const double u = c.dst.x - dx, v = c.dst.y - dy;
        norm += x * x + y * y;
        dot += x * u + y * v;
        cross += x * v - y * u;
    }
    if (norm < 1e-12) throw DegenerateConfiguration("source points coincide");

    const double a = dot / norm;
    const double b = cross / norm;
    const double scale = std::hypot(a, b);
    if (!(scale > 0.0)) throw DegenerateConfiguration("destination points coincide");

    AffineParams p;
    p.s = scale;
    p.theta = canonical_angle(std::atan2(b, a));
    p.tx = dx - (a * sx - b * sy);
    p.ty = dy - (b * sx + a * sy);
    return p;
}

double similarity_residual(std::span<const Correspondence> corrs, const AffineParams& p) {
    const AffineMatrix m = params_to_matrix(p);
    double sum = 0;
    for (const auto& c : corrs) {
        const Point2 q = apply(m, c.src);
        sum += (q.x - c.dst.x) * (q.x - c.dst.x) + (q.y - c.dst.y) * (q.y - c.dst.y);
    }
    return sum;
}

AffineParams to_centered(const AffineParams& p, Point2 center) {
    // dst - c = sR (src - c) + u  with  u = t + (sR - I) c
    const Point2 moved = apply(params_to_matrix(p), center);
    return {moved.x - center.x, moved.y - center.y, p.theta, p.s};
}

AffineParams from_centered(const AffineParams& centered, Point2 center) {
    AffineParams p{0.0, 0.0, centered.theta, centered.s};
    const Point2 rotated = apply(params_to_matrix(p), center);
    p.tx = centered.tx + center.x - rotated.x;
    p.ty = centered.ty + center.y - rotated.y;
    return p;
}

std::string format_params(const AffineParams& p) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g", p.tx, p.ty, p.theta, p.s);
    return buf;
}

AffineParams parse_params(std::string_view line) {
    std::array<double, 4> values{};
    const char* cur = line.data();
    const char* end = line.data() + line.size();
    for (double& v : values) {
        while (cur < end && (*cur == ' ' || *cur == '\t')) ++cur;
        const auto [next, ec] = std::from_chars(cur, end, v);
        if (ec != std::errc{}) {
            throw IoFailure("malformed affine parameter line: '" + std::string(line) + "'");
        }
        cur = next;
    }
    return {values[0], values[1], values[2], values[3]};
}

}  // namespace synthstab
