#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

namespace synthstab {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// 4-DOF similarity motion between two consecutive frames.
///
/// Maps a point p of frame v_i to frame v_{i+1} as
///   dst = s * R(theta) * src + (tx, ty)
/// in top-left-origin pixel coordinates (pixel centers at integers).
struct AffineParams {
    double tx = 0.0;     ///< horizontal translation, pixels
    double ty = 0.0;     ///< vertical translation, pixels
    double theta = 0.0;  ///< rotation, radians in (-pi, pi]
    double s = 1.0;      ///< isotropic scale, > 0

    static constexpr AffineParams identity() { return {}; }
    bool valid() const;
    bool operator==(const AffineParams&) const = default;
};

/// 2x3 row-major matrix [[m0 m1 m2], [m3 m4 m5]].
struct AffineMatrix {
    std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

    static constexpr AffineMatrix identity() { return {}; }
    static AffineMatrix translation(double tx, double ty);

    double operator()(int row, int col) const { return m[static_cast<std::size_t>(row * 3 + col)]; }
    double& operator()(int row, int col) { return m[static_cast<std::size_t>(row * 3 + col)]; }
    double det() const { return m[0] * m[4] - m[1] * m[3]; }
};

struct Correspondence {
    Point2 src;  ///< position in frame v_i
    Point2 dst;  ///< position in frame v_{i+1}
};

/// Wraps an angle into (-pi, pi]; -pi maps to pi.
double canonical_angle(double theta);

AffineMatrix params_to_matrix(const AffineParams& p);

/// Inverse of params_to_matrix. Throws NonSimilarity if the 2x2 block is not
/// a nonzero scaled rotation within 1e-6.
AffineParams matrix_to_params(const AffineMatrix& a);

Point2 apply(const AffineMatrix& a, Point2 p);

/// Returns a∘b, i.e. apply(compose(a, b), p) == apply(a, apply(b, p)).
AffineMatrix compose(const AffineMatrix& a, const AffineMatrix& b);

/// Throws SingularTransform if |det| < 1e-12.
AffineMatrix invert(const AffineMatrix& a);

/// Least-squares similarity fit minimizing sum |dst - A src|^2.
/// Throws DegenerateConfiguration with fewer than 2 correspondences or when
/// all source points coincide.
AffineParams fit_similarity(std::span<const Correspondence> corrs);

/// Sum of squared residuals |dst - A src|^2.
double similarity_residual(std::span<const Correspondence> corrs, const AffineParams& p);

// Frame-centred parametrization: the translation is the displacement of
// `center` instead of the coordinate origin. Rotation and scale are shared.
AffineParams to_centered(const AffineParams& p, Point2 center);
AffineParams from_centered(const AffineParams& centered, Point2 center);

/// Pixel-grid centre of a width x height frame.
inline Point2 frame_center(int width, int height) {
    return {(width - 1) * 0.5, (height - 1) * 0.5};
}

/// `t_x t_y theta s` with 17 significant digits.
std::string format_params(const AffineParams& p);
AffineParams parse_params(std::string_view line);

}  // namespace synthstab
