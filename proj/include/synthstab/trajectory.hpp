#pragma once

#include "synthstab/affine.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace synthstab {

/// Cumulative camera motion; entry i is the sum of pair estimates 0..i.
/// Scale is accumulated in log space.
struct Trajectory {
    std::vector<double> tx;
    std::vector<double> ty;
    std::vector<double> theta;
    std::vector<double> log_s;

    std::size_t size() const { return tx.size(); }
    std::array<std::vector<double>*, 4> series() { return {&tx, &ty, &theta, &log_s}; }
    std::array<const std::vector<double>*, 4> series() const { return {&tx, &ty, &theta, &log_s}; }
};

Trajectory accumulate(std::span<const AffineParams> params);

/// First differences of a trajectory (inverse of accumulate).
std::vector<AffineParams> differences(const Trajectory& traj);

struct Extrema {
    std::vector<std::size_t> maxima;
    std::vector<std::size_t> minima;
};

/// Local extrema from sign changes of the forward difference; a plateau
/// reports its first index. Both endpoints appear in both lists.
/// Throws SignalTooShort below 3 samples.
Extrema find_extrema(std::span<const double> signal);

struct EnvelopePair {
    std::vector<double> upper;
    std::vector<double> lower;
};

/// Piecewise-quadratic interpolation through the maxima (upper) and minima
/// (lower), linear with fewer than three knots. Where the curves cross they
/// are swapped. Throws SignalTooShort.
EnvelopePair envelope(std::span<const double> signal);

/// Evaluates the piecewise-quadratic interpolant through (knots[k], values[k])
/// at every integer in [0, n).
std::vector<double> interpolate_knots(std::span<const std::size_t> knots, std::span<const double> values, std::size_t n);

/// Savitzky-Golay smoothing. Interior samples take the centre value of the
/// least-squares polynomial over the centred window; the first and last
/// window/2 samples evaluate the polynomial fitted to the first / last full
/// window. With `clamp_window` a window longer than the signal shrinks to the
/// largest odd length that fits. Throws BadWindow for an even window or one not
/// longer than polyorder.
std::vector<double> savitzky_golay(std::span<const double> signal, int window, int polyorder, bool clamp_window = true);

struct SmoothingConfig {
    int window = 51;
    int polyorder = 1;
    bool clamp_window = true;
};

struct SmoothedTrajectory {
    Trajectory smoothed;                 ///< T~
    Trajectory delta;                    ///< T^ - T~
    std::vector<AffineParams> corrected; ///< X~, whose accumulation is T~
};

/// Envelope mean -> Savitzky-Golay -> difference, per parameter series.
/// Throws SignalTooShort below 3 pairs and BadWindow.
SmoothedTrajectory smooth_trajectory(const Trajectory& traj, const SmoothingConfig& cfg = {});

/// CSV with columns frame, tx_hat, ty_hat, th_hat, logs_hat, tx_tilde,
/// ty_tilde, th_tilde, logs_tilde. Throws LengthMismatch.
void write_trajectory_csv(const std::string& path, const Trajectory& hat, const Trajectory& tilde);

}  // namespace synthstab
