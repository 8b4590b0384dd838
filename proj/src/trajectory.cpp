#include "synthstab/trajectory.hpp"

#include "synthstab/errors.hpp"
#include "synthstab/textio.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>

namespace synthstab {

Trajectory accumulate(std::span<const AffineParams> params) {
    Trajectory t;
    double tx = 0, ty = 0, th = 0, ls = 0;
    for (const AffineParams& p : params) {
        tx += p.tx;
        ty += p.ty;
        th += p.theta;
        ls += std::log(p.s);
        t.tx.push_back(tx);
        t.ty.push_back(ty);
        t.theta.push_back(th);
        t.log_s.push_back(ls);
    }
    return t;
}

std::vector<AffineParams> differences(const Trajectory& traj) {
    std::vector<AffineParams> out(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const bool first = i == 0;
        out[i].tx = traj.tx[i] - (first ? 0.0 : traj.tx[i - 1]);
        out[i].ty = traj.ty[i] - (first ? 0.0 : traj.ty[i - 1]);
        out[i].theta = traj.theta[i] - (first ? 0.0 : traj.theta[i - 1]);
        out[i].s = std::exp(traj.log_s[i] - (first ? 0.0 : traj.log_s[i - 1]));
    }
    return out;
}

Extrema find_extrema(std::span<const double> signal) {
    const std::size_t n = signal.size();
    if (n < 3) throw SignalTooShort("need at least 3 samples, got " + std::to_string(n));
    Extrema e;
    e.maxima.push_back(0);
    e.minima.push_back(0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double before = signal[i] - signal[i - 1];
        if (before == 0.0) continue;
        std::size_t j = i;
        while (j + 1 < n && signal[j + 1] == signal[j]) ++j;
        if (j + 1 >= n) continue;
        const double after = signal[j + 1] - signal[j];
        if (before > 0.0 && after < 0.0) e.maxima.push_back(i);
        if (before < 0.0 && after > 0.0) e.minima.push_back(i);
    }
    e.maxima.push_back(n - 1);
    e.minima.push_back(n - 1);
    return e;
}

std::vector<double> interpolate_knots(std::span<const std::size_t> knots, std::span<const double> values,
                                      std::size_t n) {
    std::vector<double> out(n);
    const std::size_t m = knots.size();
    if (m == 0) return out;
    if (m == 1) {
        std::fill(out.begin(), out.end(), values[0]);
        return out;
    }
    std::size_t seg = 0;
    for (std::size_t x = 0; x < n; ++x) {
        while (seg + 2 < m && static_cast<double>(x) > static_cast<double>(knots[seg + 1])) ++seg;
        const double xd = static_cast<double>(x);
        if (m == 2) {
            const double x0 = static_cast<double>(knots[0]), x1 = static_cast<double>(knots[1]);
            out[x] = values[0] + (values[1] - values[0]) * (xd - x0) / (x1 - x0);
            continue;
        }
        // Each segment takes the quadratic through its two knots and the next
        // one, except next to the last endpoint knot, which mirrors the first
        // segment so that the endpoint only shapes the segment it bounds.
        std::size_t a = seg + 2 < m ? seg : m - 3;
        if (m >= 4 && seg + 3 == m && static_cast<double>(x) > static_cast<double>(knots[seg])) a = m - 4;
        const double x0 = static_cast<double>(knots[a]);
        const double x1 = static_cast<double>(knots[a + 1]);
        const double x2 = static_cast<double>(knots[a + 2]);
        const double l0 = (xd - x1) * (xd - x2) / ((x0 - x1) * (x0 - x2));
        const double l1 = (xd - x0) * (xd - x2) / ((x1 - x0) * (x1 - x2));
        const double l2 = (xd - x0) * (xd - x1) / ((x2 - x0) * (x2 - x1));
        out[x] = values[a] * l0 + values[a + 1] * l1 + values[a + 2] * l2;
    }
    return out;
}

EnvelopePair envelope(std::span<const double> signal) {
    const Extrema e = find_extrema(signal);
    const auto values_at = [&](const std::vector<std::size_t>& idx) {
        std::vector<double> v;
        v.reserve(idx.size());
        for (std::size_t i : idx) v.push_back(signal[i]);
        return v;
    };
    EnvelopePair env;
    env.upper = interpolate_knots(e.maxima, values_at(e.maxima), signal.size());
    env.lower = interpolate_knots(e.minima, values_at(e.minima), signal.size());
    for (std::size_t i = 0; i < signal.size(); ++i) {
        if (env.upper[i] < env.lower[i]) std::swap(env.upper[i], env.lower[i]);
    }
    return env;
}

std::vector<double> savitzky_golay(std::span<const double> signal, int window, int polyorder, bool clamp_window) {
    const auto n = static_cast<int>(signal.size());
    if (polyorder < 0) throw BadWindow("polyorder must be >= 0");
    if (clamp_window && window > n) window = (n % 2 == 1) ? n : n - 1;
    if (window <= 0 || window % 2 == 0) throw BadWindow("window must be a positive odd number, got " + std::to_string(window));
    if (window < polyorder + 1) {
        throw BadWindow("window " + std::to_string(window) + " too short for polyorder " + std::to_string(polyorder));
    }
    if (window > n) throw BadWindow("window " + std::to_string(window) + " longer than the signal");

    const int half = window / 2;
    const int cols = polyorder + 1;
    // Abscissae scaled to [-1, 1] for conditioning.
    const double unit = half > 0 ? static_cast<double>(half) : 1.0;
    Eigen::MatrixXd vander(window, cols);
    for (int r = 0; r < window; ++r) {
        const double t = (r - half) / unit;
        double p = 1.0;
        for (int c = 0; c < cols; ++c) {
            vander(r, c) = p;
            p *= t;
        }
    }
    // Rows of `fit` map window samples to polynomial coefficients.
    const Eigen::MatrixXd fit = vander.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(window, window));
    const auto weights_at = [&](int offset) {
        Eigen::RowVectorXd basis(cols);
        double p = 1.0;
        for (int c = 0; c < cols; ++c) {
            basis(c) = p;
            p *= offset / unit;
        }
        return Eigen::RowVectorXd(basis * fit);
    };

    std::vector<double> out(signal.size());
    const Eigen::RowVectorXd centre = weights_at(0);
    for (int i = half; i < n - half; ++i) {
        double acc = 0.0;
        for (int k = 0; k < window; ++k) acc += centre(k) * signal[static_cast<std::size_t>(i - half + k)];
        out[static_cast<std::size_t>(i)] = acc;
    }
    for (int i = 0; i < std::min(half, n); ++i) {
        const Eigen::RowVectorXd head = weights_at(i - half);
        const Eigen::RowVectorXd tail = weights_at(half - i);
        double a = 0.0, b = 0.0;
        for (int k = 0; k < window; ++k) {
            a += head(k) * signal[static_cast<std::size_t>(k)];
            b += tail(k) * signal[static_cast<std::size_t>(n - window + k)];
        }
        out[static_cast<std::size_t>(i)] = a;
        out[static_cast<std::size_t>(n - 1 - i)] = b;
    }
    return out;
}

SmoothedTrajectory smooth_trajectory(const Trajectory& traj, const SmoothingConfig& cfg) {
    const std::size_t n = traj.size();
    if (n < 3) throw SignalTooShort("trajectory needs at least 3 pairs, got " + std::to_string(n));
    SmoothedTrajectory out;
    const auto in = traj.series();
    const auto smooth = out.smoothed.series();
    const auto delta = out.delta.series();
    for (std::size_t k = 0; k < 4; ++k) {
        const std::vector<double>& hat = *in[k];
        if (hat.size() != n) throw LengthMismatch("trajectory series differ in length");
        const EnvelopePair env = envelope(hat);
        std::vector<double> mean(n);
        for (std::size_t i = 0; i < n; ++i) mean[i] = 0.5 * (env.upper[i] + env.lower[i]);
        *smooth[k] = savitzky_golay(mean, cfg.window, cfg.polyorder, cfg.clamp_window);
        delta[k]->resize(n);
        for (std::size_t i = 0; i < n; ++i) (*delta[k])[i] = hat[i] - (*smooth[k])[i];
    }
    out.corrected = differences(out.smoothed);
    return out;
}

void write_trajectory_csv(const std::string& path, const Trajectory& hat, const Trajectory& tilde) {
    if (hat.size() != tilde.size()) throw LengthMismatch("trajectories differ in length");
    std::string out = "frame,tx_hat,ty_hat,th_hat,logs_hat,tx_tilde,ty_tilde,th_tilde,logs_tilde\n";
    char buf[512];
    for (std::size_t i = 0; i < hat.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i + 1, hat.tx[i],
                      hat.ty[i], hat.theta[i], hat.log_s[i], tilde.tx[i], tilde.ty[i], tilde.theta[i],
                      tilde.log_s[i]);
        out += buf;
    }
    write_file_atomic(path, out);
}

}  // namespace synthstab
