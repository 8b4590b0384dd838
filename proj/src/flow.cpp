#include "synthstab/flow.hpp"

#include "synthstab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace synthstab {

namespace {

struct Grid {
    std::vector<int> xs;  // block left edges
    std::vector<int> ys;  // block top edges
    std::vector<double> cx;
    std::vector<double> cy;
};

std::vector<int> block_origins(int extent, int block, int step) {
    std::vector<int> o;
    for (int p = 0; p + block <= extent; p += step) o.push_back(p);
    if (!o.empty() && o.back() + block < extent) o.push_back(extent - block);
    return o;
}

Grid make_grid(int w, int h, int block) {
    Grid g;
    const int step = std::max(1, block / 2);
    g.xs = block_origins(w, block, step);
    g.ys = block_origins(h, block, step);
    for (int x : g.xs) g.cx.push_back(x + (block - 1) * 0.5);
    for (int y : g.ys) g.cy.push_back(y + (block - 1) * 0.5);
    return g;
}

// Linear interpolation weight lookup along one axis of block centres.
void axis_lookup(const std::vector<double>& c, double p, std::size_t& i0, std::size_t& i1, double& t) {
    if (c.size() == 1 || p <= c.front()) {
        i0 = i1 = 0;
        t = 0.0;
        return;
    }
    if (p >= c.back()) {
        i0 = i1 = c.size() - 1;
        t = 0.0;
        return;
    }
    const auto it = std::upper_bound(c.begin(), c.end(), p);
    i1 = static_cast<std::size_t>(it - c.begin());
    i0 = i1 - 1;
    t = (p - c[i0]) / (c[i1] - c[i0]);
}

struct BlockField {
    Grid grid;
    std::vector<Point2> disp;
    std::vector<std::uint8_t> valid;

    Point2 interpolate(double x, double y) const {
        std::size_t x0, x1, y0, y1;
        double tx, ty;
        axis_lookup(grid.cx, x, x0, x1, tx);
        axis_lookup(grid.cy, y, y0, y1, ty);
        const std::size_t cols = grid.xs.size();
        const auto at = [&](std::size_t gx, std::size_t gy) { return disp[gy * cols + gx]; };
        const Point2 a = at(x0, y0), b = at(x1, y0), c = at(x0, y1), d = at(x1, y1);
        const double top_x = a.x + tx * (b.x - a.x), top_y = a.y + tx * (b.y - a.y);
        const double bot_x = c.x + tx * (d.x - c.x), bot_y = c.y + tx * (d.y - c.y);
        return {top_x + ty * (bot_x - top_x), top_y + ty * (bot_y - top_y)};
    }
};

double sad(const Frame& a, const Frame& b, int ax, int ay, int bx, int by, int block, double limit) {
    double sum = 0.0;
    for (int j = 0; j < block; ++j) {
        const float* ra = &a.pixels[a.index(ax, ay + j)];
        const float* rb = &b.pixels[b.index(bx, by + j)];
        for (int i = 0; i < block; ++i) sum += std::abs(ra[i] - rb[i]);
        if (sum >= limit) return sum;
    }
    return sum;
}

inline float grad_x(const Frame& f, int x, int y) {
    const int l = std::max(0, x - 1), r = std::min(f.width - 1, x + 1);
    return (f.at(r, y) - f.at(l, y)) / static_cast<float>(r - l);
}

inline float grad_y(const Frame& f, int x, int y) {
    const int t = std::max(0, y - 1), b = std::min(f.height - 1, y + 1);
    return (f.at(x, b) - f.at(x, t)) / static_cast<float>(b - t);
}

bool block_inside(double x0, double y0, int block, int w, int h) {
    return inside_grid(x0, y0, w, h) && inside_grid(x0 + block - 1, y0 + block - 1, w, h);
}

// Gradient-based sub-pixel refinement of a translational block match using
// the template gradient (constant Hessian).
Point2 refine(const Frame& a, const Frame& b, int x0, int y0, int block, Point2 d, int iterations) {
    double hxx = 0, hxy = 0, hyy = 0;
    for (int j = 0; j < block; ++j) {
        for (int i = 0; i < block; ++i) {
            const double gx = grad_x(a, x0 + i, y0 + j), gy = grad_y(a, x0 + i, y0 + j);
            hxx += gx * gx;
            hxy += gx * gy;
            hyy += gy * gy;
        }
    }
    const double det = hxx * hyy - hxy * hxy;
    const double trace = hxx + hyy;
    if (!(det > 1e-6 * trace * trace) || trace <= 0.0) return d;
    const Point2 start = d;
    for (int it = 0; it < iterations; ++it) {
        if (!block_inside(x0 + d.x, y0 + d.y, block, b.width, b.height)) break;
        double ex = 0, ey = 0;
        for (int j = 0; j < block; ++j) {
            for (int i = 0; i < block; ++i) {
                const double diff =
                    sample_bilinear_clamped(b, x0 + i + d.x, y0 + j + d.y) - a.at(x0 + i, y0 + j);
                ex += grad_x(a, x0 + i, y0 + j) * diff;
                ey += grad_y(a, x0 + i, y0 + j) * diff;
            }
        }
        const double dx = -(hyy * ex - hxy * ey) / det;
        const double dy = -(hxx * ey - hxy * ex) / det;
        Point2 next{d.x + dx, d.y + dy};
        if (std::abs(next.x - start.x) > 1.0 || std::abs(next.y - start.y) > 1.0) break;
        if (!block_inside(x0 + next.x, y0 + next.y, block, b.width, b.height)) break;
        d = next;
        if (dx * dx + dy * dy < 1e-6) break;
    }
    return d;
}

struct BlockResult {
    Point2 disp;
    bool valid;
};

BlockResult match_block(const Frame& a, const Frame& b, int x0, int y0, int block, int search, Point2 pred,
                        int refine_iterations) {
    const int px = static_cast<int>(std::lround(pred.x));
    const int py = static_cast<int>(std::lround(pred.y));
    double best = std::numeric_limits<double>::infinity();
    int bx = 0, by = 0;
    bool found = false;
    const auto consider = [&](int dx, int dy) {
        const int tx = x0 + dx, ty = y0 + dy;
        if (tx < 0 || ty < 0 || tx + block > b.width || ty + block > b.height) return;
        const double s = sad(a, b, x0, y0, tx, ty, block, best);
        if (s < best) {
            best = s;
            bx = dx;
            by = dy;
            found = true;
        }
    };
    consider(px, py);
    for (int dy = py - search; dy <= py + search; ++dy) {
        for (int dx = px - search; dx <= px + search; ++dx) consider(dx, dy);
    }
    if (!found) return {pred, false};
    Point2 d{static_cast<double>(bx), static_cast<double>(by)};
    if (refine_iterations > 0 && best > 0.0) d = refine(a, b, x0, y0, block, d, refine_iterations);
    return {d, true};
}

// Replace invalid blocks by the mean of valid 4-neighbours, repeatedly, so the
// field can seed the next level everywhere.
void fill_invalid(BlockField& f) {
    const std::size_t cols = f.grid.xs.size(), rows = f.grid.ys.size();
    std::vector<std::uint8_t> known = f.valid;
    if (std::none_of(known.begin(), known.end(), [](std::uint8_t k) { return k != 0; })) {
        std::fill(f.disp.begin(), f.disp.end(), Point2{});
        return;
    }
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::uint8_t> next = known;
        for (std::size_t y = 0; y < rows; ++y) {
            for (std::size_t x = 0; x < cols; ++x) {
                const std::size_t i = y * cols + x;
                if (known[i]) continue;
                double sx = 0, sy = 0;
                int n = 0;
                const auto take = [&](std::size_t j) {
                    if (known[j]) {
                        sx += f.disp[j].x;
                        sy += f.disp[j].y;
                        ++n;
                    }
                };
                if (x > 0) take(i - 1);
                if (x + 1 < cols) take(i + 1);
                if (y > 0) take(i - cols);
                if (y + 1 < rows) take(i + cols);
                if (n > 0) {
                    f.disp[i] = {sx / n, sy / n};
                    next[i] = 1;
                    changed = true;
                }
            }
        }
        known = std::move(next);
    }
}

BlockField match_level(const Frame& a, const Frame& b, const FlowOptions& opts, const BlockField* coarse,
                       bool refine_blocks, Exec exec) {
    BlockField field;
    field.grid = make_grid(a.width, a.height, opts.block);
    const std::size_t cols = field.grid.xs.size(), rows = field.grid.ys.size();
    field.disp.assign(cols * rows, Point2{});
    field.valid.assign(cols * rows, 0);
    const int iterations = refine_blocks ? opts.refine_iterations : 0;

    const auto run = [&](std::size_t i) {
        const std::size_t gx = i % cols, gy = i / cols;
        Point2 pred{};
        if (coarse) {
            const Point2 c = coarse->interpolate((field.grid.cx[gx] - 0.5) / 2.0, (field.grid.cy[gy] - 0.5) / 2.0);
            pred = {2.0 * c.x, 2.0 * c.y};
        }
        const BlockResult r =
            match_block(a, b, field.grid.xs[gx], field.grid.ys[gy], opts.block, opts.search, pred, iterations);
        field.disp[i] = r.disp;
        field.valid[i] = r.valid ? 1 : 0;
    };

    const auto n = static_cast<long long>(cols * rows);
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < n; ++i) run(static_cast<std::size_t>(i));
    } else {
        for (long long i = 0; i < n; ++i) run(static_cast<std::size_t>(i));
    }
    return field;
}

}  // namespace

double block_texture(const Frame& f, int x0, int y0, int block) {
    double hxx = 0, hxy = 0, hyy = 0;
    for (int j = 0; j < block; ++j) {
        for (int i = 0; i < block; ++i) {
            const double gx = grad_x(f, x0 + i, y0 + j), gy = grad_y(f, x0 + i, y0 + j);
            hxx += gx * gx;
            hxy += gx * gy;
            hyy += gy * gy;
        }
    }
    const double half_trace = 0.5 * (hxx + hyy);
    const double disc = std::sqrt(std::max(0.0, 0.25 * (hxx - hyy) * (hxx - hyy) + hxy * hxy));
    return (half_trace - disc) / (static_cast<double>(block) * block);
}

FlowField compute_flow(const Frame& a, const Frame& b, const FlowOptions& opts, Exec exec) {
    if (a.width != b.width || a.height != b.height) {
        throw FrameMismatch("flow frames differ in size");
    }
    if (opts.levels < 1 || opts.block < 2 || opts.search < 0) {
        throw FrameMismatch("invalid flow options");
    }
    if (a.width < opts.block || a.height < opts.block) {
        throw FrameMismatch("frames smaller than one block");
    }

    std::vector<Frame> pa{a}, pb{b};
    while (static_cast<int>(pa.size()) < opts.levels &&
           std::min(pa.back().width, pa.back().height) / 2 >= 4 * opts.block) {
        pa.push_back(downsample2(pa.back()));
        pb.push_back(downsample2(pb.back()));
    }

    BlockField coarse;
    bool have_coarse = false;
    for (int level = static_cast<int>(pa.size()) - 1; level >= 0; --level) {
        const auto l = static_cast<std::size_t>(level);
        BlockField f = match_level(pa[l], pb[l], opts, have_coarse ? &coarse : nullptr, true, exec);
        if (level > 0) fill_invalid(f);
        coarse = std::move(f);
        have_coarse = true;
    }

    FlowField out;
    out.width = a.width;
    out.height = a.height;
    const std::size_t n = a.size();
    out.u.resize(n);
    out.v.resize(n);
    out.valid.resize(n);

    const Grid& g = coarse.grid;
    const std::size_t cols = g.xs.size();
    out.samples.reserve(coarse.disp.size());
    for (std::size_t gy = 0; gy < g.ys.size(); ++gy) {
        for (std::size_t gx = 0; gx < cols; ++gx) {
            const std::size_t i = gy * cols + gx;
            out.samples.push_back({{g.cx[gx], g.cy[gy]}, coarse.disp[i], coarse.valid[i] != 0,
                                   block_texture(a, g.xs[gx], g.ys[gy], opts.block)});
        }
    }

    BlockField dense = coarse;
    fill_invalid(dense);
    for (int y = 0; y < a.height; ++y) {
        std::size_t y0, y1;
        double ty;
        axis_lookup(g.cy, y, y0, y1, ty);
        const std::size_t ny = ty < 0.5 ? y0 : y1;
        for (int x = 0; x < a.width; ++x) {
            std::size_t x0, x1;
            double tx;
            axis_lookup(g.cx, x, x0, x1, tx);
            const std::size_t nx = tx < 0.5 ? x0 : x1;
            const Point2 d = dense.interpolate(x, y);
            const std::size_t i = out.index(x, y);
            out.u[i] = static_cast<float>(d.x);
            out.v[i] = static_cast<float>(d.y);
            out.valid[i] = coarse.valid[ny * cols + nx];
        }
    }
    return out;
}

}  // namespace synthstab
