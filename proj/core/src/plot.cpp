#include "sblab/plot.hpp"

#include "sblab/errors.hpp"
#include "sblab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <vector>

namespace sblab {

namespace {

struct Bounds {
    double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;
    bool seen = false;

    void include(double x, double y) {
        if (!std::isfinite(x) || !std::isfinite(y)) return;
        if (!seen) {
            xmin = xmax = x;
            ymin = ymax = y;
            seen = true;
            return;
        }
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }

    // 5% padding; degenerate spans widen to a unit box.
    void finish() {
        if (!seen) return;
        double dx = xmax - xmin, dy = ymax - ymin;
        if (dx <= 0.0) {
            xmin -= 0.5;
            xmax += 0.5;
            dx = 1.0;
        }
        if (dy <= 0.0) {
            ymin -= 0.5;
            ymax += 0.5;
            dy = 1.0;
        }
        xmin -= 0.05 * dx;
        xmax += 0.05 * dx;
        ymin -= 0.05 * dy;
        ymax += 0.05 * dy;
    }
};

constexpr double kMargin = 48.0;

struct Canvas {
    int width, height;
    Bounds b;
    std::string out;

    double px(double x) const {
        return kMargin + (x - b.xmin) / (b.xmax - b.xmin) * (width - 2 * kMargin);
    }
    double py(double y) const {
        return height - kMargin - (y - b.ymin) / (b.ymax - b.ymin) * (height - 2 * kMargin);
    }

    void append(const char* fmt, ...) __attribute__((format(printf, 2, 3))) {
        char buf[512];
        va_list ap;
        va_start(ap, fmt);
        std::vsnprintf(buf, sizeof buf, fmt, ap);
        va_end(ap);
        out += buf;
    }

    void open(const char* title) {
        append("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
               "viewBox=\"0 0 %d %d\">\n",
               width, height, width, height);
        append("<rect x=\"0\" y=\"0\" width=\"%d\" height=\"%d\" fill=\"#ffffff\"/>\n", width,
               height);
        append("<text x=\"%.3f\" y=\"20\" font-family=\"monospace\" font-size=\"13\" "
               "fill=\"#222222\">%s</text>\n",
               kMargin, title);
    }

    void axes() {
        const double x0 = kMargin, x1 = width - kMargin;
        const double y0 = height - kMargin, y1 = kMargin;
        append("<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" stroke=\"#222222\" "
               "stroke-width=\"1\"/>\n",
               x0, y0, x1, y0);
        append("<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" stroke=\"#222222\" "
               "stroke-width=\"1\"/>\n",
               x0, y0, x0, y1);
        for (int i = 0; i <= 4; ++i) {
            const double fx = b.xmin + (b.xmax - b.xmin) * i / 4.0;
            const double fy = b.ymin + (b.ymax - b.ymin) * i / 4.0;
            const double tx = px(fx), ty = py(fy);
            append("<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" stroke=\"#222222\" "
                   "stroke-width=\"1\"/>\n",
                   tx, y0, tx, y0 + 4.0);
            append("<text x=\"%.3f\" y=\"%.3f\" font-family=\"monospace\" font-size=\"10\" "
                   "fill=\"#222222\" text-anchor=\"middle\">%.3g</text>\n",
                   tx, y0 + 16.0, fx);
            append("<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" stroke=\"#222222\" "
                   "stroke-width=\"1\"/>\n",
                   x0 - 4.0, ty, x0, ty);
            append("<text x=\"%.3f\" y=\"%.3f\" font-family=\"monospace\" font-size=\"10\" "
                   "fill=\"#222222\" text-anchor=\"end\">%.3g</text>\n",
                   x0 - 6.0, ty + 3.0, fy);
        }
    }

    void close() { out += "</svg>\n"; }
};

// Deterministic choice of up to max_paths distinct path indices.
std::vector<int> pick_paths(int n_paths, int max_paths, uint64_t seed) {
    std::vector<int> idx(static_cast<size_t>(n_paths));
    for (int i = 0; i < n_paths; ++i) idx[static_cast<size_t>(i)] = i;
    if (n_paths <= max_paths) return idx;
    Rng rng(derive_seed(seed, {0xD0F7ull}));
    for (int i = 0; i < max_paths; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<uint64_t>(n_paths - i)));
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    idx.resize(static_cast<size_t>(max_paths));
    std::sort(idx.begin(), idx.end());
    return idx;
}

void project(const TrajectoryBatch& traj, int p, int k, double* x, double* y) {
    const double* s = traj.state(p, k);
    if (traj.d == 1) {
        *x = static_cast<double>(k);
        *y = s[0];
    } else {
        *x = s[0];
        *y = s[1];
    }
}

void validate_opts(const PlotOptions& opts) {
    if (opts.width < 160 || opts.height < 120)
        throw InvalidArgument("plot: viewport too small");
    if (opts.max_paths < 1) throw InvalidArgument("plot: max_paths must be >= 1");
}

} // namespace

std::string svg_trajectory_fan(const TrajectoryBatch& traj, const PlotOptions& opts) {
    validate_opts(opts);
    if (traj.n_paths > 0 && traj.d < 1) throw InvalidArgument("plot: bad trajectory batch");
    const std::vector<int> paths = pick_paths(traj.n_paths, opts.max_paths, opts.seed);

    Canvas c{opts.width, opts.height, {}, {}};
    for (int p : paths)
        for (int k = 0; k <= traj.n_steps; ++k) {
            double x, y;
            project(traj, p, k, &x, &y);
            c.b.include(x, y);
        }
    c.b.finish();

    c.open("trajectories");
    c.axes();
    for (int p : paths) {
        std::string pts;
        char buf[48];
        for (int k = 0; k <= traj.n_steps; ++k) {
            double x, y;
            project(traj, p, k, &x, &y);
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            std::snprintf(buf, sizeof buf, "%s%.3f,%.3f", pts.empty() ? "" : " ", c.px(x),
                          c.py(y));
            pts += buf;
        }
        if (pts.empty()) continue;
        c.append("<polyline points=\"%s\" fill=\"none\" stroke=\"#4477aa\" "
                 "stroke-width=\"1\" stroke-opacity=\"0.5\"/>\n",
                 pts.c_str());
    }
    c.close();
    return c.out;
}

std::string svg_boundary_scatter(const TrajectoryBatch& traj, const PlotOptions& opts) {
    validate_opts(opts);
    if (traj.n_paths > 0 && traj.d < 1) throw InvalidArgument("plot: bad trajectory batch");
    const std::vector<int> paths = pick_paths(traj.n_paths, opts.max_paths, opts.seed);

    Canvas c{opts.width, opts.height, {}, {}};
    for (int p : paths)
        for (int k : {0, traj.n_steps}) {
            double x, y;
            project(traj, p, k, &x, &y);
            c.b.include(x, y);
        }
    c.b.finish();

    c.open("boundary samples");
    c.axes();
    for (int k : {0, traj.n_steps}) {
        const char* color = (k == 0) ? "#228833" : "#cc3311";
        for (int p : paths) {
            double x, y;
            project(traj, p, k, &x, &y);
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            c.append("<circle cx=\"%.3f\" cy=\"%.3f\" r=\"2.5\" fill=\"%s\" "
                     "fill-opacity=\"0.7\"/>\n",
                     c.px(x), c.py(y), color);
        }
        if (traj.n_steps == 0) break; // both slices coincide
    }
    c.close();
    return c.out;
}

std::string svg_kl_curve(const RunMetrics& metrics, const PlotOptions& opts) {
    validate_opts(opts);
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : metrics.records)
        if (std::isfinite(r.avg_kl)) pts.emplace_back(static_cast<double>(r.half_epoch), r.avg_kl);

    Canvas c{opts.width, opts.height, {}, {}};
    for (const auto& [x, y] : pts) c.b.include(x, y);
    c.b.finish();

    c.open("averaged KL per half-epoch");
    c.axes();
    if (!pts.empty()) {
        std::string poly;
        char buf[48];
        for (const auto& [x, y] : pts) {
            std::snprintf(buf, sizeof buf, "%s%.3f,%.3f", poly.empty() ? "" : " ", c.px(x),
                          c.py(y));
            poly += buf;
        }
        c.append("<polyline points=\"%s\" fill=\"none\" stroke=\"#4477aa\" "
                 "stroke-width=\"1.5\"/>\n",
                 poly.c_str());
        for (const auto& [x, y] : pts)
            c.append("<circle cx=\"%.3f\" cy=\"%.3f\" r=\"3\" fill=\"#4477aa\"/>\n", c.px(x),
                     c.py(y));
    }
    c.close();
    return c.out;
}

} // namespace sblab
