#include "morl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "morl/errors.hpp"

namespace morl {

namespace {

void check_dims(const std::vector<VectorReturn>& points) {
    if (points.empty()) return;
    const std::size_t n = points.front().size();
    for (const auto& p : points) {
        if (p.size() != n) throw std::invalid_argument("pareto_filter: mixed dimensions");
    }
}

std::vector<VectorReturn> filter_2d(const std::vector<VectorReturn>& points) {
    std::vector<std::size_t> idx(points.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (points[a][0] != points[b][0]) return points[a][0] > points[b][0];
        if (points[a][1] != points[b][1]) return points[a][1] > points[b][1];
        return a < b;
    });
    std::vector<char> keep(points.size(), 0);
    double best_y = -std::numeric_limits<double>::infinity();
    for (std::size_t i : idx) {
        if (points[i][1] > best_y) {
            keep[i] = 1;
            best_y = points[i][1];
        }
    }
    std::vector<VectorReturn> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (keep[i]) out.push_back(points[i]);
    }
    return out;
}

std::vector<VectorReturn> filter_general(const std::vector<VectorReturn>& points) {
    std::vector<VectorReturn> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool drop = false;
        for (std::size_t j = 0; j < points.size() && !drop; ++j) {
            if (j == i) continue;
            if (dominates(points[j], points[i])) drop = true;
            else if (points[j] == points[i] && j < i) drop = true; // duplicate, keep first
        }
        if (!drop) out.push_back(points[i]);
    }
    return out;
}

// 2-D sweep over points strictly above the reference in both coordinates.
double hv2d(std::vector<VectorReturn> pts, double rx, double ry) {
    pts.erase(std::remove_if(pts.begin(), pts.end(),
                             [&](const VectorReturn& p) { return p[0] <= rx || p[1] <= ry; }),
              pts.end());
    if (pts.empty()) return 0.0;
    pts = filter_2d(pts);
    std::sort(pts.begin(), pts.end(),
              [](const VectorReturn& a, const VectorReturn& b) { return a[0] > b[0]; });
    double hv = 0.0;
    // Sweep from the largest x: each point owns the strip (next_x, x] at height y - ry.
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double next_x = (i + 1 < pts.size()) ? pts[i + 1][0] : rx;
        hv += (pts[i][0] - next_x) * (pts[i][1] - ry);
    }
    return hv;
}

double hv3d(const std::vector<VectorReturn>& points, const VectorReturn& r0) {
    std::vector<VectorReturn> pts;
    for (const auto& p : points) {
        if (p[0] > r0[0] && p[1] > r0[1] && p[2] > r0[2]) pts.push_back(p);
    }
    if (pts.empty()) return 0.0;
    std::sort(pts.begin(), pts.end(),
              [](const VectorReturn& a, const VectorReturn& b) { return a[2] > b[2]; });
    double hv = 0.0;
    std::vector<VectorReturn> slab; // xy projections of points with z >= current level
    for (std::size_t i = 0; i < pts.size();) {
        const double z_hi = pts[i][2];
        while (i < pts.size() && pts[i][2] == z_hi) {
            slab.push_back({pts[i][0], pts[i][1]});
            ++i;
        }
        const double z_lo = (i < pts.size()) ? pts[i][2] : r0[2];
        hv += (z_hi - z_lo) * hv2d(slab, r0[0], r0[1]);
    }
    return hv;
}

} // namespace

std::vector<VectorReturn> pareto_filter(const std::vector<VectorReturn>& points) {
    check_dims(points);
    if (points.empty()) return {};
    if (points.front().size() == 2) {
        // Duplicates: the sweep keeps only the first among exact ties.
        return filter_2d(points);
    }
    return filter_general(points);
}

ParetoFront::ParetoFront(std::vector<VectorReturn> points, VectorReturn reference_point)
    : reference_(std::move(reference_point)) {
    for (const auto& p : points) {
        if (p.size() != reference_.size()) {
            throw std::invalid_argument("ParetoFront: point/reference dimension mismatch");
        }
    }
    points_ = pareto_filter(points);
}

double hypervolume(const ParetoFront& front) {
    const std::size_t n = front.dimension();
    if (front.points().empty()) return 0.0;
    if (n == 2) return hv2d(front.points(), front.reference_point()[0], front.reference_point()[1]);
    if (n == 3) return hv3d(front.points(), front.reference_point());
    throw UnsupportedError("hypervolume: exact mode supports 2 or 3 objectives; "
                           "use hypervolume_mc for higher dimensions");
}

McEstimate hypervolume_mc(const ParetoFront& front, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples == 0) throw std::invalid_argument("hypervolume_mc: need samples");
    const auto& pts = front.points();
    const auto& r0 = front.reference_point();
    const std::size_t n = front.dimension();
    if (pts.empty()) return {0.0, 0.0};

    VectorReturn hi(r0);
    for (const auto& p : pts) {
        for (std::size_t j = 0; j < n; ++j) hi[j] = std::max(hi[j], p[j]);
    }
    double box = 1.0;
    for (std::size_t j = 0; j < n; ++j) box *= (hi[j] - r0[j]);
    if (box <= 0.0) return {0.0, 0.0};

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t hits = 0;
    std::vector<double> z(n);
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (std::size_t j = 0; j < n; ++j) z[j] = r0[j] + unit(rng) * (hi[j] - r0[j]);
        for (const auto& p : pts) {
            bool inside = true;
            for (std::size_t j = 0; j < n; ++j) {
                if (z[j] > p[j]) { inside = false; break; }
            }
            if (inside) { ++hits; break; }
        }
    }
    const double frac = static_cast<double>(hits) / static_cast<double>(n_samples);
    const double se = box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(n_samples));
    return {box * frac, se};
}

double sparsity_raw(const std::vector<VectorReturn>& points) {
    if (points.size() <= 1) return 0.0;
    const std::size_t n = points.front().size();
    double total = 0.0;
    std::vector<double> coord(points.size());
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < points.size(); ++i) coord[i] = points[i][j];
        std::sort(coord.begin(), coord.end(), std::greater<double>());
        for (std::size_t i = 0; i + 1 < coord.size(); ++i) {
            const double gap = coord[i] - coord[i + 1];
            total += gap * gap;
        }
    }
    return total / static_cast<double>(points.size() - 1);
}

double sparsity(const ParetoFront& front) { return sparsity_raw(front.points()); }

double expected_utility(const std::vector<std::pair<Preference, VectorReturn>>& evals,
                        bool* grid_warning) {
    if (evals.empty()) throw std::invalid_argument("expected_utility: empty evaluation list");
    if (grid_warning) {
        *grid_warning = false;
        const std::size_t m = evals.size();
        if (evals.front().first.size() == 2 && m >= 2) {
            const double step = 1.0 / static_cast<double>(m - 1);
            for (std::size_t k = 0; k < m; ++k) {
                if (std::abs(evals[k].first[0] - static_cast<double>(k) * step) > 1e-9) {
                    *grid_warning = true;
                    break;
                }
            }
        } else {
            *grid_warning = true;
        }
    }
    double sum = 0.0;
    for (const auto& [pref, ret] : evals) sum += scalarize(pref, ret);
    return sum / static_cast<double>(evals.size());
}

} // namespace morl
