#include "plantnbv/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace plantnbv {

PointGrid::PointGrid(const PointCloud& cloud, double cell_size)
    : cell_(cell_size), points_(cloud) {
    if (cell_size <= 0.0) throw InvalidSpecError("grid cell size must be positive");
    const std::size_t n = points_.size();
    std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(n);
    for (std::size_t p = 0; p < n; ++p) {
        std::int32_t i, j, k;
        cell_of(points_[p], i, j, k);
        keyed[p] = {cell_key(i, j, k), static_cast<std::uint32_t>(p)};
    }
    std::sort(keyed.begin(), keyed.end());
    order_.resize(n);
    for (std::size_t p = 0; p < n; ++p) order_[p] = keyed[p].second;
    for (std::size_t p = 0; p < n; ++p) {
        if (p == 0 || keyed[p].first != keyed[p - 1].first) {
            cell_keys_.push_back(keyed[p].first);
            cell_start_.push_back(static_cast<std::uint32_t>(p));
        }
    }
    cell_start_.push_back(static_cast<std::uint32_t>(n));
}

void PointGrid::cell_of(const Vec3& p, std::int32_t& i, std::int32_t& j,
                        std::int32_t& k) const {
    i = static_cast<std::int32_t>(std::floor(p.x / cell_));
    j = static_cast<std::int32_t>(std::floor(p.y / cell_));
    k = static_cast<std::int32_t>(std::floor(p.z / cell_));
}

bool PointGrid::has_within(const Vec3& q, double radius) const {
    const double r2 = radius * radius;
    std::int32_t qi, qj, qk;
    cell_of(q, qi, qj, qk);
    for (std::int32_t di = -1; di <= 1; ++di) {
        for (std::int32_t dj = -1; dj <= 1; ++dj) {
            for (std::int32_t dk = -1; dk <= 1; ++dk) {
                const std::uint64_t key = cell_key(qi + di, qj + dj, qk + dk);
                const auto it = std::lower_bound(cell_keys_.begin(), cell_keys_.end(), key);
                if (it == cell_keys_.end() || *it != key) continue;
                const std::size_t c = static_cast<std::size_t>(it - cell_keys_.begin());
                for (std::uint32_t s = cell_start_[c]; s < cell_start_[c + 1]; ++s) {
                    if (squared_distance(points_[order_[s]], q) < r2) return true;
                }
            }
        }
    }
    return false;
}

double PointGrid::nearest_distance(const Vec3& q) const {
    std::int32_t qi, qj, qk;
    cell_of(q, qi, qj, qk);
    double best2 = std::numeric_limits<double>::infinity();

    auto scan_cell = [&](std::int32_t i, std::int32_t j, std::int32_t k) {
        const std::uint64_t key = cell_key(i, j, k);
        const auto it = std::lower_bound(cell_keys_.begin(), cell_keys_.end(), key);
        if (it == cell_keys_.end() || *it != key) return;
        const std::size_t c = static_cast<std::size_t>(it - cell_keys_.begin());
        for (std::uint32_t s = cell_start_[c]; s < cell_start_[c + 1]; ++s)
            best2 = std::min(best2, squared_distance(points_[order_[s]], q));
    };

    // Expanding Chebyshev shells. Any point in a shell-k cell is at least
    // (k-1)*cell away, so once best <= (k-1)*cell the search is complete.
    constexpr int kMaxShell = 64;
    for (int shell = 0; shell <= kMaxShell; ++shell) {
        if (shell > 0) {
            const double certified = (shell - 1) * cell_;
            if (best2 <= certified * certified) return std::sqrt(best2);
        }
        if (shell == 0) {
            scan_cell(qi, qj, qk);
            continue;
        }
        for (std::int32_t di = -shell; di <= shell; ++di) {
            for (std::int32_t dj = -shell; dj <= shell; ++dj) {
                if (std::max(std::abs(di), std::abs(dj)) == shell) {
                    for (std::int32_t dk = -shell; dk <= shell; ++dk)
                        scan_cell(qi + di, qj + dj, qk + dk);
                } else {
                    scan_cell(qi + di, qj + dj, qk - shell);
                    scan_cell(qi + di, qj + dj, qk + shell);
                }
            }
        }
    }
    if (std::isinf(best2)) {
        // Far-away query: the shell walk never met the cloud, fall back to a
        // full scan (exactness over speed for this rare case).
        for (const Vec3& p : points_) best2 = std::min(best2, squared_distance(p, q));
    }
    return std::sqrt(best2);
}

PointCloud trim_cloud(const PointCloud& cloud, const RegionOfInterest& roi) {
    if (roi.is_none()) return cloud;
    PointCloud out;
    out.reserve(cloud.size() / 4);
    for (const Vec3& p : cloud) {
        if (roi.contains(p)) out.push_back(p);
    }
    return out;
}

double chamfer_distance(const PointCloud& r, const PointCloud& t) {
    if (r.empty() || t.empty()) throw EmptyCloudError("chamfer distance needs nonempty clouds");
    // Cell size follows cloud scale to keep shell search short.
    auto mean_nn = [](const PointCloud& from, const PointCloud& to) {
        double extent = 0.0;
        Vec3 lo = to.front(), hi = to.front();
        for (const Vec3& p : to) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        }
        extent = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z, 1e-9});
        const double cell =
            std::max(1e-9, extent / std::max(4.0, std::cbrt(static_cast<double>(to.size()))));
        const PointGrid grid(to, cell);
        double sum = 0.0;
        for (const Vec3& p : from) sum += grid.nearest_distance(p);
        return sum / static_cast<double>(from.size());
    };
    return mean_nn(r, t) + mean_nn(t, r);
}

PrecisionRecall f1_score(const PointCloud& r, const PointCloud& t, double rho) {
    if (r.empty() || t.empty()) throw EmptyCloudError("f1 score needs nonempty clouds");
    if (rho <= 0.0) throw InvalidSpecError("distance threshold must be positive");

    const PointGrid grid_t(t, rho);
    std::int64_t matched_r = 0;
    for (const Vec3& p : r) {
        if (grid_t.has_within(p, rho)) ++matched_r;
    }
    const PointGrid grid_r(r, rho);
    std::int64_t matched_t = 0;
    for (const Vec3& p : t) {
        if (grid_r.has_within(p, rho)) ++matched_t;
    }

    PrecisionRecall out;
    out.precision = static_cast<double>(matched_r) / static_cast<double>(r.size());
    out.recall = static_cast<double>(matched_t) / static_cast<double>(t.size());
    out.f1 = (out.precision + out.recall) > 0.0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

std::optional<int> views_to_threshold(const TrialRecord& record, double tau) {
    for (std::size_t i = 0; i < record.views.size(); ++i) {
        if (record.views[i].f1 >= tau) return static_cast<int>(i) + 1;
    }
    return std::nullopt;
}

}  // namespace plantnbv
