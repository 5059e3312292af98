#include "lotkit/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lotkit/errors.hpp"

namespace lotkit::geo {

namespace {

constexpr double kDegToRad = 0.017453292519943295;  // pi / 180

double to_rad(double deg) { return deg * kDegToRad; }

void to_unit_xyz(const GeoPoint& p, double* out) {
    const double phi = to_rad(p.lat);
    const double lam = to_rad(p.lon);
    out[0] = std::cos(phi) * std::cos(lam);
    out[1] = std::cos(phi) * std::sin(lam);
    out[2] = std::sin(phi);
}

// Great-circle meters from a chord length on the unit sphere, shrunk a hair
// so it never overestimates under floating point. Used only for pruning.
double chord_to_meters_lower(double chord) {
    if (chord <= 0.0) return 0.0;
    const double half = std::min(chord * 0.5, 1.0);
    double m = 2.0 * kEarthRadiusM * std::asin(half);
    return m * (1.0 - 1e-12) - 1e-9;
}

}  // namespace

GeoPoint::GeoPoint(double lat_deg, double lon_deg) : lat(lat_deg), lon(lon_deg) {
    if (!std::isfinite(lat) || lat < -90.0 || lat > 90.0) {
        throw RangeError("latitude out of range [-90, 90]: " + std::to_string(lat_deg));
    }
    if (!std::isfinite(lon) || lon < -180.0 || lon > 180.0) {
        throw RangeError("longitude out of range [-180, 180]: " + std::to_string(lon_deg));
    }
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
    const double phi1 = to_rad(a.lat);
    const double phi2 = to_rad(b.lat);
    // fabs makes the evaluated expression identical under argument swap.
    const double sp = std::sin(std::fabs(phi2 - phi1) * 0.5);
    const double sl = std::sin(std::fabs(to_rad(b.lon) - to_rad(a.lon)) * 0.5);
    const double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

GeoPolygon::GeoPolygon(std::vector<GeoPoint> exterior_ring,
                       std::vector<std::vector<GeoPoint>> hole_rings)
    : exterior(std::move(exterior_ring)), holes(std::move(hole_rings)) {
    auto drop_explicit_close = [](std::vector<GeoPoint>& ring) {
        if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
    };
    drop_explicit_close(exterior);
    for (auto& h : holes) drop_explicit_close(h);

    std::vector<GeoPoint> distinct;
    for (const auto& v : exterior) {
        if (std::find(distinct.begin(), distinct.end(), v) == distinct.end()) distinct.push_back(v);
    }
    if (distinct.size() < 3) {
        throw RangeError("polygon exterior needs at least 3 distinct vertices");
    }
}

namespace {

bool on_ring_boundary(const std::vector<GeoPoint>& ring, const GeoPoint& q) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const GeoPoint& a = ring[i];
        const GeoPoint& b = ring[(i + 1) % n];
        const double cross = (b.lon - a.lon) * (q.lat - a.lat) - (b.lat - a.lat) * (q.lon - a.lon);
        if (cross != 0.0) continue;
        if (q.lon >= std::min(a.lon, b.lon) && q.lon <= std::max(a.lon, b.lon) &&
            q.lat >= std::min(a.lat, b.lat) && q.lat <= std::max(a.lat, b.lat)) {
            return true;
        }
    }
    return false;
}

// Crossing-number parity of a horizontal ray from q toward +lon.
bool ray_parity(const std::vector<GeoPoint>& ring, const GeoPoint& q) {
    bool inside = false;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const GeoPoint& a = ring[i];
        const GeoPoint& b = ring[(i + 1) % n];
        if ((a.lat > q.lat) != (b.lat > q.lat)) {
            const double lon_at = a.lon + (q.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
            if (q.lon < lon_at) inside = !inside;
        }
    }
    return inside;
}

}  // namespace

bool point_in_polygon(const GeoPolygon& poly, const GeoPoint& q) {
    if (on_ring_boundary(poly.exterior, q)) return true;
    for (const auto& h : poly.holes) {
        if (on_ring_boundary(h, q)) return true;
    }
    bool inside = ray_parity(poly.exterior, q);
    for (const auto& h : poly.holes) {
        if (ray_parity(h, q)) inside = !inside;
    }
    return inside;
}

PointIndex::PointIndex(std::vector<std::pair<std::string, GeoPoint>> points)
    : points_(std::move(points)) {
    const std::size_t n = points_.size();
    if (n == 0) return;
    xyz_.resize(3 * n);
    order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        order_[i] = i;
        to_unit_xyz(points_[i].second, &xyz_[3 * i]);
    }
    nodes_.reserve(2 * n / 8 + 2);
    nodes_.emplace_back();
    root_ = 0;
    build(0, n, root_);
}

void PointIndex::build(std::size_t begin, std::size_t end, int node) {
    constexpr std::size_t kLeafSize = 8;
    Node& n0 = nodes_[node];
    n0.begin = begin;
    n0.end = end;
    for (int d = 0; d < 3; ++d) {
        n0.min_xyz[d] = std::numeric_limits<double>::infinity();
        n0.max_xyz[d] = -std::numeric_limits<double>::infinity();
    }
    for (std::size_t i = begin; i < end; ++i) {
        const double* p = &xyz_[3 * order_[i]];
        for (int d = 0; d < 3; ++d) {
            nodes_[node].min_xyz[d] = std::min(nodes_[node].min_xyz[d], p[d]);
            nodes_[node].max_xyz[d] = std::max(nodes_[node].max_xyz[d], p[d]);
        }
    }
    if (end - begin <= kLeafSize) return;

    int axis = 0;
    double widest = -1.0;
    for (int d = 0; d < 3; ++d) {
        const double w = nodes_[node].max_xyz[d] - nodes_[node].min_xyz[d];
        if (w > widest) {
            widest = w;
            axis = d;
        }
    }
    if (widest <= 0.0) return;  // all points coincide

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                         return xyz_[3 * a + axis] < xyz_[3 * b + axis];
                     });

    const int left = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const int right = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[node].left = left;
    nodes_[node].right = right;
    build(begin, mid, left);
    build(mid, end, right);
}

double PointIndex::lower_bound_m(const Node& n, const double* q_xyz) const {
    double d2 = 0.0;
    for (int d = 0; d < 3; ++d) {
        double gap = 0.0;
        if (q_xyz[d] < n.min_xyz[d]) {
            gap = n.min_xyz[d] - q_xyz[d];
        } else if (q_xyz[d] > n.max_xyz[d]) {
            gap = q_xyz[d] - n.max_xyz[d];
        }
        d2 += gap * gap;
    }
    return chord_to_meters_lower(std::sqrt(d2));
}

double PointIndex::nearest_distance(const GeoPoint& q) const {
    if (points_.empty()) throw EmptyLayer("nearest_distance on an empty point index");
    double q_xyz[3];
    to_unit_xyz(q, q_xyz);
    double best = std::numeric_limits<double>::infinity();

    // Iterative DFS, nearer child first.
    std::vector<int> stack{root_};
    while (!stack.empty()) {
        const int ni = stack.back();
        stack.pop_back();
        const Node& n = nodes_[ni];
        if (lower_bound_m(n, q_xyz) > best) continue;
        if (n.left < 0) {
            for (std::size_t i = n.begin; i < n.end; ++i) {
                const double d = haversine_distance(q, points_[order_[i]].second);
                best = std::min(best, d);
            }
            continue;
        }
        const double bl = lower_bound_m(nodes_[n.left], q_xyz);
        const double br = lower_bound_m(nodes_[n.right], q_xyz);
        if (bl <= br) {
            stack.push_back(n.right);
            stack.push_back(n.left);
        } else {
            stack.push_back(n.left);
            stack.push_back(n.right);
        }
    }
    return best;
}

template <class Visit>
void PointIndex::visit_within(const GeoPoint& q, double radius_m, Visit&& visit) const {
    if (points_.empty()) return;
    double q_xyz[3];
    to_unit_xyz(q, q_xyz);
    std::vector<int> stack{root_};
    while (!stack.empty()) {
        const int ni = stack.back();
        stack.pop_back();
        const Node& n = nodes_[ni];
        if (lower_bound_m(n, q_xyz) > radius_m) continue;
        if (n.left < 0) {
            for (std::size_t i = n.begin; i < n.end; ++i) {
                const std::size_t pos = order_[i];
                if (haversine_distance(q, points_[pos].second) <= radius_m) visit(pos);
            }
            continue;
        }
        stack.push_back(n.left);
        stack.push_back(n.right);
    }
}

int PointIndex::count_within_radius(const GeoPoint& q, double radius_m) const {
    int count = 0;
    visit_within(q, radius_m, [&](std::size_t) { ++count; });
    return count;
}

int PointIndex::count_within_radius(const GeoPoint& q, double radius_m,
                                    const std::string& exclude_id) const {
    int count = 0;
    visit_within(q, radius_m, [&](std::size_t pos) {
        if (points_[pos].first != exclude_id) ++count;
    });
    return count;
}

std::vector<std::size_t> PointIndex::within_radius(const GeoPoint& q, double radius_m) const {
    std::vector<std::size_t> out;
    visit_within(q, radius_m, [&](std::size_t pos) { out.push_back(pos); });
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace lotkit::geo
