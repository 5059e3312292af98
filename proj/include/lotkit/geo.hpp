#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace lotkit::geo {

// IUGG mean Earth radius.
inline constexpr double kEarthRadiusM = 6371008.8;

// Quarter mile, with 1 mile = 1609.344 m exactly. Shared by every module
// that takes a neighborhood radius.
inline constexpr double kQuarterMileM = 402.336;

// WGS84-style coordinate pair in degrees. Construction validates range and
// finiteness, so downstream code never re-checks.
struct GeoPoint {
    double lat;
    double lon;

    GeoPoint(double lat_deg, double lon_deg);

    bool operator==(const GeoPoint& o) const { return lat == o.lat && lon == o.lon; }
};

// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
// Symmetric bit-for-bit: both argument orders evaluate the same expression.
double haversine_distance(const GeoPoint& a, const GeoPoint& b);

// Polygon with optional holes. Rings are implicitly closed (the first vertex
// is reused as the last); the exterior is assumed non-self-intersecting.
struct GeoPolygon {
    std::vector<GeoPoint> exterior;
    std::vector<std::vector<GeoPoint>> holes;

    explicit GeoPolygon(std::vector<GeoPoint> exterior_ring,
                        std::vector<std::vector<GeoPoint>> hole_rings = {});
};

// Planar even-odd containment in the lon/lat plane. Points on any ring
// boundary count as inside; holes subtract.
bool point_in_polygon(const GeoPolygon& poly, const GeoPoint& q);

// Immutable point set with nearest-distance and radius-count queries.
//
// Internally a 3-d k-d tree over unit-sphere coordinates. The tree is used
// only to prune with conservative bounds; every comparison that decides a
// result goes through haversine_distance, so query results are exactly those
// of an exhaustive scan (a tested property).
class PointIndex {
public:
    PointIndex() = default;
    explicit PointIndex(std::vector<std::pair<std::string, GeoPoint>> points);

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    // Min over all indexed points of haversine_distance. Throws EmptyLayer
    // on an empty index.
    double nearest_distance(const GeoPoint& q) const;

    // Number of indexed points with distance <= radius_m (boundary
    // inclusive), omitting points whose id equals exclude_id when given.
    int count_within_radius(const GeoPoint& q, double radius_m) const;
    int count_within_radius(const GeoPoint& q, double radius_m,
                            const std::string& exclude_id) const;

    // Positions (in construction order, ascending) of points within
    // radius_m. Used where callers aggregate per-point payloads.
    std::vector<std::size_t> within_radius(const GeoPoint& q, double radius_m) const;

    const std::pair<std::string, GeoPoint>& at(std::size_t pos) const { return points_[pos]; }

private:
    struct Node {
        std::size_t begin = 0, end = 0;  // range into order_
        double min_xyz[3] = {0, 0, 0};
        double max_xyz[3] = {0, 0, 0};
        int left = -1, right = -1;       // children; -1 for leaves
    };

    void build(std::size_t begin, std::size_t end, int node);
    double lower_bound_m(const Node& n, const double* q_xyz) const;

    template <class Visit>
    void visit_within(const GeoPoint& q, double radius_m, Visit&& visit) const;

    std::vector<std::pair<std::string, GeoPoint>> points_;
    std::vector<std::size_t> order_;     // permutation into points_
    std::vector<double> xyz_;            // 3 per point, aligned with points_
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace lotkit::geo
