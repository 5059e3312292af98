#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <limits>

#include "lotkit/errors.hpp"
#include "lotkit/features.hpp"
#include "lotkit/rng.hpp"
#include "testutil.hpp"

using namespace lotkit;
using namespace lotkit::features;
using lotkit::ingest::CityLayers;
using testutil::TempDir;

namespace {

ingest::ZoningLayer one_district_zoning(ZoneCategory cat = ZoneCategory::Residential) {
    return {{ingest::ZoningDistrict{
        geo::GeoPolygon({{39.0, -77.0}, {39.0, -76.0}, {40.0, -76.0}, {40.0, -77.0}}), cat}}};
}

// Hand-assembled city builder for focused cases.
struct CityBuilder {
    CityLayers city;

    CityBuilder() {
        city.name = "case";
        city.zoning = one_district_zoning();
        infra(InfraKind::Library, 39.9, -76.1);
        infra(InfraKind::Park, 39.9, -76.1);
        infra(InfraKind::School, 39.9, -76.1);
        infra(InfraKind::TransitStop, 39.9, -76.1);
        assessment(2014, 39.9, -76.1, 1.0);
        assessment(2015, 39.9, -76.1, 1.0);
    }

    CityBuilder& lot(const std::string& id, double lat, double lon,
                     Status status = Status::Available) {
        city.lots.push_back({id, geo::GeoPoint(lat, lon), status, std::nullopt});
        return *this;
    }
    CityBuilder& infra(InfraKind kind, double lat, double lon) {
        auto& layer = kind == InfraKind::Library ? city.libraries
                      : kind == InfraKind::Park  ? city.parks
                      : kind == InfraKind::School ? city.schools
                                                  : city.transit;
        layer.push_back({"i" + std::to_string(layer.size()), geo::GeoPoint(lat, lon), kind});
        return *this;
    }
    CityBuilder& crime(double lat, double lon) {
        city.crime.push_back({"c" + std::to_string(city.crime.size()), geo::GeoPoint(lat, lon),
                              ingest::Date{2015, 6, 15}});
        return *this;
    }
    CityBuilder& assessment(int year, double lat, double lon, double value) {
        city.assessments.push_back({"a" + std::to_string(city.assessments.size()),
                                    geo::GeoPoint(lat, lon), year, value});
        return *this;
    }
};

constexpr double kDegPerMeter = 1.0 / 111195.08023353291;  // at the equator, and ~lon at lat 0

// Random city in a Baltimore-sized box, used for oracle equivalence.
CityLayers random_city(int n_lots, Rng& rng) {
    CityBuilder b;
    b.city.lots.clear();
    b.city.libraries.clear();
    b.city.parks.clear();
    b.city.schools.clear();
    b.city.transit.clear();
    b.city.assessments.clear();
    auto lat = [&] { return rng.uniform(39.2, 39.37); };
    auto lon = [&] { return rng.uniform(-76.71, -76.52); };
    for (int i = 0; i < n_lots; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "lot_%04d", i);
        b.lot(id, lat(), lon(), rng.unit() < 0.5 ? Status::Adopt : Status::Available);
    }
    for (int i = 0; i < 7; ++i) b.infra(InfraKind::Library, lat(), lon());
    for (int i = 0; i < 9; ++i) b.infra(InfraKind::Park, lat(), lon());
    for (int i = 0; i < 8; ++i) b.infra(InfraKind::School, lat(), lon());
    for (int i = 0; i < 15; ++i) b.infra(InfraKind::TransitStop, lat(), lon());
    for (int i = 0; i < 200; ++i) b.crime(lat(), lon());
    for (int i = 0; i < 120; ++i) b.assessment(2014, lat(), lon(), rng.uniform(5e4, 5e5));
    for (int i = 0; i < 130; ++i) b.assessment(2015, lat(), lon(), rng.uniform(5e4, 5e5));
    // Adopt rows need no conversion here; the binary pipeline allows that.
    return b.city;
}

}  // namespace

TEST_CASE("infrastructure distances reduce to nearest-point queries") {
    CityBuilder b;
    b.lot("l1", 39.5, -76.5);

    SUBCASE("library at the lot itself gives zero") {
        b.infra(InfraKind::Library, 39.5, -76.5);
        Workspace ws(b.city);
        CHECK(infrastructure_distances({39.5, -76.5}, ws)[0] == 0.0);
    }
    SUBCASE("nearest of two libraries wins") {
        const geo::GeoPoint lot(39.5, -76.5);
        const geo::GeoPoint near(39.5, -76.5 + 300 * kDegPerMeter);
        const geo::GeoPoint far(39.5, -76.5 + 900 * kDegPerMeter);
        b.infra(InfraKind::Library, near.lat, near.lon);
        b.infra(InfraKind::Library, far.lat, far.lon);
        Workspace ws(b.city);
        CHECK(infrastructure_distances(lot, ws)[0] ==
              std::min(geo::haversine_distance(lot, near), geo::haversine_distance(lot, far)));
    }
    SUBCASE("four layers with one point each equal four haversine calls") {
        CityBuilder c;
        c.lot("l1", 39.5, -76.5);
        c.city.libraries.clear();
        c.city.parks.clear();
        c.city.schools.clear();
        c.city.transit.clear();
        c.infra(InfraKind::Library, 39.51, -76.5);
        c.infra(InfraKind::Park, 39.52, -76.5);
        c.infra(InfraKind::School, 39.5, -76.52);
        c.infra(InfraKind::TransitStop, 39.49, -76.49);
        Workspace ws(c.city);
        const geo::GeoPoint lot(39.5, -76.5);
        const auto d = infrastructure_distances(lot, ws);
        CHECK(d[0] == geo::haversine_distance(lot, {39.51, -76.5}));
        CHECK(d[1] == geo::haversine_distance(lot, {39.52, -76.5}));
        CHECK(d[2] == geo::haversine_distance(lot, {39.5, -76.52}));
        CHECK(d[3] == geo::haversine_distance(lot, {39.49, -76.49}));
    }
}

TEST_CASE("price_diff is later mean minus earlier mean within the radius") {
    CityBuilder b;
    b.lot("l1", 39.5, -76.5);
    b.city.assessments.clear();
    b.assessment(2014, 39.5, -76.5001, 100000.0);
    b.assessment(2014, 39.5, -76.4999, 200000.0);
    b.assessment(2015, 39.5001, -76.5, 110000.0);
    b.assessment(2015, 39.4999, -76.5, 230000.0);
    Workspace ws(b.city);

    const auto pd = price_diff({39.5, -76.5}, ws, geo::kQuarterMileM);
    CHECK(pd.value == 20000.0);  // 170000 - 150000
    CHECK_FALSE(pd.imputed);
}

TEST_CASE("price_diff is zero for identical value sets") {
    CityBuilder b;
    b.lot("l1", 39.5, -76.5);
    b.city.assessments.clear();
    for (double v : {120000.0, 250000.0, 80000.0}) {
        b.assessment(2014, 39.5, -76.5, v);
        b.assessment(2015, 39.5, -76.5, v);
    }
    Workspace ws(b.city);
    CHECK(price_diff({39.5, -76.5}, ws, geo::kQuarterMileM).value == 0.0);
}

TEST_CASE("price_diff imputes zero and flags when a year has an empty radius") {
    CityBuilder b;  // builder's assessments sit ~100 km away at (39.9, -76.1)
    b.lot("l1", 39.2, -76.9);
    Workspace ws(b.city);
    const auto pd = price_diff({39.2, -76.9}, ws, geo::kQuarterMileM);
    CHECK(pd.value == 0.0);
    CHECK(pd.imputed);
}

TEST_CASE("vacant_density counts other lots only") {
    SUBCASE("isolated lot") {
        CityBuilder b;
        b.lot("l1", 39.5, -76.5);
        Workspace ws(b.city);
        CHECK(vacant_density("l1", {39.5, -76.5}, ws, geo::kQuarterMileM) == 0);
    }
    SUBCASE("100 m neighbor counts, 450 m neighbor does not") {
        CityBuilder b;
        b.lot("l1", 39.5, -76.5);
        b.lot("l2", 39.5 + 100 * kDegPerMeter, -76.5);
        b.lot("l3", 39.5 + 450 * kDegPerMeter, -76.5);
        Workspace ws(b.city);
        CHECK(vacant_density("l1", {39.5, -76.5}, ws, geo::kQuarterMileM) == 1);
    }
    SUBCASE("clique of co-located lots sees k-1 neighbors") {
        CityBuilder b;
        const int k = 5;
        for (int i = 0; i < k; ++i) b.lot("l" + std::to_string(i), 39.5, -76.5);
        Workspace ws(b.city);
        for (int i = 0; i < k; ++i) {
            CHECK(vacant_density("l" + std::to_string(i), {39.5, -76.5}, ws, geo::kQuarterMileM) ==
                  k - 1);
        }
    }
}

TEST_CASE("crime_density counts incidents, boundary inclusive") {
    CityBuilder b;
    b.lot("l1", 39.5, -76.5);
    SUBCASE("no incidents") {
        Workspace ws(b.city);
        CHECK(crime_density({39.5, -76.5}, ws, geo::kQuarterMileM) == 0);
    }
    SUBCASE("50 m and exact-boundary incidents count, 500 m does not") {
        const geo::GeoPoint lot(39.5, -76.5);
        const geo::GeoPoint boundary(39.5 + 402.336 * kDegPerMeter, -76.5);
        b.crime(39.5 + 50 * kDegPerMeter, -76.5);
        b.crime(boundary.lat, boundary.lon);
        b.crime(39.5 + 500 * kDegPerMeter, -76.5);
        Workspace ws(b.city);
        const double r = geo::haversine_distance(lot, boundary);
        REQUIRE(r > 400.0);
        REQUIRE(r < 405.0);
        CHECK(crime_density(lot, ws, r) == 2);
    }
}

TEST_CASE("assign_zone uses containment, file order, then nearest vertex") {
    SUBCASE("inside a single residential district") {
        auto zoning = one_district_zoning();
        const auto z = assign_zone({39.5, -76.5}, zoning);
        CHECK(z.category == ZoneCategory::Residential);
        CHECK_FALSE(z.fallback);
    }
    SUBCASE("overlapping districts resolve to the first in file order") {
        ingest::ZoningLayer zoning;
        zoning.districts.push_back(
            {geo::GeoPolygon({{39.0, -77.0}, {39.0, -76.0}, {40.0, -76.0}, {40.0, -77.0}}),
             ZoneCategory::Business});
        zoning.districts.push_back(
            {geo::GeoPolygon({{39.0, -77.0}, {39.0, -76.0}, {40.0, -76.0}, {40.0, -77.0}}),
             ZoneCategory::Industrial});
        CHECK(assign_zone({39.5, -76.5}, zoning).category == ZoneCategory::Business);
    }
    SUBCASE("outside all districts falls back to nearest vertex with a flag") {
        ingest::ZoningLayer zoning;
        zoning.districts.push_back(
            {geo::GeoPolygon({{10.0, 10.0}, {10.0, 11.0}, {11.0, 11.0}, {11.0, 10.0}}),
             ZoneCategory::Business});
        zoning.districts.push_back(
            {geo::GeoPolygon({{20.0, 20.0}, {20.0, 21.0}, {21.0, 21.0}, {21.0, 20.0}}),
             ZoneCategory::SpecialPurpose});
        const auto z = assign_zone({12.0, 12.0}, zoning);
        CHECK(z.category == ZoneCategory::Business);
        CHECK(z.fallback);
    }
}

TEST_CASE("build_dataset computes every determinant, matching brute force") {
    Rng rng(2024);
    CityLayers city = random_city(50, rng);
    const double radius = geo::kQuarterMileM;
    ModelingDataset ds = build_dataset(city, radius);
    REQUIRE(ds.rows.size() == city.lots.size());

    // Rows sorted by id and in bijection with the input lots.
    for (std::size_t i = 1; i < ds.rows.size(); ++i) CHECK(ds.rows[i - 1].id < ds.rows[i].id);

    for (const auto& row : ds.rows) {
        // Independent brute-force recomputation of all eight determinants.
        auto nearest = [&](const auto& layer) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& p : layer) {
                best = std::min(best, geo::haversine_distance(row.location, p.location));
            }
            return best;
        };
        CHECK(std::fabs(row.features.lib_dist - nearest(city.libraries)) < 1e-6);
        CHECK(std::fabs(row.features.park_dist - nearest(city.parks)) < 1e-6);
        CHECK(std::fabs(row.features.school_dist - nearest(city.schools)) < 1e-6);
        CHECK(std::fabs(row.features.transit_dist - nearest(city.transit)) < 1e-6);

        int vac = 0;
        for (const auto& other : city.lots) {
            if (other.id == row.id) continue;
            if (geo::haversine_distance(row.location, other.location) <= radius) ++vac;
        }
        CHECK(row.features.vacant_density == vac);

        int cri = 0;
        for (const auto& c : city.crime) {
            if (geo::haversine_distance(row.location, c.location) <= radius) ++cri;
        }
        CHECK(row.features.crime_density == cri);

        double sum14 = 0.0, sum15 = 0.0;
        int n14 = 0, n15 = 0;
        for (const auto& a : city.assessments) {
            if (geo::haversine_distance(row.location, a.location) > radius) continue;
            if (a.year == 2014) {
                sum14 += a.value;
                ++n14;
            } else {
                sum15 += a.value;
                ++n15;
            }
        }
        if (n14 == 0 || n15 == 0) {
            CHECK(row.features.price_diff == 0.0);
            CHECK(row.features.price_imputed);
        } else {
            CHECK(std::fabs(row.features.price_diff - (sum15 / n15 - sum14 / n14)) < 1e-6);
            CHECK_FALSE(row.features.price_imputed);
        }

        ZoneCategory zone = ZoneCategory::Residential;
        bool found = false;
        for (const auto& d : city.zoning.districts) {
            if (geo::point_in_polygon(d.polygon, row.location)) {
                zone = d.category;
                found = true;
                break;
            }
        }
        REQUIRE(found);  // the zoning square covers the whole box
        CHECK(row.features.zone == zone);
        CHECK_FALSE(row.features.zone_fallback);
    }
}

TEST_CASE("build_dataset is deterministic") {
    Rng rng(3);
    CityLayers city = random_city(40, rng);
    ModelingDataset a = build_dataset(city);
    ModelingDataset b = build_dataset(city);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].features.lib_dist == b.rows[i].features.lib_dist);
        CHECK(a.rows[i].features.price_diff == b.rows[i].features.price_diff);
        CHECK(a.rows[i].features.vacant_density == b.rows[i].features.vacant_density);
        CHECK(a.rows[i].features.zone == b.rows[i].features.zone);
    }
}

TEST_CASE("translating the city changes distance features by under 0.1 percent") {
    Rng rng(4);
    CityLayers city = random_city(30, rng);
    CityLayers moved = city;
    const double dlat = 0.05, dlon = 0.05;
    auto shift = [&](geo::GeoPoint& p) { p = geo::GeoPoint(p.lat + dlat, p.lon + dlon); };
    for (auto& x : moved.lots) shift(x.location);
    for (auto& x : moved.libraries) shift(x.location);
    for (auto& x : moved.parks) shift(x.location);
    for (auto& x : moved.schools) shift(x.location);
    for (auto& x : moved.transit) shift(x.location);
    for (auto& x : moved.crime) shift(x.location);
    for (auto& x : moved.assessments) shift(x.location);
    for (auto& d : moved.zoning.districts) {
        std::vector<geo::GeoPoint> ring;
        for (auto v : d.polygon.exterior) {
            ring.emplace_back(v.lat + dlat, v.lon + dlon);
        }
        d.polygon = geo::GeoPolygon(ring);
    }

    ModelingDataset a = build_dataset(city);
    ModelingDataset b = build_dataset(moved);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const auto fa = a.rows[i].features, fb = b.rows[i].features;
        const double pairs_a[4] = {fa.lib_dist, fa.park_dist, fa.school_dist, fa.transit_dist};
        const double pairs_b[4] = {fb.lib_dist, fb.park_dist, fb.school_dist, fb.transit_dist};
        for (int k = 0; k < 4; ++k) {
            CHECK(std::fabs(pairs_b[k] - pairs_a[k]) < 0.001 * pairs_a[k] + 1e-9);
        }
    }
}

TEST_CASE("vacant density satisfies the handshake property") {
    Rng rng(5);
    CityLayers city = random_city(60, rng);
    ModelingDataset ds = build_dataset(city);
    long total = 0;
    for (const auto& r : ds.rows) total += r.features.vacant_density;

    long pairs = 0;
    for (std::size_t i = 0; i < city.lots.size(); ++i) {
        for (std::size_t j = i + 1; j < city.lots.size(); ++j) {
            if (geo::haversine_distance(city.lots[i].location, city.lots[j].location) <=
                geo::kQuarterMileM) {
                ++pairs;
            }
        }
    }
    CHECK(total == 2 * pairs);
}

TEST_CASE("features CSV round-trips and keeps the documented header") {
    Rng rng(6);
    CityLayers city = random_city(25, rng);
    city.lots[3].conversion = Conversion::Qcmos;
    city.lots[3].status = Status::Adopt;
    ModelingDataset ds = build_dataset(city);

    TempDir tmp;
    const auto path = tmp.file("features.csv");
    write_features_csv(ds, path);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "id,lat,lon,libDist,parkDist,schoolDist,transitDist,priceDiff,vacantDensity,"
          "crimeDensity,zone,status,conversion,price_flag,zone_flag");

    ModelingDataset back = read_features_csv(path);
    REQUIRE(back.rows.size() == ds.rows.size());
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        CHECK(back.rows[i].id == ds.rows[i].id);
        CHECK(back.rows[i].location == ds.rows[i].location);
        CHECK(back.rows[i].features.numerics() == ds.rows[i].features.numerics());
        CHECK(back.rows[i].features.zone == ds.rows[i].features.zone);
        CHECK(back.rows[i].status == ds.rows[i].status);
        CHECK(back.rows[i].conversion == ds.rows[i].conversion);
        CHECK(back.rows[i].features.price_imputed == ds.rows[i].features.price_imputed);
    }

    // Datasets without conversions omit the column.
    for (auto& r : ds.rows) r.conversion.reset();
    const auto path2 = tmp.file("binary.csv");
    write_features_csv(ds, path2);
    std::ifstream in2(path2);
    std::getline(in2, header);
    CHECK(header ==
          "id,lat,lon,libDist,parkDist,schoolDist,transitDist,priceDiff,vacantDensity,"
          "crimeDensity,zone,status,price_flag,zone_flag");
    CHECK(read_features_csv(path2).rows.size() == ds.rows.size());
}

TEST_CASE("GeoJSON export is a FeatureCollection with one point per lot") {
    Rng rng(7);
    CityLayers city = random_city(10, rng);
    ModelingDataset ds = build_dataset(city);
    TempDir tmp;
    const auto path = tmp.file("features.geojson");
    write_features_geojson(ds, path);

    std::ifstream in(path);
    nlohmann::json doc = nlohmann::json::parse(in);
    CHECK(doc["type"] == "FeatureCollection");
    REQUIRE(doc["features"].size() == ds.rows.size());
    CHECK(doc["features"][0]["geometry"]["type"] == "Point");
    CHECK(doc["features"][0]["properties"].contains("libDist"));
    CHECK(doc["features"][0]["properties"].contains("zone"));
}
