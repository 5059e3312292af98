#include "lotkit/features.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "lotkit/csv.hpp"
#include "lotkit/errors.hpp"

namespace lotkit::features {

namespace {

using PointRows = std::vector<std::pair<std::string, geo::GeoPoint>>;

template <class Layer>
PointRows to_point_rows(const Layer& rows) {
    PointRows out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.emplace_back(r.id, r.location);
    return out;
}

}  // namespace

Workspace::Workspace(const ingest::CityLayers& city) : city_(&city) {
    libraries_ = geo::PointIndex(to_point_rows(city.libraries));
    parks_ = geo::PointIndex(to_point_rows(city.parks));
    schools_ = geo::PointIndex(to_point_rows(city.schools));
    transit_ = geo::PointIndex(to_point_rows(city.transit));
    crime_ = geo::PointIndex(to_point_rows(city.crime));
    lots_ = geo::PointIndex(to_point_rows(city.lots));

    earlier_year_ = std::numeric_limits<int>::max();
    later_year_ = std::numeric_limits<int>::min();
    for (const auto& a : city.assessments) {
        earlier_year_ = std::min(earlier_year_, a.year);
        later_year_ = std::max(later_year_, a.year);
    }
    PointRows earlier, later;
    for (const auto& a : city.assessments) {
        if (a.year == earlier_year_) {
            earlier.emplace_back(a.id, a.location);
            earlier_values_.push_back(a.value);
        } else {
            later.emplace_back(a.id, a.location);
            later_values_.push_back(a.value);
        }
    }
    earlier_idx_ = geo::PointIndex(std::move(earlier));
    later_idx_ = geo::PointIndex(std::move(later));
}

const geo::PointIndex& Workspace::assessments(int year) const {
    return year == earlier_year_ ? earlier_idx_ : later_idx_;
}

double Workspace::assessment_value(int year, std::size_t pos) const {
    return year == earlier_year_ ? earlier_values_[pos] : later_values_[pos];
}

std::array<double, 4> infrastructure_distances(const geo::GeoPoint& lot, const Workspace& ws) {
    return {ws.libraries().nearest_distance(lot), ws.parks().nearest_distance(lot),
            ws.schools().nearest_distance(lot), ws.transit().nearest_distance(lot)};
}

namespace {

// Mean assessed value within the radius; false when no property qualifies.
bool radius_mean(const geo::PointIndex& idx, const Workspace& ws, int year,
                 const geo::GeoPoint& lot, double radius_m, double* mean) {
    const auto hits = idx.within_radius(lot, radius_m);
    if (hits.empty()) return false;
    double sum = 0.0;
    for (std::size_t pos : hits) sum += ws.assessment_value(year, pos);
    *mean = sum / static_cast<double>(hits.size());
    return true;
}

}  // namespace

PriceDiffResult price_diff(const geo::GeoPoint& lot, const Workspace& ws, double radius_m) {
    double earlier_mean = 0.0, later_mean = 0.0;
    const bool has_earlier =
        radius_mean(ws.assessments(ws.earlier_year()), ws, ws.earlier_year(), lot, radius_m,
                    &earlier_mean);
    const bool has_later = radius_mean(ws.assessments(ws.later_year()), ws, ws.later_year(), lot,
                                       radius_m, &later_mean);
    if (!has_earlier || !has_later) return {0.0, true};
    return {later_mean - earlier_mean, false};
}

int vacant_density(const std::string& lot_id, const geo::GeoPoint& lot, const Workspace& ws,
                   double radius_m) {
    return ws.lots().count_within_radius(lot, radius_m, lot_id);
}

int crime_density(const geo::GeoPoint& lot, const Workspace& ws, double radius_m) {
    return ws.crime().count_within_radius(lot, radius_m);
}

ZoneAssignment assign_zone(const geo::GeoPoint& lot, const ingest::ZoningLayer& zoning) {
    for (const auto& d : zoning.districts) {
        if (geo::point_in_polygon(d.polygon, lot)) return {d.category, false};
    }
    // Fallback: district with the closest exterior vertex; ties keep the
    // earlier district in file order.
    double best = std::numeric_limits<double>::infinity();
    ZoneCategory category = ZoneCategory::Residential;
    for (const auto& d : zoning.districts) {
        for (const auto& v : d.polygon.exterior) {
            const double dist = geo::haversine_distance(lot, v);
            if (dist < best) {
                best = dist;
                category = d.category;
            }
        }
    }
    return {category, true};
}

ModelingDataset build_dataset(const ingest::CityLayers& city, double radius_m) {
    Workspace ws(city);

    ModelingDataset ds;
    ds.city = city.name;
    ds.radius_m = radius_m;
    ds.rows.reserve(city.lots.size());
    for (const auto& lot : city.lots) {
        LabeledLot row{lot.id, lot.location, FeatureVector{}, lot.status, lot.conversion};
        const auto dists = infrastructure_distances(lot.location, ws);
        row.features.lib_dist = dists[0];
        row.features.park_dist = dists[1];
        row.features.school_dist = dists[2];
        row.features.transit_dist = dists[3];
        const auto pd = price_diff(lot.location, ws, radius_m);
        row.features.price_diff = pd.value;
        row.features.price_imputed = pd.imputed;
        row.features.vacant_density = vacant_density(lot.id, lot.location, ws, radius_m);
        row.features.crime_density = crime_density(lot.location, ws, radius_m);
        const auto zone = assign_zone(lot.location, city.zoning);
        row.features.zone = zone.category;
        row.features.zone_fallback = zone.fallback;
        ds.rows.push_back(std::move(row));
    }
    std::sort(ds.rows.begin(), ds.rows.end(),
              [](const LabeledLot& a, const LabeledLot& b) { return a.id < b.id; });
    return ds;
}

namespace {

bool dataset_has_conversions(const ModelingDataset& ds) {
    return std::any_of(ds.rows.begin(), ds.rows.end(),
                       [](const LabeledLot& r) { return r.conversion.has_value(); });
}

}  // namespace

void write_features_csv(const ModelingDataset& ds, const std::string& path) {
    const bool has_conversion = dataset_has_conversions(ds);
    csv::Writer w(path);
    std::vector<std::string> header = {"id",          "lat",        "lon",
                                       "libDist",     "parkDist",   "schoolDist",
                                       "transitDist", "priceDiff",  "vacantDensity",
                                       "crimeDensity", "zone",      "status"};
    if (has_conversion) header.push_back("conversion");
    header.push_back("price_flag");
    header.push_back("zone_flag");
    w.write_row(header);

    for (const auto& r : ds.rows) {
        const auto& ft = r.features;
        std::vector<std::string> f = {r.id,
                                      csv::format_double(r.location.lat),
                                      csv::format_double(r.location.lon),
                                      csv::format_double(ft.lib_dist),
                                      csv::format_double(ft.park_dist),
                                      csv::format_double(ft.school_dist),
                                      csv::format_double(ft.transit_dist),
                                      csv::format_double(ft.price_diff),
                                      std::to_string(ft.vacant_density),
                                      std::to_string(ft.crime_density),
                                      to_string(ft.zone),
                                      to_string(r.status)};
        if (has_conversion) f.push_back(r.conversion ? to_string(*r.conversion) : "");
        f.push_back(ft.price_imputed ? "1" : "0");
        f.push_back(ft.zone_fallback ? "1" : "0");
        w.write_row(f);
    }
}

ModelingDataset read_features_csv(const std::string& path) {
    csv::Reader reader(path);
    const std::vector<std::string> base = {"id",          "lat",        "lon",
                                           "libDist",     "parkDist",   "schoolDist",
                                           "transitDist", "priceDiff",  "vacantDensity",
                                           "crimeDensity", "zone",      "status"};
    std::vector<std::string> without = base, with = base;
    without.push_back("price_flag");
    without.push_back("zone_flag");
    with.push_back("conversion");
    with.push_back("price_flag");
    with.push_back("zone_flag");

    bool has_conversion = false;
    if (reader.header() == with) {
        has_conversion = true;
    } else if (reader.header() != without) {
        throw SchemaError("'" + path + "': not a features CSV (unexpected header)");
    }

    ModelingDataset ds;
    ds.city = "";
    ds.radius_m = 0.0;  // not recorded in the file
    std::vector<std::string> f;
    while (reader.next(f)) {
        const std::size_t line = reader.line();
        const std::size_t expected = has_conversion ? 15 : 14;
        if (f.size() != expected) {
            throw ParseError("line " + std::to_string(line) + ": expected " +
                             std::to_string(expected) + " fields, got " + std::to_string(f.size()));
        }
        LabeledLot row{f[0],
                       geo::GeoPoint(csv::parse_double(f[1], "lat", line),
                                     csv::parse_double(f[2], "lon", line)),
                       FeatureVector{}, Status::Available, std::nullopt};
        auto& ft = row.features;
        ft.lib_dist = csv::parse_double(f[3], "libDist", line);
        ft.park_dist = csv::parse_double(f[4], "parkDist", line);
        ft.school_dist = csv::parse_double(f[5], "schoolDist", line);
        ft.transit_dist = csv::parse_double(f[6], "transitDist", line);
        ft.price_diff = csv::parse_double(f[7], "priceDiff", line);
        ft.vacant_density = static_cast<int>(csv::parse_long(f[8], "vacantDensity", line));
        ft.crime_density = static_cast<int>(csv::parse_long(f[9], "crimeDensity", line));
        try {
            ft.zone = zone_from_string(f[10]);
            row.status = status_from_string(f[11]);
            if (has_conversion && !f[12].empty()) row.conversion = conversion_from_string(f[12]);
        } catch (const Error& e) {
            throw ParseError("line " + std::to_string(line) + ": " + e.what());
        }
        const std::size_t flag0 = has_conversion ? 13 : 12;
        ft.price_imputed = f[flag0] == "1";
        ft.zone_fallback = f[flag0 + 1] == "1";
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

void write_features_geojson(const ModelingDataset& ds, const std::string& path) {
    using json = nlohmann::ordered_json;
    const bool has_conversion = dataset_has_conversions(ds);
    json features = json::array();
    for (const auto& r : ds.rows) {
        const auto& ft = r.features;
        json props = {{"id", r.id},
                      {"libDist", ft.lib_dist},
                      {"parkDist", ft.park_dist},
                      {"schoolDist", ft.school_dist},
                      {"transitDist", ft.transit_dist},
                      {"priceDiff", ft.price_diff},
                      {"vacantDensity", ft.vacant_density},
                      {"crimeDensity", ft.crime_density},
                      {"zone", to_string(ft.zone)},
                      {"status", to_string(r.status)}};
        if (has_conversion) props["conversion"] = r.conversion ? to_string(*r.conversion) : "";
        props["price_flag"] = ft.price_imputed ? 1 : 0;
        props["zone_flag"] = ft.zone_fallback ? 1 : 0;
        features.push_back({{"type", "Feature"},
                            {"geometry",
                             {{"type", "Point"}, {"coordinates", {r.location.lon, r.location.lat}}}},
                            {"properties", props}});
    }
    json doc = {{"type", "FeatureCollection"}, {"features", features}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << doc.dump(2) << '\n';
}

}  // namespace lotkit::features
