#include "lotkit/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "lotkit/csv.hpp"
#include "lotkit/errors.hpp"

namespace lotkit::ingest {

namespace {

using json = nlohmann::json;

void require_header(const csv::Reader& reader, const std::vector<std::string>& expected,
                    bool allow_extra_conversion = false) {
    const auto& h = reader.header();
    if (h == expected) return;
    if (allow_extra_conversion) {
        auto with = expected;
        with.push_back("conversion");
        if (h == with) return;
    }
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
    throw SchemaError("'" + reader.path() + "': unexpected header (want '" + want +
                      (allow_extra_conversion ? "[,conversion]" : "") + "')");
}

geo::GeoPoint parse_point(const std::string& lat, const std::string& lon, std::size_t line) {
    const double la = csv::parse_double(lat, "lat", line);
    const double lo = csv::parse_double(lon, "lon", line);
    try {
        return geo::GeoPoint(la, lo);
    } catch (const RangeError& e) {
        throw RangeError("line " + std::to_string(line) + ": " + e.what());
    }
}

void check_field_count(const std::vector<std::string>& fields, std::size_t expected,
                       std::size_t line) {
    if (fields.size() != expected) {
        throw ParseError("line " + std::to_string(line) + ": expected " +
                         std::to_string(expected) + " fields, got " +
                         std::to_string(fields.size()));
    }
}

class IdSet {
public:
    void insert(const std::string& id, std::size_t line) {
        if (!seen_.insert(id).second) {
            throw DuplicateId("line " + std::to_string(line) + ": duplicate id '" + id + "'");
        }
    }

private:
    std::unordered_set<std::string> seen_;
};

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static const int d[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return d[m - 1];
}

Date parse_date(const std::string& s, std::size_t line) {
    int y = 0, m = 0, d = 0;
    char extra = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &extra) != 3 || s.size() != 10) {
        throw ParseError("line " + std::to_string(line) + ": invalid date '" + s +
                         "' (expected YYYY-MM-DD)");
    }
    if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) {
        throw ParseError("line " + std::to_string(line) + ": invalid calendar date '" + s + "'");
    }
    return Date{y, m, d};
}

}  // namespace

std::vector<VacantLotRaw> load_lots(const std::string& path) {
    csv::Reader reader(path);
    require_header(reader, {"id", "lat", "lon", "status"}, /*allow_extra_conversion=*/true);
    const bool has_conversion = reader.header().size() == 5;

    std::vector<VacantLotRaw> out;
    IdSet ids;
    std::vector<std::string> f;
    while (reader.next(f)) {
        const std::size_t line = reader.line();
        check_field_count(f, has_conversion ? 5 : 4, line);
        ids.insert(f[0], line);
        VacantLotRaw lot{f[0], parse_point(f[1], f[2], line), Status::Available, std::nullopt};
        try {
            lot.status = status_from_string(f[3]);
            if (has_conversion && !f[4].empty()) lot.conversion = conversion_from_string(f[4]);
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(line) + ": " + e.what());
        }
        if (lot.conversion && lot.status != Status::Adopt) {
            throw ParseError("line " + std::to_string(line) +
                             ": conversion set on a lot whose status is not adopt");
        }
        out.push_back(std::move(lot));
    }
    return out;
}

std::vector<InfraPoint> load_infra(const std::string& path, InfraKind kind) {
    csv::Reader reader(path);
    require_header(reader, {"id", "lat", "lon"});
    std::vector<InfraPoint> out;
    IdSet ids;
    std::vector<std::string> f;
    while (reader.next(f)) {
        const std::size_t line = reader.line();
        check_field_count(f, 3, line);
        ids.insert(f[0], line);
        out.push_back(InfraPoint{f[0], parse_point(f[1], f[2], line), kind});
    }
    return out;
}

std::vector<CrimeIncident> load_crime(const std::string& path, int report_year) {
    csv::Reader reader(path);
    require_header(reader, {"id", "lat", "lon", "date"});
    std::vector<CrimeIncident> out;
    IdSet ids;
    std::vector<std::string> f;
    while (reader.next(f)) {
        const std::size_t line = reader.line();
        check_field_count(f, 4, line);
        ids.insert(f[0], line);
        const Date date = parse_date(f[3], line);
        if (date.year != report_year) {
            throw ParseError("line " + std::to_string(line) + ": incident date '" + f[3] +
                             "' outside report year " + std::to_string(report_year));
        }
        out.push_back(CrimeIncident{f[0], parse_point(f[1], f[2], line), date});
    }
    return out;
}

std::vector<PropertyAssessment> load_assessments(const std::string& path) {
    csv::Reader reader(path);
    require_header(reader, {"id", "lat", "lon", "year", "value"});
    std::vector<PropertyAssessment> out;
    IdSet ids;
    std::set<int> years;
    std::vector<std::string> f;
    while (reader.next(f)) {
        const std::size_t line = reader.line();
        check_field_count(f, 5, line);
        ids.insert(f[0], line);
        const int year = static_cast<int>(csv::parse_long(f[3], "year", line));
        const double value = csv::parse_double(f[4], "value", line);
        if (value < 0.0) {
            throw ParseError("line " + std::to_string(line) + ": negative assessment value");
        }
        years.insert(year);
        out.push_back(PropertyAssessment{f[0], parse_point(f[1], f[2], line), year, value});
    }
    if (years.size() != 2) {
        throw SchemaError("'" + path + "': assessment layer must contain exactly two years, found " +
                          std::to_string(years.size()));
    }
    return out;
}

namespace {

std::vector<geo::GeoPoint> parse_ring(const json& ring, const std::string& path) {
    std::vector<geo::GeoPoint> out;
    for (const auto& coord : ring) {
        if (!coord.is_array() || coord.size() < 2) {
            throw ParseError("'" + path + "': malformed coordinate in zoning geometry");
        }
        // GeoJSON order is [lon, lat].
        out.emplace_back(coord[1].get<double>(), coord[0].get<double>());
    }
    return out;
}

geo::GeoPolygon parse_polygon(const json& rings, const std::string& path) {
    if (!rings.is_array() || rings.empty()) {
        throw ParseError("'" + path + "': polygon without rings");
    }
    std::vector<geo::GeoPoint> exterior = parse_ring(rings[0], path);
    std::vector<std::vector<geo::GeoPoint>> holes;
    for (std::size_t i = 1; i < rings.size(); ++i) holes.push_back(parse_ring(rings[i], path));
    return geo::GeoPolygon(std::move(exterior), std::move(holes));
}

}  // namespace

ZoningLayer load_zoning(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
    if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
        throw ParseError("'" + path + "': expected a GeoJSON FeatureCollection");
    }

    ZoningLayer layer;
    for (const auto& feature : doc["features"]) {
        if (!feature.contains("properties") || !feature["properties"].contains("category")) {
            throw ParseError("'" + path + "': zoning feature missing 'category' property");
        }
        const ZoneCategory category =
            zone_from_string(feature["properties"]["category"].get<std::string>());
        const auto& geom = feature.value("geometry", json::object());
        const std::string type = geom.value("type", "");
        if (type == "Polygon") {
            layer.districts.push_back({parse_polygon(geom["coordinates"], path), category});
        } else if (type == "MultiPolygon") {
            for (const auto& poly : geom["coordinates"]) {
                layer.districts.push_back({parse_polygon(poly, path), category});
            }
        } else {
            throw ParseError("'" + path + "': unsupported zoning geometry type '" + type + "'");
        }
    }
    if (layer.districts.empty()) {
        throw SchemaError("'" + path + "': zoning layer has no districts");
    }
    return layer;
}

CityLayers assemble(std::string name, std::vector<VacantLotRaw> lots,
                    std::vector<InfraPoint> libraries, std::vector<InfraPoint> parks,
                    std::vector<InfraPoint> schools, std::vector<InfraPoint> transit,
                    std::vector<CrimeIncident> crime,
                    std::vector<PropertyAssessment> assessments, ZoningLayer zoning) {
    if (libraries.empty()) throw MissingLayer("library layer is empty");
    if (parks.empty()) throw MissingLayer("park layer is empty");
    if (schools.empty()) throw MissingLayer("school layer is empty");
    if (transit.empty()) throw MissingLayer("transit layer is empty");
    if (zoning.districts.empty()) throw SchemaError("zoning layer has no districts");
    CityLayers city;
    city.name = std::move(name);
    city.lots = std::move(lots);
    city.libraries = std::move(libraries);
    city.parks = std::move(parks);
    city.schools = std::move(schools);
    city.transit = std::move(transit);
    city.crime = std::move(crime);
    city.assessments = std::move(assessments);
    city.zoning = std::move(zoning);
    return city;
}

LayerPaths LayerPaths::in_directory(const std::string& dir) {
    auto p = [&](const char* f) { return (std::filesystem::path(dir) / f).string(); };
    return LayerPaths{p("lots.csv"),  p("libraries.csv"),   p("parks.csv"),
                      p("schools.csv"), p("transit.csv"),   p("crime.csv"),
                      p("assessments.csv"), p("zoning.geojson")};
}

CityLayers load_city(const std::string& name, const LayerPaths& paths, int report_year) {
    return assemble(name, load_lots(paths.lots), load_infra(paths.libraries, InfraKind::Library),
                    load_infra(paths.parks, InfraKind::Park),
                    load_infra(paths.schools, InfraKind::School),
                    load_infra(paths.transit, InfraKind::TransitStop),
                    load_crime(paths.crime, report_year), load_assessments(paths.assessments),
                    load_zoning(paths.zoning));
}

void write_lots(const std::string& path, const std::vector<VacantLotRaw>& rows) {
    const bool any_conversion =
        std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.conversion.has_value(); });
    csv::Writer w(path);
    if (any_conversion) {
        w.write_row({"id", "lat", "lon", "status", "conversion"});
    } else {
        w.write_row({"id", "lat", "lon", "status"});
    }
    for (const auto& r : rows) {
        std::vector<std::string> f = {r.id, csv::format_double(r.location.lat),
                                      csv::format_double(r.location.lon), to_string(r.status)};
        if (any_conversion) f.push_back(r.conversion ? to_string(*r.conversion) : "");
        w.write_row(f);
    }
}

void write_infra(const std::string& path, const std::vector<InfraPoint>& rows) {
    csv::Writer w(path);
    w.write_row({"id", "lat", "lon"});
    for (const auto& r : rows) {
        w.write_row({r.id, csv::format_double(r.location.lat), csv::format_double(r.location.lon)});
    }
}

void write_crime(const std::string& path, const std::vector<CrimeIncident>& rows) {
    csv::Writer w(path);
    w.write_row({"id", "lat", "lon", "date"});
    for (const auto& r : rows) {
        char date[16];
        std::snprintf(date, sizeof(date), "%04d-%02d-%02d", r.date.year, r.date.month, r.date.day);
        w.write_row({r.id, csv::format_double(r.location.lat), csv::format_double(r.location.lon),
                     date});
    }
}

void write_assessments(const std::string& path, const std::vector<PropertyAssessment>& rows) {
    csv::Writer w(path);
    w.write_row({"id", "lat", "lon", "year", "value"});
    for (const auto& r : rows) {
        w.write_row({r.id, csv::format_double(r.location.lat), csv::format_double(r.location.lon),
                     std::to_string(r.year), csv::format_double(r.value)});
    }
}

namespace {

json ring_to_json(const std::vector<geo::GeoPoint>& ring) {
    json out = json::array();
    for (const auto& p : ring) out.push_back({p.lon, p.lat});
    // GeoJSON rings are explicitly closed.
    out.push_back({ring.front().lon, ring.front().lat});
    return out;
}

}  // namespace

void write_zoning(const std::string& path, const ZoningLayer& layer) {
    json features = json::array();
    for (const auto& d : layer.districts) {
        json rings = json::array();
        rings.push_back(ring_to_json(d.polygon.exterior));
        for (const auto& h : d.polygon.holes) rings.push_back(ring_to_json(h));
        features.push_back({{"type", "Feature"},
                            {"properties", {{"category", to_string(d.category)}}},
                            {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}}});
    }
    json doc = {{"type", "FeatureCollection"}, {"features", features}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << doc.dump(2) << '\n';
}

void write_city(const CityLayers& city, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const LayerPaths paths = LayerPaths::in_directory(dir);
    write_lots(paths.lots, city.lots);
    write_infra(paths.libraries, city.libraries);
    write_infra(paths.parks, city.parks);
    write_infra(paths.schools, city.schools);
    write_infra(paths.transit, city.transit);
    write_crime(paths.crime, city.crime);
    write_assessments(paths.assessments, city.assessments);
    write_zoning(paths.zoning, city.zoning);
}

}  // namespace lotkit::ingest
