#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lotkit/data.hpp"
#include "lotkit/geo.hpp"

namespace lotkit::ingest {

struct VacantLotRaw {
    std::string id;
    geo::GeoPoint location;
    Status status = Status::Available;
    std::optional<Conversion> conversion;  // only when status == Adopt
};

struct InfraPoint {
    std::string id;
    geo::GeoPoint location;
    InfraKind kind = InfraKind::Library;
};

struct Date {
    int year = 0, month = 0, day = 0;
    bool operator==(const Date&) const = default;
};

struct CrimeIncident {
    std::string id;
    geo::GeoPoint location;
    Date date;
};

struct PropertyAssessment {
    std::string id;
    geo::GeoPoint location;
    int year = 0;
    double value = 0.0;
};

struct ZoningDistrict {
    geo::GeoPolygon polygon;
    ZoneCategory category = ZoneCategory::Residential;
};

struct ZoningLayer {
    std::vector<ZoningDistrict> districts;  // file order preserved
};

// The five validated raw layers of one city.
struct CityLayers {
    std::string name;
    std::vector<VacantLotRaw> lots;
    std::vector<InfraPoint> libraries;
    std::vector<InfraPoint> parks;
    std::vector<InfraPoint> schools;
    std::vector<InfraPoint> transit;
    std::vector<CrimeIncident> crime;
    std::vector<PropertyAssessment> assessments;
    ZoningLayer zoning;
};

// CSV loaders. Every loader validates rows eagerly and reports the offending
// line in its error message.
std::vector<VacantLotRaw> load_lots(const std::string& path);
std::vector<InfraPoint> load_infra(const std::string& path, InfraKind kind);
std::vector<CrimeIncident> load_crime(const std::string& path, int report_year);
std::vector<PropertyAssessment> load_assessments(const std::string& path);
ZoningLayer load_zoning(const std::string& path);

// Bundles validated layers; throws MissingLayer when an infrastructure kind
// is empty and SchemaError when zoning has no districts.
CityLayers assemble(std::string name, std::vector<VacantLotRaw> lots,
                    std::vector<InfraPoint> libraries, std::vector<InfraPoint> parks,
                    std::vector<InfraPoint> schools, std::vector<InfraPoint> transit,
                    std::vector<CrimeIncident> crime,
                    std::vector<PropertyAssessment> assessments, ZoningLayer zoning);

struct LayerPaths {
    std::string lots, libraries, parks, schools, transit, crime, assessments, zoning;

    // The fixed filenames used inside a city directory.
    static LayerPaths in_directory(const std::string& dir);
};

CityLayers load_city(const std::string& name, const LayerPaths& paths, int report_year);

// Writers emit exactly the formats the loaders read; doubles use the
// shortest round-tripping representation so write -> load is an identity.
void write_lots(const std::string& path, const std::vector<VacantLotRaw>& rows);
void write_infra(const std::string& path, const std::vector<InfraPoint>& rows);
void write_crime(const std::string& path, const std::vector<CrimeIncident>& rows);
void write_assessments(const std::string& path, const std::vector<PropertyAssessment>& rows);
void write_zoning(const std::string& path, const ZoningLayer& layer);
void write_city(const CityLayers& city, const std::string& dir);

}  // namespace lotkit::ingest
