#pragma once

#include <array>
#include <string>
#include <vector>

#include "lotkit/data.hpp"
#include "lotkit/geo.hpp"
#include "lotkit/ingest.hpp"

namespace lotkit::features {

// Read-only acceleration structures over one city's layers, built once and
// shared by all per-lot feature computations.
class Workspace {
public:
    explicit Workspace(const ingest::CityLayers& city);

    const geo::PointIndex& libraries() const { return libraries_; }
    const geo::PointIndex& parks() const { return parks_; }
    const geo::PointIndex& schools() const { return schools_; }
    const geo::PointIndex& transit() const { return transit_; }
    const geo::PointIndex& crime() const { return crime_; }
    const geo::PointIndex& lots() const { return lots_; }

    int earlier_year() const { return earlier_year_; }
    int later_year() const { return later_year_; }
    const geo::PointIndex& assessments(int year) const;
    double assessment_value(int year, std::size_t pos) const;

    const ingest::CityLayers& city() const { return *city_; }

private:
    const ingest::CityLayers* city_;
    geo::PointIndex libraries_, parks_, schools_, transit_, crime_, lots_;
    int earlier_year_ = 0, later_year_ = 0;
    geo::PointIndex earlier_idx_, later_idx_;
    std::vector<double> earlier_values_, later_values_;
};

// (libDist, parkDist, schoolDist, transitDist), each the nearest-point
// distance against its layer.
std::array<double, 4> infrastructure_distances(const geo::GeoPoint& lot, const Workspace& ws);

struct PriceDiffResult {
    double value = 0.0;
    bool imputed = false;  // a year had no properties within the radius
};

// later-year mean minus earlier-year mean of assessed values within
// radius_m; 0 with the imputed flag when either year's radius is empty.
PriceDiffResult price_diff(const geo::GeoPoint& lot, const Workspace& ws, double radius_m);

// Other lots within radius_m (the lot itself excluded by id).
int vacant_density(const std::string& lot_id, const geo::GeoPoint& lot, const Workspace& ws,
                   double radius_m);

int crime_density(const geo::GeoPoint& lot, const Workspace& ws, double radius_m);

struct ZoneAssignment {
    ZoneCategory category = ZoneCategory::Residential;
    bool fallback = false;  // no district contained the lot
};

// First district (file order) containing the lot; otherwise the district
// with the closest exterior vertex.
ZoneAssignment assign_zone(const geo::GeoPoint& lot, const ingest::ZoningLayer& zoning);

// All eight determinants for every lot, rows sorted by lot id.
ModelingDataset build_dataset(const ingest::CityLayers& city,
                              double radius_m = geo::kQuarterMileM);

// Modeling dataset CSV: column names match the determinant table exactly.
void write_features_csv(const ModelingDataset& ds, const std::string& path);
ModelingDataset read_features_csv(const std::string& path);

// One Point feature per lot with the determinant columns as properties.
void write_features_geojson(const ModelingDataset& ds, const std::string& path);

}  // namespace lotkit::features
