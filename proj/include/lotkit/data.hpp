#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "lotkit/geo.hpp"

namespace lotkit {

enum class Status { Available, Adopt };
enum class Conversion { CommunityGarden, Qcmos, UrbanFarm };
enum class ZoneCategory { Residential, Industrial, Business, SpecialPurpose };
enum class InfraKind { Library, Park, School, TransitStop };

inline constexpr int kZoneCategoryCount = 4;

std::string to_string(Status s);
std::string to_string(Conversion c);
std::string to_string(ZoneCategory z);
std::string to_string(InfraKind k);

Status status_from_string(const std::string& s);
Conversion conversion_from_string(const std::string& s);
ZoneCategory zone_from_string(const std::string& s);

// The eight determinants of one lot. Numeric features keep a fixed order
// everywhere: libDist, parkDist, schoolDist, transitDist, priceDiff,
// vacantDensity, crimeDensity.
struct FeatureVector {
    double lib_dist = 0.0;
    double park_dist = 0.0;
    double school_dist = 0.0;
    double transit_dist = 0.0;
    double price_diff = 0.0;
    int vacant_density = 0;
    int crime_density = 0;
    ZoneCategory zone = ZoneCategory::Residential;

    // Degenerate-case markers; reported, never fed to models.
    bool price_imputed = false;
    bool zone_fallback = false;

    std::array<double, 7> numerics() const {
        return {lib_dist,  park_dist,  school_dist,
                transit_dist, price_diff,
                static_cast<double>(vacant_density), static_cast<double>(crime_density)};
    }
};

inline constexpr std::array<const char*, 7> kNumericFeatureNames = {
    "libDist", "parkDist", "schoolDist", "transitDist",
    "priceDiff", "vacantDensity", "crimeDensity"};

inline constexpr std::array<const char*, 4> kZoneNames = {
    "residential", "industrial", "business", "special_purpose"};

struct LabeledLot {
    std::string id;
    geo::GeoPoint location;
    FeatureVector features;
    Status status = Status::Available;
    std::optional<Conversion> conversion;
};

struct ModelingDataset {
    std::string city;
    double radius_m = geo::kQuarterMileM;
    std::vector<LabeledLot> rows;
};

}  // namespace lotkit
