#include "lotkit/data.hpp"

#include "lotkit/errors.hpp"

namespace lotkit {

std::string to_string(Status s) {
    return s == Status::Adopt ? "adopt" : "available";
}

std::string to_string(Conversion c) {
    switch (c) {
        case Conversion::CommunityGarden: return "community_garden";
        case Conversion::Qcmos: return "qcmos";
        case Conversion::UrbanFarm: return "urban_farm";
    }
    return "";
}

std::string to_string(ZoneCategory z) {
    return kZoneNames[static_cast<int>(z)];
}

std::string to_string(InfraKind k) {
    switch (k) {
        case InfraKind::Library: return "library";
        case InfraKind::Park: return "park";
        case InfraKind::School: return "school";
        case InfraKind::TransitStop: return "transit_stop";
    }
    return "";
}

Status status_from_string(const std::string& s) {
    if (s == "available") return Status::Available;
    if (s == "adopt") return Status::Adopt;
    throw ParseError("unknown status '" + s + "' (expected available|adopt)");
}

Conversion conversion_from_string(const std::string& s) {
    if (s == "community_garden") return Conversion::CommunityGarden;
    if (s == "qcmos") return Conversion::Qcmos;
    if (s == "urban_farm") return Conversion::UrbanFarm;
    throw ParseError("unknown conversion '" + s +
                     "' (expected community_garden|qcmos|urban_farm)");
}

ZoneCategory zone_from_string(const std::string& s) {
    for (int i = 0; i < kZoneCategoryCount; ++i) {
        if (s == kZoneNames[i]) return static_cast<ZoneCategory>(i);
    }
    throw UnknownCategory("unknown zoning category '" + s + "'");
}

}  // namespace lotkit
