// geo.cpp : WGS84 conversions and line-of-sight geometry
#include "rtkbench/geo.hpp"

#include <cmath>

#include "rtkbench/errors.hpp"

namespace rtkbench {

namespace {
constexpr double kE2 = kWgs84F * (2.0 - kWgs84F); // first eccentricity squared
}

double EcefPosition::norm() const { return std::sqrt(x * x + y * y + z * z); }

double EnuVector::norm2d() const { return std::sqrt(east * east + north * north); }
double EnuVector::norm() const { return std::sqrt(east * east + north * north + up * up); }

EcefPosition geodetic_to_ecef(const GeodeticPosition& g) {
    const double slat = std::sin(g.latitude_rad);
    const double clat = std::cos(g.latitude_rad);
    const double n = kWgs84A / std::sqrt(1.0 - kE2 * slat * slat);
    return {(n + g.height_m) * clat * std::cos(g.longitude_rad),
            (n + g.height_m) * clat * std::sin(g.longitude_rad),
            (n * (1.0 - kE2) + g.height_m) * slat};
}

GeodeticPosition ecef_to_geodetic(const EcefPosition& p) {
    if (p.norm() <= 1e6) {
        throw DegenerateInput("ecef_to_geodetic: point too close to Earth center");
    }
    const double rho = std::sqrt(p.x * p.x + p.y * p.y);
    GeodeticPosition g;
    g.longitude_rad = std::atan2(p.y, p.x);

    // fixed-point iteration on latitude, tolerance 1e-12 rad
    double lat = std::atan2(p.z, rho * (1.0 - kE2));
    double n = kWgs84A;
    for (int i = 0; i < 10; ++i) {
        const double slat = std::sin(lat);
        n = kWgs84A / std::sqrt(1.0 - kE2 * slat * slat);
        const double next = std::atan2(p.z + kE2 * n * slat, rho);
        const bool done = std::fabs(next - lat) < 1e-12;
        lat = next;
        if (done) break;
    }
    g.latitude_rad = lat;
    const double slat = std::sin(lat);
    n = kWgs84A / std::sqrt(1.0 - kE2 * slat * slat);
    if (std::fabs(lat) < deg2rad(89.0)) {
        g.height_m = rho / std::cos(lat) - n;
    } else {
        g.height_m = p.z / slat - n * (1.0 - kE2);
    }
    return g;
}

double geometric_range(const EcefPosition& sat, const EcefPosition& rx) {
    return (sat - rx).norm();
}

EnuVector ecef_to_enu(const EcefPosition& p, const EcefPosition& origin) {
    const GeodeticPosition g = ecef_to_geodetic(origin);
    const double sl = std::sin(g.latitude_rad), cl = std::cos(g.latitude_rad);
    const double so = std::sin(g.longitude_rad), co = std::cos(g.longitude_rad);
    const EcefPosition d = p - origin;
    return {-so * d.x + co * d.y,
            -sl * co * d.x - sl * so * d.y + cl * d.z,
            cl * co * d.x + cl * so * d.y + sl * d.z};
}

EcefPosition enu_to_ecef(const EnuVector& v, const EcefPosition& origin) {
    const GeodeticPosition g = ecef_to_geodetic(origin);
    const double sl = std::sin(g.latitude_rad), cl = std::cos(g.latitude_rad);
    const double so = std::sin(g.longitude_rad), co = std::cos(g.longitude_rad);
    return {origin.x - so * v.east - sl * co * v.north + cl * co * v.up,
            origin.y + co * v.east - sl * so * v.north + cl * so * v.up,
            origin.z + cl * v.north + sl * v.up};
}

LosVector line_of_sight(const EcefPosition& sat, const EcefPosition& rx) {
    const EcefPosition d = sat - rx;
    const double r = d.norm();
    if (r == 0.0) {
        throw DegenerateInput("line_of_sight: satellite and receiver coincide");
    }
    LosVector los;
    los.ux = d.x / r;
    los.uy = d.y / r;
    los.uz = d.z / r;

    const GeodeticPosition g = ecef_to_geodetic(rx);
    const double sl = std::sin(g.latitude_rad), cl = std::cos(g.latitude_rad);
    const double so = std::sin(g.longitude_rad), co = std::cos(g.longitude_rad);
    const double e = -so * los.ux + co * los.uy;
    const double n = -sl * co * los.ux - sl * so * los.uy + cl * los.uz;
    const double u = cl * co * los.ux + cl * so * los.uy + sl * los.uz;
    los.elevation_rad = std::asin(std::max(-1.0, std::min(1.0, u)));
    los.azimuth_rad = std::atan2(e, n);
    return los;
}

} // namespace rtkbench
