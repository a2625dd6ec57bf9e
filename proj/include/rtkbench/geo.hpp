// geo.hpp : WGS84 coordinate conversions, geometric ranges, line-of-sight
#pragma once

#include <array>

namespace rtkbench {

// WGS84 ellipsoid
constexpr double kWgs84A = 6378137.0;
constexpr double kWgs84F = 1.0 / 298.257223563;
constexpr double kSpeedOfLight = 299792458.0; // m/s
constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double d) { return d * kPi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

struct EcefPosition {
    double x = 0.0; // m
    double y = 0.0;
    double z = 0.0;

    EcefPosition operator+(const EcefPosition& o) const { return {x + o.x, y + o.y, z + o.z}; }
    EcefPosition operator-(const EcefPosition& o) const { return {x - o.x, y - o.y, z - o.z}; }
    EcefPosition operator*(double s) const { return {x * s, y * s, z * s}; }
    double norm() const;
    double dot(const EcefPosition& o) const { return x * o.x + y * o.y + z * o.z; }
};

struct GeodeticPosition {
    double latitude_rad = 0.0;  // [-pi/2, pi/2]
    double longitude_rad = 0.0; // (-pi, pi]
    double height_m = 0.0;      // above WGS84 ellipsoid
};

// East-north-up vector in a local frame
struct EnuVector {
    double east = 0.0;
    double north = 0.0;
    double up = 0.0;

    double norm2d() const;
    double norm() const;
};

struct LosVector {
    double ux = 0.0; // unit vector components, ECEF
    double uy = 0.0;
    double uz = 0.0;
    double elevation_rad = 0.0; // from local horizontal at the receiver
    double azimuth_rad = 0.0;   // clockwise from north
};

EcefPosition geodetic_to_ecef(const GeodeticPosition& g);

// Iterative latitude refinement; throws DegenerateInput for |p| <= 1e6 m.
GeodeticPosition ecef_to_geodetic(const EcefPosition& p);

double geometric_range(const EcefPosition& sat, const EcefPosition& rx);

// Unit vector from rx toward sat with elevation/azimuth in the ENU frame at rx.
// Throws DegenerateInput if sat == rx.
LosVector line_of_sight(const EcefPosition& sat, const EcefPosition& rx);

// ENU displacement of p relative to origin (frame defined at origin's geodetic position)
EnuVector ecef_to_enu(const EcefPosition& p, const EcefPosition& origin);
EcefPosition enu_to_ecef(const EnuVector& v, const EcefPosition& origin);

} // namespace rtkbench
