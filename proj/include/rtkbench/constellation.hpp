// constellation.hpp : synthetic circular-orbit constellations for two systems
#pragma once

#include <cstdint>
#include <vector>

#include "rtkbench/geo.hpp"
#include "rtkbench/gnss_time.hpp"

namespace rtkbench {

constexpr double kEarthMu = 3.986004418e14;        // m^3/s^2
constexpr double kEarthRotationRate = 7.2921151467e-5; // rad/s

enum class System : std::uint8_t { SysG = 0, SysE = 1 };
enum class BandCode : std::uint8_t { L1E1 = 0, L2E5b = 1 };

const char* system_name(System s);
const char* band_name(BandCode b);

struct SatelliteId {
    System system = System::SysG;
    int prn = 1; // 1..64

    bool operator==(const SatelliteId& o) const { return system == o.system && prn == o.prn; }
    bool operator<(const SatelliteId& o) const {
        if (system != o.system) return system < o.system;
        return prn < o.prn;
    }
};

struct Band {
    BandCode code = BandCode::L1E1;
    double carrier_frequency_hz = 0.0;
    double wavelength_m = 0.0;
};

// L1 = E1 = 1575.42 MHz; L2 = 1227.60 MHz; E5b = 1207.14 MHz
double carrier_frequency_hz(System sys, BandCode band);
Band band_of(System sys, BandCode band);

struct CircularEphemeris {
    double semi_major_axis_m = 0.0;
    double inclination_rad = 0.0;
    double raan_rad = 0.0;
    double phase_at_t0_rad = 0.0;
    double angular_rate_rad_s = 0.0; // sqrt(mu / a^3)
    GnssTime t0{};                   // reference epoch for phase and Earth rotation
};

// Position on the circular orbit at t, rotated into ECEF at the constant Earth
// rotation rate. earth_rotation=false keeps the inertial frame (test hook).
EcefPosition satellite_position(const CircularEphemeris& eph, const GnssTime& t,
                                bool earth_rotation = true);

struct SatelliteRecord {
    SatelliteId id;
    CircularEphemeris eph;
};

// Walker-style shell: n_planes at equal RAAN increments, even in-plane phase
// spacing, one inter-plane phase step. Deterministic per seed.
std::vector<SatelliteRecord> build_constellation(System sys, int n_sats, int n_planes,
                                                 double semi_major_axis_m, double inclination_rad,
                                                 std::uint64_t seed, const GnssTime& t0);

class Constellation {
public:
    Constellation() = default;
    explicit Constellation(std::vector<SatelliteRecord> sats) : sats_(std::move(sats)) {}

    void add(std::vector<SatelliteRecord> sats);

    const std::vector<SatelliteRecord>& satellites() const { return sats_; }
    const CircularEphemeris* find(const SatelliteId& id) const;

    EcefPosition position(const SatelliteId& id, const GnssTime& t) const;

    // Satellites with elevation above mask at rx, in (system, prn) order.
    std::vector<SatelliteId> visible(const EcefPosition& rx, const GnssTime& t,
                                     double mask_rad) const;

private:
    std::vector<SatelliteRecord> sats_;
};

} // namespace rtkbench
