// constellation.cpp : circular-orbit propagation and Walker shells
#include "rtkbench/constellation.hpp"

#include <algorithm>
#include <cmath>

#include "rtkbench/errors.hpp"
#include "rtkbench/rng.hpp"

namespace rtkbench {

const char* system_name(System s) { return s == System::SysG ? "SysG" : "SysE"; }
const char* band_name(BandCode b) { return b == BandCode::L1E1 ? "L1E1" : "L2E5b"; }

double carrier_frequency_hz(System sys, BandCode band) {
    if (band == BandCode::L1E1) return 1575.42e6;
    return sys == System::SysG ? 1227.60e6 : 1207.14e6;
}

Band band_of(System sys, BandCode band) {
    const double f = carrier_frequency_hz(sys, band);
    return {band, f, kSpeedOfLight / f};
}

EcefPosition satellite_position(const CircularEphemeris& eph, const GnssTime& t,
                                bool earth_rotation) {
    const double dt = t.diff(eph.t0);
    const double u = eph.phase_at_t0_rad + eph.angular_rate_rad_s * dt;
    const double xo = eph.semi_major_axis_m * std::cos(u);
    const double yo = eph.semi_major_axis_m * std::sin(u);

    const double ci = std::cos(eph.inclination_rad), si = std::sin(eph.inclination_rad);
    const double cr = std::cos(eph.raan_rad), sr = std::sin(eph.raan_rad);
    const double xi = xo * cr - yo * ci * sr;
    const double yi = xo * sr + yo * ci * cr;
    const double zi = yo * si;
    if (!earth_rotation) return {xi, yi, zi};

    const double th = kEarthRotationRate * dt;
    const double ct = std::cos(th), st = std::sin(th);
    return {xi * ct + yi * st, -xi * st + yi * ct, zi};
}

std::vector<SatelliteRecord> build_constellation(System sys, int n_sats, int n_planes,
                                                 double semi_major_axis_m, double inclination_rad,
                                                 std::uint64_t seed, const GnssTime& t0) {
    if (n_sats < 1) throw ConfigError("build_constellation: n_sats < 1");
    if (n_planes < 1 || n_sats % n_planes != 0) {
        throw ConfigError("build_constellation: n_sats must be a positive multiple of n_planes");
    }
    const int per_plane = n_sats / n_planes;
    const double rate = std::sqrt(kEarthMu / std::pow(semi_major_axis_m, 3));

    // Seed fixes the shell orientation: a global RAAN offset and phase offset.
    RngKey key = RngKey(seed).with("constellation").with(static_cast<int>(sys));
    const double raan0 = key.uniform(0.0, 2.0 * kPi, 0);
    const double phase0 = key.uniform(0.0, 2.0 * kPi, 1);
    const double interplane = 2.0 * kPi / n_sats; // Walker f=1 phase step between planes

    std::vector<SatelliteRecord> out;
    out.reserve(static_cast<std::size_t>(n_sats));
    int prn = 1;
    for (int p = 0; p < n_planes; ++p) {
        const double raan = raan0 + 2.0 * kPi * p / n_planes;
        for (int s = 0; s < per_plane; ++s) {
            CircularEphemeris eph;
            eph.semi_major_axis_m = semi_major_axis_m;
            eph.inclination_rad = inclination_rad;
            eph.raan_rad = std::fmod(raan, 2.0 * kPi);
            eph.phase_at_t0_rad = std::fmod(phase0 + 2.0 * kPi * s / per_plane + interplane * p, 2.0 * kPi);
            eph.angular_rate_rad_s = rate;
            eph.t0 = t0;
            out.push_back({SatelliteId{sys, prn++}, eph});
        }
    }
    return out;
}

void Constellation::add(std::vector<SatelliteRecord> sats) {
    sats_.insert(sats_.end(), sats.begin(), sats.end());
    std::sort(sats_.begin(), sats_.end(),
              [](const SatelliteRecord& a, const SatelliteRecord& b) { return a.id < b.id; });
}

const CircularEphemeris* Constellation::find(const SatelliteId& id) const {
    for (const auto& s : sats_) {
        if (s.id == id) return &s.eph;
    }
    return nullptr;
}

EcefPosition Constellation::position(const SatelliteId& id, const GnssTime& t) const {
    const CircularEphemeris* eph = find(id);
    if (!eph) throw ConfigError("Constellation::position: unknown satellite");
    return satellite_position(*eph, t);
}

std::vector<SatelliteId> Constellation::visible(const EcefPosition& rx, const GnssTime& t,
                                                double mask_rad) const {
    std::vector<SatelliteId> out;
    for (const auto& s : sats_) {
        const EcefPosition sp = satellite_position(s.eph, t);
        if (line_of_sight(sp, rx).elevation_rad > mask_rad) out.push_back(s.id);
    }
    return out;
}

} // namespace rtkbench
