// trajectory.hpp : vehicle trajectory generation around the reference station
#pragma once

#include <cstdint>
#include <vector>

#include "rtkbench/geo.hpp"
#include "rtkbench/gnss_time.hpp"

namespace rtkbench {

struct TrajectorySample {
    GnssTime epoch{};
    EcefPosition position{};
    EnuVector velocity{};     // ENU frame at the station
    EnuVector acceleration{};
    EnuVector enu{};          // position relative to the station
};

struct TrajectoryConfig {
    double max_speed_m_s = 25.0;
    double max_accel_m_s2 = 3.0;
    double radius_m = 4200.0; // waypoints kept inside; hard cap is 5 km
    double min_height_m = 10.0;
    double max_height_m = 50.0;
    int waypoint_count = 6;
};

// Piecewise constant-acceleration drive through seeded waypoints inside the
// disc, at a constant seeded height; deterministic per seed. Samples satisfy
// (p[k+1]-p[k])/dt == (v[k]+v[k+1])/2 exactly.
std::vector<TrajectorySample> generate_trajectory(std::uint64_t seed, double duration_s,
                                                  const EcefPosition& station,
                                                  const TrajectoryConfig& cfg,
                                                  const GnssTime& start, double epoch_interval_s);

} // namespace rtkbench
