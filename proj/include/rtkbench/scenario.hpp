// scenario.hpp : scenario configuration (flat key-value text format)
#pragma once

#include <cstdint>
#include <string>

#include "rtkbench/attack.hpp"
#include "rtkbench/guard.hpp"
#include "rtkbench/obs.hpp"
#include "rtkbench/solver.hpp"
#include "rtkbench/station.hpp"
#include "rtkbench/trajectory.hpp"

namespace rtkbench {

struct ShellConfig {
    int n_sats = 24;
    int n_planes = 6;
    double semi_major_axis_m = 26559.7e3;
    double inclination_rad = deg2rad(55.0);
};

enum class CorrectionsSource : std::uint8_t { Station, Truth };

struct ScenarioStation {
    std::uint16_t id = 1;
    GeodeticPosition geodetic{deg2rad(59.4045), deg2rad(17.9490), 30.0};
    StationModeKind mode = StationModeKind::Static;
    SurveyConfig survey{};
    ReceiverBands bands{};
    bool smoothing = false;
    ReceiverClock clock{1e-4, 2e-9, 1e-10};
};

struct ScenarioRover {
    ReceiverBands bands{};
    FallbackPolicy policy = FallbackPolicy::Strict;
    bool guard = false;
    ReceiverClock clock{-2e-4, -1e-9, 1e-10};
};

struct Scenario {
    int schema_version = 1;
    std::string name = "unnamed";
    double duration_s = 600.0;
    double epoch_interval_s = 1.0;
    std::uint64_t seed = 1;
    GnssTime start{2300, 0.0};

    ScenarioStation station;
    ScenarioRover rover;
    ShellConfig shell_g{24, 6, 26559.7e3, deg2rad(55.0)};
    ShellConfig shell_e{24, 3, 29600.3e3, deg2rad(56.0)};

    ErrorModel errors{3.0, 2.4, 0.05, 0.05, 0.002, 0};
    double elevation_mask_rad = deg2rad(10.0);

    AttackSchedule attacks;            // attacker/spoof targets resolved to ECEF
    EnuVector attacker_enu{300, 0, 10}; // attacker site relative to the station

    CorrectionsSource corrections_source = CorrectionsSource::Station;
    SolverConfig solver;
    GuardConfig guard;
    TrajectoryConfig trajectory;

    EcefPosition station_truth() const { return geodetic_to_ecef(station.geodetic); }
};

// Parses the `rtkbench-scenario v1` text format; throws ConfigError with the
// offending line on malformed input.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

} // namespace rtkbench
