// guard.hpp : station-side monitors and rover-side correction validation
#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rtkbench/geo.hpp"
#include "rtkbench/gnss_time.hpp"
#include "rtkbench/solver.hpp"

namespace rtkbench {

enum class VerdictReason : std::uint8_t {
    Clean = 0,
    PositionDrift,
    ClockDrift,
    ResidualAnomaly,
    CorrectionHarmful,
    VotedOut
};

const char* reason_name(VerdictReason r);

struct DetectorVerdict {
    GnssTime epoch{};
    std::string detector;
    bool alarm = false;
    double score = 0.0;
    VerdictReason reason = VerdictReason::Clean;
};

struct GeofenceConfig {
    double radius_threshold_m = 5.0;
    int persistence = 3;
};

struct ClockMonitorConfig {
    double max_drift_s_s = 1e-8;
    int window = 30;
};

struct ResidualMonitorConfig {
    double threshold_m = 0.75; // default: 5x the benign calibration RMS
    int persistence = 3;
};

struct BenefitConfig {
    double harmful_factor = 2.0;
    double floor_m = 0.05; // metric floor so near-zero residuals do not trip
};

struct VoteConfig {
    int min_stations = 3;
    double outlier_threshold_m = 10.0;
    int rejoin_epochs = 10;
};

// Bundled defaults for the bench wiring.
struct GuardConfig {
    GeofenceConfig geofence{};
    ClockMonitorConfig clock{};
    ResidualMonitorConfig residual{};
    BenefitConfig benefit{};
    VoteConfig vote{};
    int station_disable_persistence = 5; // station-side alarm epochs before stream off
    int station_reenable_clean = 30;     // clean epochs before stream resumes
};

// Alarm when the monitored SPP position leaves the declared radius for the
// configured persistence. Uses the SPP-from-raw-measurements stream, so a
// frozen TIME-mode output does not blind it.
class GeofenceMonitor {
public:
    explicit GeofenceMonitor(GeofenceConfig cfg) : cfg_(cfg) {}

    DetectorVerdict step(const GnssTime& epoch, const std::optional<RtkSolution>& spp,
                         const EcefPosition& declared);

private:
    GeofenceConfig cfg_;
    int streak_ = 0;
};

// Linear drift fit over a sliding window of the station clock solution.
class ClockMonitor {
public:
    ClockMonitor(ClockMonitorConfig cfg, double nominal_drift_s_s)
        : cfg_(cfg), nominal_(nominal_drift_s_s) {}

    DetectorVerdict step(const GnssTime& epoch, std::optional<double> clock_bias_s);

private:
    ClockMonitorConfig cfg_;
    double nominal_;
    std::deque<std::pair<double, double>> hist_; // (t seconds, bias)
    double t0_set_ = false;
    GnssTime t0_{};
};

// Post-fit residual RMS threshold with persistence; catches partially
// consistent spoofing.
class ResidualMonitor {
public:
    explicit ResidualMonitor(ResidualMonitorConfig cfg) : cfg_(cfg) {}

    DetectorVerdict step(const GnssTime& epoch, std::optional<double> residual_rms_m);

private:
    ResidualMonitorConfig cfg_;
    int streak_ = 0;
};

// Separation of solutions: the corrected result must explain the rover's own
// measurements at least as well as the standalone one. The corrected metric
// is the rover code residual RMS re-evaluated at the corrected position.
DetectorVerdict correction_benefit_check(const GnssTime& epoch,
                                         const std::optional<RtkSolution>& standalone,
                                         const std::optional<RtkSolution>& corrected,
                                         const EpochObservations& rover_obs,
                                         const Constellation& sky, const SvClockModel& sv_clock,
                                         const SolverConfig& solver_cfg, const BenefitConfig& cfg);

// Multi-station voting: component-wise median consensus; stations deviating
// beyond the threshold are voted out until they re-agree long enough.
class StationVote {
public:
    explicit StationVote(VoteConfig cfg) : cfg_(cfg) {}

    struct Result {
        std::vector<DetectorVerdict> verdicts; // one per station, name order
        std::optional<EcefPosition> consensus;
    };

    // Throws InsufficientStations when fewer than min_stations report.
    Result step(const GnssTime& epoch, const std::map<std::string, RtkSolution>& per_station);

private:
    struct State {
        bool voted_out = false;
        int agree_streak = 0;
    };
    VoteConfig cfg_;
    std::map<std::string, State> states_;
};

} // namespace rtkbench
