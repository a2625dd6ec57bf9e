// station.hpp : reference-station receiver model
#pragma once

#include <map>
#include <optional>
#include <vector>

#include "rtkbench/caster.hpp"
#include "rtkbench/obs.hpp"
#include "rtkbench/solver.hpp"

namespace rtkbench {

struct SurveyConfig {
    double target_sigma_m = 0.5;
    double min_duration_s = 300.0;
};

struct SurveyState {
    int sample_count = 0;
    EcefPosition mean{};
    EcefPosition m2{}; // per-axis sum of squared deviations (Welford)
    bool converged = false;

    // standard error of the mean position (3D)
    double sigma_m() const;
};

// Incremental mean/covariance update; convergence requires both the minimum
// duration and the sigma target.
SurveyState survey_in_step(const SurveyState& state, const EcefPosition& spp_position,
                           const SurveyConfig& cfg, double epoch_interval_s);

enum class StationModeKind : std::uint8_t { SurveyIn, TimeOnly, Static };

struct StationEpochOutput {
    EcefPosition declared_position{};
    bool declared_valid = false;
    EpochObservations observations;            // post-attack (and post-smoothing)
    std::optional<RtkSolution> monitor_spp;    // from raw measurements
    double reported_clock_bias_s = 0.0;        // solved clock + signal/wall gap
    bool stream_enabled = false;
    GnssTime wall{};
};

// Per-channel tracking filter used when receiver smoothing is enabled: epoch
// deltas are followed, but a step larger than the gate (as after a spoofer
// release) is refused and bled off with time constant tau. A lock reset
// clears the channel state.
class TrackingSmoother {
public:
    TrackingSmoother(double gate_m, double tau_s, double epoch_interval_s)
        : gate_m_(gate_m), tau_s_(tau_s), interval_(epoch_interval_s) {}

    EpochObservations apply(const EpochObservations& in);

private:
    struct Channel {
        bool have_prev = false;
        bool have_rate = false;
        double prev_in_pr = 0.0;
        double rate_m_s = 0.0;
        double residual_m = 0.0;
        double prev_lock = -1.0;
        long last_epoch = -2;
    };
    double gate_m_;
    double tau_s_;
    double interval_;
    long epoch_counter_ = -1;
    std::map<std::pair<SatelliteId, BandCode>, Channel> ch_;
};

struct StationConfig {
    std::uint16_t station_id = 1;
    StationModeKind mode = StationModeKind::Static;
    EcefPosition truth_position{};    // actual antenna location
    EcefPosition declared_position{}; // reported location (defaults to truth)
    SurveyConfig survey{};
    ReceiverBands bands{};
    bool smoothing = false;
    double smoothing_gate_m = 8.0;
    double smoothing_tau_s = 40.0;
    double epoch_interval_s = 1.0;
};

class ReferenceStation {
public:
    ReferenceStation(StationConfig cfg, SolverConfig solver_cfg, const Constellation* sky,
                     SvClockModel sv_clock);

    // One epoch of the station state machine over the post-attack stream.
    StationEpochOutput step(const EpochObservations& post_attack, const GnssTime& wall);

    // Framed corrections: declared position (type 1) plus the station's full
    // raw observation set (type 2). Throws StreamDisabled when the stream is
    // off (survey not converged or guard action).
    std::vector<CorrectionMessage> make_corrections(const StationEpochOutput& out) const;

    const SurveyState& survey_state() const { return survey_; }
    StationModeKind mode() const { return mode_; }
    const StationConfig& config() const { return cfg_; }

    // guard action: force the correction stream off/on
    void set_stream_blocked(bool blocked) { stream_blocked_ = blocked; }
    bool stream_blocked() const { return stream_blocked_; }

private:
    StationConfig cfg_;
    SolverConfig solver_cfg_;
    const Constellation* sky_;
    SvClockModel svclk_;
    StationModeKind mode_;
    SurveyState survey_;
    TrackingSmoother smoother_;
    bool stream_blocked_ = false;
};

// Rover-side assembly of the two message types into a per-epoch view.
class CorrectionAssembler {
public:
    void push(const CorrectionMessage& msg);
    const std::optional<StationCorrections>& latest() const { return latest_; }

private:
    std::optional<EcefPosition> declared_;
    std::optional<StationCorrections> latest_;
    std::vector<Observation> pending_obs_;
};

} // namespace rtkbench
