// attack.hpp : adversary actions on observation streams
#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "rtkbench/constellation.hpp"
#include "rtkbench/obs.hpp"

namespace rtkbench {

// Nominal received GNSS signal power used for J/S bookkeeping.
constexpr double kNominalSignalDbm = -128.5;

struct JamAttack {
    double power_dbm = 0.0;
    double bandwidth_hz = 25e6;
    BandCode center_band = BandCode::L1E1;
    // BPSK modulation matched to one system gains 6 dB against it
    std::optional<System> matched_system;
    double processing_gain_db = 36.0; // receiver rejection subtracted from J/S
};

struct SpoofSyncAttack {
    EcefPosition target_position{};     // attack-implied position end point
    double clock_ramp_s_per_s = 0.0;    // induced clock offset growth
    double position_ramp_m_per_s = 0.0; // offset growth toward target
    std::set<BandCode> bands{BandCode::L1E1, BandCode::L2E5b};
    std::set<System> systems{System::SysG, System::SysE};
    double power_advantage_db = 10.0;
    double atmos_bias_m = 0.0; // added zenith-mapped delay (attacker goal iii)
};

struct SpoofAsyncAttack {
    SpoofSyncAttack spoof;
    int capture_delay_epochs = 5; // incoherent phase acts as jamming first
};

struct PseudorangeRampAttack {
    double rate_m_per_s = 0.0;
    std::set<BandCode> bands{BandCode::L1E1, BandCode::L2E5b};
    std::set<System> systems{System::SysG, System::SysE};
};

struct MeaconAttack {
    double delay_s = 1.0; // >= one epoch
};

using AttackKind =
    std::variant<JamAttack, SpoofSyncAttack, SpoofAsyncAttack, PseudorangeRampAttack, MeaconAttack>;

struct AttackWindow {
    double start_s = 0.0; // relative to scenario start, inclusive
    double end_s = 0.0;   // exclusive
    AttackKind kind;
    std::string victim = "station";
};

struct AttackSchedule {
    std::vector<AttackWindow> windows; // may overlap
    EcefPosition attacker_position{};  // jammer/spoofer site
};

enum class ChannelCapture : std::uint8_t { Authentic = 0, Contested, Captured };

struct CaptureState {
    std::map<std::pair<SatelliteId, BandCode>, ChannelCapture> channel;
    std::map<std::pair<SatelliteId, BandCode>, int> epochs_in_contest;
    std::optional<double> capture_time_s; // window-relative time of first capture
};

struct CaptureRule {
    double min_advantage_db = 2.0;
    int contest_epochs = 2;
};

// Per-channel C/N0 reduction and drops. cn0' = cn0 - max(0, J/S - PG), with a
// 6 dB bonus against a matched system; channels below the code threshold are
// dropped, channels below the phase threshold lose carrier lock. Surviving
// channels get noise re-scaled to match the degraded C/N0. Channels in
// `exclude` (captured by a concurrent spoofer) pass through untouched.
EpochObservations apply_jamming(const EpochObservations& epoch_obs, const JamAttack& jam,
                                const EcefPosition& jammer, const EcefPosition& victim,
                                const ErrorModel& model,
                                const std::set<std::pair<SatelliteId, BandCode>>* exclude = nullptr);

struct SpoofContext {
    const Constellation* sky = nullptr;
    EcefPosition victim_truth{};
    double window_elapsed_s = 0.0; // time since window start
    double epoch_interval_s = 1.0;
    CaptureRule rule{};
};

// Synchronous lift-off: channels are code-aligned from the start, captured
// after the contest dwell, then rewritten consistently (code and carrier imply
// the attack trajectory).
EpochObservations apply_spoof_sync(const EpochObservations& epoch_obs, const SpoofSyncAttack& spoof,
                                   CaptureState& capture, const SpoofContext& ctx);

// Overpowered unsynchronized spoofing: jamming-like during the capture delay,
// then step capture.
EpochObservations apply_spoof_async(const EpochObservations& epoch_obs,
                                    const SpoofAsyncAttack& spoof, CaptureState& capture,
                                    const SpoofContext& ctx, const ErrorModel& model);

EpochObservations apply_pseudorange_ramp(const EpochObservations& epoch_obs,
                                         const PseudorangeRampAttack& ramp,
                                         double window_elapsed_s);

// Replays the buffered authentic set from (t - delay); whole epochs come from
// the buffer (signal time stamps kept), the sub-epoch residual is added as
// c * delay' to every pseudorange.
EpochObservations apply_meacon(const std::deque<EpochObservations>& history, double delay_s,
                               double epoch_interval_s);

// Applies every active window of the schedule for one victim, in order.
// Owns capture state and the meacon replay buffer.
class AttackEngine {
public:
    AttackEngine(const AttackSchedule& schedule, std::string victim, const Constellation* sky,
                 double epoch_interval_s, const ErrorModel& model);

    EpochObservations apply(const EpochObservations& authentic, const EcefPosition& victim_truth,
                            double scenario_time_s);

    // channels dropped by jamming at the last epoch (feedback for the
    // synthesizer's lock bookkeeping)
    const std::vector<std::pair<SatelliteId, BandCode>>& lost_channels() const { return lost_; }

    const CaptureState* capture_state(std::size_t window_index) const;

private:
    const AttackSchedule& schedule_;
    std::string victim_;
    const Constellation* sky_;
    double interval_;
    ErrorModel model_;
    std::map<std::size_t, CaptureState> captures_;
    std::deque<EpochObservations> history_;
    std::vector<std::pair<SatelliteId, BandCode>> lost_;
};

} // namespace rtkbench
