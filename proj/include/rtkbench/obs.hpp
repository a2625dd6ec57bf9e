// obs.hpp : per-epoch observation synthesis (pseudorange, carrier phase, C/N0)
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rtkbench/constellation.hpp"
#include "rtkbench/geo.hpp"
#include "rtkbench/gnss_time.hpp"

namespace rtkbench {

// Observables live on fixed binary lattices so that receiver-common and
// satellite-common terms cancel exactly in single/double differences.
constexpr double kMeterLattice = 67108864.0;  // 2^26 per meter
constexpr double kCycleLattice = 16777216.0;  // 2^24 per cycle

inline double snap_m(double x) { return std::nearbyint(x * kMeterLattice) / kMeterLattice; }
inline double snap_cyc(double x) { return std::nearbyint(x * kCycleLattice) / kCycleLattice; }

// Receiver tracking thresholds (dB-Hz)
constexpr double kCodeLockCn0 = 28.0;  // below: loss of lock, observation dropped
constexpr double kPhaseLockCn0 = 32.0; // below: carrier unusable, lock time resets

struct ErrorModel {
    double iono_zenith_delay_m = 3.0; // at L1/E1; scaled by (f_L1/f)^2 per band
    double tropo_zenith_delay_m = 2.4;
    double multipath_sigma_m = 0.0;          // elevation-weighted (cos(el)) Gaussian
    double code_noise_sigma_m_45 = 0.0;      // at 45 dB-Hz
    double phase_noise_sigma_cyc_45 = 0.0;   // at 45 dB-Hz
    std::uint64_t seed = 0;
    // Elevations for the atmospheric mapping are evaluated at this anchor when
    // set (receivers < 100 km apart share one anchor so differencing cancels
    // the atmosphere exactly); defaults to the receiver itself.
    std::optional<EcefPosition> atmosphere_anchor;
};

struct ReceiverClock {
    double bias_s = 0.0;          // |bias| < 1e-2
    double drift_s_s = 0.0;
    double random_walk_sigma = 0.0; // s/sqrt(s)
};

struct Observation {
    SatelliteId sat;
    BandCode band = BandCode::L1E1;
    double pseudorange_m = 0.0;
    double carrier_cycles = 0.0;
    double cn0_dbhz = 0.0;
    double lock_time_s = 0.0;
    GnssTime epoch{};
};

struct EpochObservations {
    std::string receiver;
    GnssTime epoch{};
    std::vector<Observation> obs; // at most one per (sat, band), sorted
    double clock_bias_truth_s = 0.0; // hidden from solvers; used by oracles
};

// sigma(cn0) = sigma45 * 10^((45 - cn0)/20)
double cn0_noise_scale(double cn0_dbhz);
// 45 + 10*log10(sin(el)/sin(45 deg)), clamped to [30, 52]
double nominal_cn0(double elevation_rad);
// iono scale factor (f_L1/f_band)^2
double iono_band_factor(System sys, BandCode band);

// PR = range + iono + tropo + c*(rx_bias - sv_bias) + mp + noise (Eq. of the
// code measurement); terms are lattice-snapped so clock terms cancel exactly
// under differencing.
double synth_pseudorange(double range_m, const ReceiverClock& rx_clock, double sv_clock_bias_s,
                         double iono_m, double tropo_m, double multipath_m, double noise_m);

// Phi = (range - iono + tropo + c*(rx_bias - sv_bias))/lambda + N + noise, in
// cycles; ionosphere enters with opposite sign to code (phase advance).
double synth_carrier(double range_m, const Band& band, int ambiguity_cycles,
                     const ReceiverClock& rx_clock, double sv_clock_bias_s, double iono_m,
                     double tropo_m, double phase_noise_cyc);

// Deterministic per-satellite clock model: seeded fixed offset plus linear
// drift; identical value for every receiver at the same t.
class SvClockModel {
public:
    SvClockModel() = default;
    SvClockModel(std::uint64_t seed, const GnssTime& t0) : seed_(seed), t0_(t0) {}

    double bias_s(const SatelliteId& sat, const GnssTime& t) const;

private:
    std::uint64_t seed_ = 0;
    GnssTime t0_{};
};

struct ReceiverBands {
    std::set<System> systems{System::SysG, System::SysE};
    std::set<BandCode> bands{BandCode::L1E1, BandCode::L2E5b};
};

// Stateful per-receiver synthesizer. Holds the ambiguity table (one integer N
// per (sat, band), drawn at first lock and kept until a slip) and lock times.
class ObservationSynthesizer {
public:
    ObservationSynthesizer(std::string receiver_id, ReceiverBands bands, ErrorModel model,
                           SvClockModel sv_clock, const Constellation* sky,
                           double elevation_mask_rad, double epoch_interval_s = 1.0);

    EpochObservations epoch(const EcefPosition& truth_position, const ReceiverClock& clock,
                            const GnssTime& t);

    // Executor feedback: channel lost downstream (jam drop); next sight draws
    // a fresh ambiguity and restarts lock time.
    void notify_lock_lost(const SatelliteId& sat, BandCode band);

    // Truth table access for oracles/tests.
    std::optional<int> ambiguity(const SatelliteId& sat, BandCode band) const;

    const ErrorModel& model() const { return model_; }
    const SvClockModel& sv_clock() const { return svclk_; }

private:
    struct Channel {
        int ambiguity = 0;
        double lock_time_s = 0.0;
        long last_seen_index = -2; // epoch counter at last synthesis
        int draws = 0;             // ambiguity redraw counter (keys the RNG)
    };

    std::string receiver_;
    std::uint64_t receiver_hash_;
    ReceiverBands bands_;
    ErrorModel model_;
    SvClockModel svclk_;
    const Constellation* sky_;
    double mask_rad_;
    double interval_s_;
    long epoch_index_ = -1;
    std::map<std::pair<SatelliteId, BandCode>, Channel> channels_;
};

} // namespace rtkbench
