// solver.hpp : rover positioning engine (SPP, DGNSS single difference, RTK
// double difference with float/fixed ambiguities) and the epoch pipeline.
#pragma once

#include <array>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "rtkbench/constellation.hpp"
#include "rtkbench/geo.hpp"
#include "rtkbench/obs.hpp"

namespace rtkbench {

enum class SolutionStatus : std::uint8_t { None = 0, Single, Dgnss, Float, Fix };

const char* status_name(SolutionStatus s);

struct RtkSolution {
    GnssTime epoch{};
    EcefPosition position{};
    SolutionStatus status = SolutionStatus::None;
    double clock_bias_s = 0.0;
    int n_sats = 0;
    double residual_rms_m = 0.0;
    std::array<double, 3> covariance_diag{0.0, 0.0, 0.0}; // ECEF axes
};

struct DoubleDifference {
    SatelliteId ref_sat; // highest elevation in its system
    SatelliteId other_sat;
    BandCode band = BandCode::L1E1;
    double dd_pseudorange_m = 0.0;
    double dd_carrier_cyc = 0.0;
    double dd_ambiguity_cyc = 0.0; // float estimate; integer value once fixed
    bool carrier_valid = false;
    bool fixed = false;
};

enum class FallbackPolicy : std::uint8_t { Strict, FallbackToSingle };

struct SolverConfig {
    double elevation_mask_rad = deg2rad(10.0);
    double code_sigma_45_m = 0.05;       // weight model at 45 dB-Hz
    double carrier_code_ratio = 100.0;   // carrier sigma = code sigma / ratio
    double iono_zenith_m = 3.0;          // a-priori atmosphere used by SPP
    double tropo_zenith_m = 2.4;
    double convergence_m = 1e-4;
    int max_iterations = 20;
    double max_condition = 1e8;
    double ratio_threshold = 3.0;        // integer ambiguity acceptance
    double dgnss_baseline_limit_m = 100e3;
    double fix_baseline_limit_m = 2e3;   // beyond: Fix downgraded to Float
    double correction_max_age_s = 2.0;   // older corrections treated as absent
    int fix_min_epochs = 10;             // float averaging before rounding
    double min_lock_s = 5.0;             // carrier usable after this lock time
    double fix_residual_limit_m = 0.08;  // held-fix carrier residual gate
};

// Assembled per-epoch view of one station's correction stream.
struct StationCorrections {
    std::uint16_t station_id = 0;
    EcefPosition declared_position{};
    GnssTime epoch{};
    std::vector<Observation> obs;
};

// Iterative weighted least squares over position and receiver clock.
// Throws InsufficientGeometry (< 4 sats or condition number too high) or
// NoConvergence.
RtkSolution spp_solve(const EpochObservations& obs, const EcefPosition& guess,
                      const Constellation& sky, const SvClockModel& sv_clock,
                      const SolverConfig& cfg);

// Residual RMS of the receiver's own code observations evaluated at a fixed
// position (clock re-estimated); quality metric for the benefit check.
double residual_rms_at(const EpochObservations& obs, const EcefPosition& position,
                       const Constellation& sky, const SvClockModel& sv_clock,
                       const SolverConfig& cfg);

// Single-difference pseudorange solution relative to the declared station
// position. Throws InsufficientCommonSats or BaselineTooLong.
RtkSolution dgnss_solve(const EpochObservations& rover, const StationCorrections& corr,
                        const EcefPosition& guess, const Constellation& sky,
                        const SolverConfig& cfg);

// Carrier-phase double-difference engine with per-pair ambiguity state.
class RtkEngine {
public:
    explicit RtkEngine(SolverConfig cfg) : cfg_(cfg) {}

    RtkSolution solve(const EpochObservations& rover, const StationCorrections& corr,
                      const EcefPosition& guess, const Constellation& sky);

    const std::vector<DoubleDifference>& last_dds() const { return last_dds_; }
    void reset();

    const SolverConfig& config() const { return cfg_; }

private:
    struct PairKey {
        System sys;
        int prn;
        BandCode band;
        bool operator<(const PairKey& o) const {
            if (sys != o.sys) return sys < o.sys;
            if (prn != o.prn) return prn < o.prn;
            return band < o.band;
        }
    };
    struct PairState {
        double float_sum = 0.0;
        int epochs = 0;
        double last_float = 0.0;
        std::optional<int> fixed;
        double mean() const { return epochs ? float_sum / epochs : 0.0; }
    };

    SolverConfig cfg_;
    std::map<System, int> ref_prn_;
    std::map<PairKey, PairState> pairs_;
    std::vector<DoubleDifference> last_dds_;
};

// Attempts rtk, then dgnss, then the fallback policy; solver errors become
// status downgrades. Buffers recent rover epochs so corrections up to
// correction_max_age_s old are paired with the matching rover epoch.
class RoverPilot {
public:
    RoverPilot(SolverConfig cfg, FallbackPolicy policy, const Constellation* sky,
               SvClockModel sv_clock, EcefPosition initial_guess);

    RtkSolution epoch_pipeline(const EpochObservations& rover_obs,
                               const std::optional<StationCorrections>& corr,
                               const GnssTime& wall);

    FallbackPolicy policy() const { return policy_; }
    void set_policy(FallbackPolicy p) { policy_ = p; }
    RtkEngine& engine() { return engine_; }
    const SolverConfig& config() const { return cfg_; }
    EcefPosition current_guess() const;

private:
    SolverConfig cfg_;
    FallbackPolicy policy_;
    const Constellation* sky_;
    SvClockModel svclk_;
    EcefPosition initial_guess_;
    std::optional<EcefPosition> last_position_;
    RtkEngine engine_;
    std::deque<EpochObservations> buffer_;
};

} // namespace rtkbench
