// station.cpp : survey-in, TIME-only operation, correction generation
#include "rtkbench/station.hpp"

#include <cmath>

#include "rtkbench/errors.hpp"

namespace rtkbench {

double SurveyState::sigma_m() const {
    if (sample_count < 2) return sample_count == 0 ? 1e9 : 1e6;
    const double n = sample_count;
    const double var_sum = (m2.x + m2.y + m2.z) / (n - 1.0);
    return std::sqrt(var_sum / n);
}

SurveyState survey_in_step(const SurveyState& state, const EcefPosition& spp_position,
                           const SurveyConfig& cfg, double epoch_interval_s) {
    SurveyState s = state;
    s.sample_count += 1;
    const EcefPosition delta = spp_position - s.mean;
    s.mean = s.mean + delta * (1.0 / s.sample_count);
    const EcefPosition delta2 = spp_position - s.mean;
    s.m2 = {s.m2.x + delta.x * delta2.x, s.m2.y + delta.y * delta2.y, s.m2.z + delta.z * delta2.z};
    s.converged = (s.sample_count * epoch_interval_s >= cfg.min_duration_s) &&
                  (s.sigma_m() <= cfg.target_sigma_m);
    return s;
}

EpochObservations TrackingSmoother::apply(const EpochObservations& in) {
    ++epoch_counter_;
    EpochObservations out = in;
    const double decay = std::exp(-interval_ / tau_s_);
    for (Observation& o : out.obs) {
        Channel& c = ch_[{o.sat, o.band}];
        const bool continuous = c.have_prev && c.last_epoch == epoch_counter_ - 1 &&
                                o.lock_time_s >= c.prev_lock;
        if (!continuous) {
            // reacquisition: filter restarts transparent
            c = Channel{};
        }
        if (c.have_prev) {
            const double delta = o.pseudorange_m - c.prev_in_pr;
            double jump = 0.0;
            if (c.have_rate && std::fabs(delta - c.rate_m_s * interval_) > gate_m_) {
                jump = delta - c.rate_m_s * interval_;
            }
            c.residual_m += jump;
            c.rate_m_s = (delta - jump) / interval_;
            c.have_rate = true;
        }
        c.residual_m *= decay;
        c.prev_in_pr = o.pseudorange_m;
        c.prev_lock = o.lock_time_s;
        c.have_prev = true;
        c.last_epoch = epoch_counter_;
        if (c.residual_m != 0.0) {
            const double lam = band_of(o.sat.system, o.band).wavelength_m;
            o.pseudorange_m -= c.residual_m;
            o.carrier_cycles -= c.residual_m / lam;
        }
    }
    return out;
}

ReferenceStation::ReferenceStation(StationConfig cfg, SolverConfig solver_cfg,
                                   const Constellation* sky, SvClockModel sv_clock)
    : cfg_(cfg),
      solver_cfg_(solver_cfg),
      sky_(sky),
      svclk_(sv_clock),
      mode_(cfg.mode),
      smoother_(cfg.smoothing_gate_m, cfg.smoothing_tau_s, cfg.epoch_interval_s) {
    if (cfg_.declared_position.norm() == 0.0) cfg_.declared_position = cfg_.truth_position;
}

StationEpochOutput ReferenceStation::step(const EpochObservations& post_attack,
                                          const GnssTime& wall) {
    StationEpochOutput out;
    out.wall = wall;
    out.observations = cfg_.smoothing ? smoother_.apply(post_attack) : post_attack;

    try {
        out.monitor_spp =
            spp_solve(out.observations, cfg_.declared_position, *sky_, svclk_, solver_cfg_);
        // the receiver's own time is wall time; the signals carry the stamp
        out.reported_clock_bias_s =
            out.monitor_spp->clock_bias_s + wall.diff(out.observations.epoch);
    } catch (const Error&) {
        out.monitor_spp.reset();
    }

    if (mode_ == StationModeKind::SurveyIn) {
        if (out.monitor_spp) {
            survey_ = survey_in_step(survey_, out.monitor_spp->position, cfg_.survey,
                                     cfg_.epoch_interval_s);
        }
        if (survey_.converged) {
            // survey establishes the reference: freeze and switch to TIME mode
            cfg_.declared_position = survey_.mean;
            mode_ = StationModeKind::TimeOnly;
        }
    }

    out.declared_position = cfg_.declared_position;
    out.declared_valid = mode_ != StationModeKind::SurveyIn;
    out.stream_enabled = out.declared_valid && !stream_blocked_;
    return out;
}

std::vector<CorrectionMessage> ReferenceStation::make_corrections(
    const StationEpochOutput& out) const {
    if (!out.stream_enabled) throw StreamDisabled("make_corrections: correction stream disabled");
    const GnssTime& t = out.observations.epoch;

    CorrectionMessage info;
    info.type = MessageType::StationInfo;
    info.station_id = cfg_.station_id;
    info.gps_week = static_cast<std::uint16_t>(t.week);
    info.tow_ms = static_cast<std::uint32_t>(std::llround(t.tow_s * 1000.0));
    info.position = out.declared_position;

    CorrectionMessage obs;
    obs.type = MessageType::Observations;
    obs.station_id = cfg_.station_id;
    obs.gps_week = info.gps_week;
    obs.tow_ms = info.tow_ms;
    obs.obs = out.observations.obs;

    return {info, obs};
}

void CorrectionAssembler::push(const CorrectionMessage& msg) {
    if (msg.type == MessageType::StationInfo) {
        declared_ = msg.position;
        return;
    }
    if (!declared_) return; // observations without a position yet
    StationCorrections sc;
    sc.station_id = msg.station_id;
    sc.declared_position = *declared_;
    sc.epoch = msg.time();
    sc.obs = msg.obs;
    latest_ = std::move(sc);
}

} // namespace rtkbench
