// guard.cpp : countermeasure detectors
#include "rtkbench/guard.hpp"

#include <algorithm>
#include <cmath>

#include "rtkbench/errors.hpp"

namespace rtkbench {

const char* reason_name(VerdictReason r) {
    switch (r) {
        case VerdictReason::PositionDrift: return "PositionDrift";
        case VerdictReason::ClockDrift: return "ClockDrift";
        case VerdictReason::ResidualAnomaly: return "ResidualAnomaly";
        case VerdictReason::CorrectionHarmful: return "CorrectionHarmful";
        case VerdictReason::VotedOut: return "VotedOut";
        default: return "Clean";
    }
}

DetectorVerdict GeofenceMonitor::step(const GnssTime& epoch,
                                      const std::optional<RtkSolution>& spp,
                                      const EcefPosition& declared) {
    DetectorVerdict v;
    v.epoch = epoch;
    v.detector = "geofence";
    if (!spp) {
        // no solution, nothing to compare; streak holds
        return v;
    }
    v.score = geometric_range(spp->position, declared);
    if (v.score > cfg_.radius_threshold_m) {
        ++streak_;
    } else {
        streak_ = 0;
    }
    if (streak_ >= cfg_.persistence) {
        v.alarm = true;
        v.reason = VerdictReason::PositionDrift;
    }
    return v;
}

DetectorVerdict ClockMonitor::step(const GnssTime& epoch, std::optional<double> clock_bias_s) {
    DetectorVerdict v;
    v.epoch = epoch;
    v.detector = "clock";
    if (!t0_set_) {
        t0_ = epoch;
        t0_set_ = true;
    }
    if (clock_bias_s) {
        hist_.emplace_back(epoch.diff(t0_), *clock_bias_s);
        while (static_cast<int>(hist_.size()) > cfg_.window) hist_.pop_front();
    }
    if (static_cast<int>(hist_.size()) < 2) return v;

    // least-squares slope over the window
    const double n = static_cast<double>(hist_.size());
    double st = 0, sb = 0;
    for (const auto& [t, b] : hist_) {
        st += t;
        sb += b;
    }
    const double tm = st / n, bm = sb / n;
    double num = 0, den = 0;
    for (const auto& [t, b] : hist_) {
        num += (t - tm) * (b - bm);
        den += (t - tm) * (t - tm);
    }
    if (den <= 0.0) return v;
    const double drift = num / den;
    v.score = drift;
    if (std::fabs(drift - nominal_) > cfg_.max_drift_s_s) {
        v.alarm = true;
        v.reason = VerdictReason::ClockDrift;
    }
    return v;
}

DetectorVerdict ResidualMonitor::step(const GnssTime& epoch, std::optional<double> residual_rms_m) {
    DetectorVerdict v;
    v.epoch = epoch;
    v.detector = "residual";
    if (!residual_rms_m) return v;
    v.score = *residual_rms_m;
    if (v.score > cfg_.threshold_m) {
        ++streak_;
    } else {
        streak_ = 0;
    }
    if (streak_ >= cfg_.persistence) {
        v.alarm = true;
        v.reason = VerdictReason::ResidualAnomaly;
    }
    return v;
}

DetectorVerdict correction_benefit_check(const GnssTime& epoch,
                                         const std::optional<RtkSolution>& standalone,
                                         const std::optional<RtkSolution>& corrected,
                                         const EpochObservations& rover_obs,
                                         const Constellation& sky, const SvClockModel& sv_clock,
                                         const SolverConfig& solver_cfg, const BenefitConfig& cfg) {
    DetectorVerdict v;
    v.epoch = epoch;
    v.detector = "benefit";
    if (!corrected || !standalone) {
        return v; // nothing to validate
    }
    double corrected_metric = 0.0;
    try {
        corrected_metric =
            residual_rms_at(rover_obs, corrected->position, sky, sv_clock, solver_cfg);
    } catch (const Error&) {
        return v;
    }
    const double standalone_metric = std::max(standalone->residual_rms_m, cfg.floor_m);
    const double resid_ratio = corrected_metric / standalone_metric;
    const double cov_c = corrected->covariance_diag[0] + corrected->covariance_diag[1] +
                         corrected->covariance_diag[2];
    const double cov_s = standalone->covariance_diag[0] + standalone->covariance_diag[1] +
                         standalone->covariance_diag[2];
    const double cov_ratio = cov_s > 0.0 ? std::sqrt(cov_c / cov_s) : 0.0;
    v.score = std::max(resid_ratio, cov_ratio);
    if (v.score > cfg.harmful_factor) {
        v.alarm = true;
        v.reason = VerdictReason::CorrectionHarmful;
    }
    return v;
}

StationVote::Result StationVote::step(const GnssTime& epoch,
                                      const std::map<std::string, RtkSolution>& per_station) {
    if (static_cast<int>(per_station.size()) < cfg_.min_stations) {
        throw InsufficientStations("vote_stations: not enough correction streams");
    }
    Result res;

    auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };

    // consensus over stations currently in good standing
    std::vector<double> xs, ys, zs;
    for (const auto& [name, sol] : per_station) {
        if (!states_[name].voted_out) {
            xs.push_back(sol.position.x);
            ys.push_back(sol.position.y);
            zs.push_back(sol.position.z);
        }
    }
    if (xs.empty()) {
        for (const auto& [name, sol] : per_station) {
            xs.push_back(sol.position.x);
            ys.push_back(sol.position.y);
            zs.push_back(sol.position.z);
        }
    }
    const EcefPosition consensus{median_of(xs), median_of(ys), median_of(zs)};
    res.consensus = consensus;

    for (const auto& [name, sol] : per_station) {
        State& st = states_[name];
        DetectorVerdict v;
        v.epoch = epoch;
        v.detector = "vote:" + name;
        v.score = geometric_range(sol.position, consensus);
        const bool agrees = v.score <= cfg_.outlier_threshold_m;
        if (st.voted_out) {
            st.agree_streak = agrees ? st.agree_streak + 1 : 0;
            if (st.agree_streak >= cfg_.rejoin_epochs) {
                st.voted_out = false;
                st.agree_streak = 0;
            }
        } else if (!agrees) {
            st.voted_out = true;
            st.agree_streak = 0;
        }
        if (st.voted_out) {
            v.alarm = true;
            v.reason = VerdictReason::VotedOut;
        }
        res.verdicts.push_back(v);
    }
    return res;
}

} // namespace rtkbench
