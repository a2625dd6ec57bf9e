// attack.cpp : jamming, spoofing, ramp and meacon transforms
#include "rtkbench/attack.hpp"

#include <algorithm>
#include <cmath>

#include "rtkbench/errors.hpp"
#include "rtkbench/rng.hpp"

namespace rtkbench {

namespace {

double free_space_path_loss_db(double distance_m, double frequency_hz) {
    return 20.0 * std::log10(4.0 * kPi * std::max(distance_m, 1.0) * frequency_hz / kSpeedOfLight);
}

std::int64_t epoch_ms_key(const GnssTime& t) {
    return static_cast<std::int64_t>(std::llround(t.diff(GnssTime{}) * 1000.0));
}

// Degrade one observation to cn0_new: extra seeded noise brings the total
// noise up to the C/N0 law, carrier lock is lost below the phase threshold.
void degrade_channel(Observation& o, double cn0_new, const ErrorModel& model,
                     std::uint64_t receiver_hash, const char* stream) {
    const double s_old = cn0_noise_scale(o.cn0_dbhz);
    const double s_new = cn0_noise_scale(cn0_new);
    const double extra = std::sqrt(std::max(0.0, s_new * s_new - s_old * s_old));
    RngKey key = RngKey(model.seed)
                     .with(stream)
                     .with(receiver_hash)
                     .with(static_cast<int>(o.sat.system))
                     .with(o.sat.prn)
                     .with(static_cast<int>(o.band))
                     .with(epoch_ms_key(o.epoch));
    o.pseudorange_m += snap_m(model.code_noise_sigma_m_45 * extra * key.gaussian(0));
    o.cn0_dbhz = cn0_new;
    if (cn0_new < kPhaseLockCn0) {
        o.lock_time_s = 0.0; // carrier unusable while tracking churns
    } else {
        o.carrier_cycles += snap_cyc(model.phase_noise_sigma_cyc_45 * extra * key.gaussian(1));
    }
}

} // namespace

EpochObservations apply_jamming(const EpochObservations& epoch_obs, const JamAttack& jam,
                                const EcefPosition& jammer, const EcefPosition& victim,
                                const ErrorModel& model,
                                const std::set<std::pair<SatelliteId, BandCode>>* exclude) {
    EpochObservations out = epoch_obs;
    out.obs.clear();
    const std::uint64_t rxh = fnv1a(epoch_obs.receiver);
    const double d = geometric_range(jammer, victim);
    for (Observation o : epoch_obs.obs) {
        if (o.band != jam.center_band ||
            (exclude && exclude->count({o.sat, o.band}))) {
            out.obs.push_back(o);
            continue;
        }
        const double f = carrier_frequency_hz(o.sat.system, o.band);
        const double rx_dbm = jam.power_dbm - free_space_path_loss_db(d, f);
        double js = rx_dbm - kNominalSignalDbm;
        if (jam.matched_system && *jam.matched_system == o.sat.system) js += 6.0;
        const double reduction = std::max(0.0, js - jam.processing_gain_db);
        const double cn0_new = o.cn0_dbhz - reduction;
        if (cn0_new < kCodeLockCn0) continue; // loss of lock
        if (reduction > 0.0) degrade_channel(o, cn0_new, model, rxh, "jamnoise");
        out.obs.push_back(o);
    }
    return out;
}

namespace {

bool targeted(const Observation& o, const std::set<BandCode>& bands,
              const std::set<System>& systems) {
    return bands.count(o.band) != 0 && systems.count(o.sat.system) != 0;
}

// Consistent rewrite of a captured channel: code and carrier both imply the
// attack position/clock (deltas relative to the authentic geometry).
void rewrite_captured(Observation& o, const SpoofSyncAttack& spoof, const SpoofContext& ctx,
                      double elapsed_since_capture, bool step_offsets) {
    const EcefPosition sp = ctx.sky->position(o.sat, o.epoch);
    EcefPosition dir = spoof.target_position - ctx.victim_truth;
    const double dist = dir.norm();
    double offset_mag = 0.0;
    if (dist > 0.0) {
        offset_mag = step_offsets ? dist
                                  : std::min(spoof.position_ramp_m_per_s * elapsed_since_capture, dist);
    }
    const EcefPosition p_atk =
        dist > 0.0 ? ctx.victim_truth + dir * (offset_mag / dist) : ctx.victim_truth;
    const double drho = geometric_range(sp, p_atk) - geometric_range(sp, ctx.victim_truth);
    const double clock_m = kSpeedOfLight * spoof.clock_ramp_s_per_s * elapsed_since_capture;
    double bias = 0.0;
    if (spoof.atmos_bias_m != 0.0) {
        const double el = line_of_sight(sp, ctx.victim_truth).elevation_rad;
        bias = spoof.atmos_bias_m / std::max(std::sin(el), 0.03);
    }
    const double lam = band_of(o.sat.system, o.band).wavelength_m;
    o.pseudorange_m += snap_m(drho) + snap_m(clock_m) + snap_m(bias);
    o.carrier_cycles += snap_cyc(drho / lam) + snap_cyc(clock_m / lam) + snap_cyc(bias / lam);
}

void step_capture_state(CaptureState& capture, const Observation& o, const SpoofContext& ctx,
                        double power_advantage_db, bool immediate) {
    const auto key = std::make_pair(o.sat, o.band);
    auto& st = capture.channel[key];
    if (st == ChannelCapture::Authentic) {
        st = ChannelCapture::Contested;
        capture.epochs_in_contest[key] = 0;
    }
    if (st == ChannelCapture::Contested) {
        int& dwell = capture.epochs_in_contest[key];
        if (immediate || (power_advantage_db >= ctx.rule.min_advantage_db &&
                          dwell >= ctx.rule.contest_epochs)) {
            st = ChannelCapture::Captured;
            if (!capture.capture_time_s) capture.capture_time_s = ctx.window_elapsed_s;
        } else {
            ++dwell;
        }
    }
}

} // namespace

EpochObservations apply_spoof_sync(const EpochObservations& epoch_obs, const SpoofSyncAttack& spoof,
                                   CaptureState& capture, const SpoofContext& ctx) {
    if (spoof.position_ramp_m_per_s < 0.0 || spoof.clock_ramp_s_per_s < 0.0) {
        throw ConfigError("apply_spoof_sync: negative ramp");
    }
    EpochObservations out = epoch_obs;
    for (Observation& o : out.obs) {
        if (!targeted(o, spoof.bands, spoof.systems)) continue;
        step_capture_state(capture, o, ctx, spoof.power_advantage_db, false);
        if (capture.channel[{o.sat, o.band}] == ChannelCapture::Captured) {
            const double elapsed = ctx.window_elapsed_s - *capture.capture_time_s;
            rewrite_captured(o, spoof, ctx, elapsed, false);
        }
    }
    return out;
}

EpochObservations apply_spoof_async(const EpochObservations& epoch_obs,
                                    const SpoofAsyncAttack& spoof, CaptureState& capture,
                                    const SpoofContext& ctx, const ErrorModel& model) {
    if (spoof.spoof.position_ramp_m_per_s < 0.0 || spoof.spoof.clock_ramp_s_per_s < 0.0) {
        throw ConfigError("apply_spoof_async: negative ramp");
    }
    EpochObservations out = epoch_obs;
    const double delay_s = spoof.capture_delay_epochs * ctx.epoch_interval_s;
    const std::uint64_t rxh = fnv1a(epoch_obs.receiver);

    if (ctx.window_elapsed_s < delay_s) {
        // incoherent interference phase: acts as jamming at J/S = advantage
        EpochObservations filtered = out;
        filtered.obs.clear();
        for (Observation o : out.obs) {
            if (!targeted(o, spoof.spoof.bands, spoof.spoof.systems)) {
                filtered.obs.push_back(o);
                continue;
            }
            const double cn0_new = o.cn0_dbhz - std::max(0.0, spoof.spoof.power_advantage_db);
            if (cn0_new < kCodeLockCn0) continue;
            degrade_channel(o, cn0_new, model, rxh, "spoofjam");
            filtered.obs.push_back(o);
        }
        return filtered;
    }

    for (Observation& o : out.obs) {
        if (!targeted(o, spoof.spoof.bands, spoof.spoof.systems)) continue;
        step_capture_state(capture, o, ctx, spoof.spoof.power_advantage_db, true);
        if (capture.channel[{o.sat, o.band}] == ChannelCapture::Captured) {
            const double elapsed = ctx.window_elapsed_s - *capture.capture_time_s;
            rewrite_captured(o, spoof.spoof, ctx, elapsed, true);
        }
    }
    return out;
}

EpochObservations apply_pseudorange_ramp(const EpochObservations& epoch_obs,
                                         const PseudorangeRampAttack& ramp,
                                         double window_elapsed_s) {
    EpochObservations out = epoch_obs;
    const double shift = ramp.rate_m_per_s * window_elapsed_s;
    for (Observation& o : out.obs) {
        if (!targeted(o, ramp.bands, ramp.systems)) continue;
        const double lam = band_of(o.sat.system, o.band).wavelength_m;
        o.pseudorange_m += snap_m(shift);
        o.carrier_cycles += snap_cyc(shift / lam);
    }
    return out;
}

EpochObservations apply_meacon(const std::deque<EpochObservations>& history, double delay_s,
                               double epoch_interval_s) {
    if (delay_s < epoch_interval_s) throw ConfigError("apply_meacon: delay below one epoch");
    if (history.empty()) throw ConfigError("apply_meacon: empty history");
    const auto k = static_cast<std::size_t>(std::floor(delay_s / epoch_interval_s + 1e-9));
    const double residual_s = delay_s - static_cast<double>(k) * epoch_interval_s;
    const std::size_t idx = history.size() > k ? history.size() - 1 - k : 0;
    EpochObservations out = history[idx];
    const double shift = snap_m(kSpeedOfLight * residual_s);
    for (Observation& o : out.obs) o.pseudorange_m += shift;
    return out;
}

AttackEngine::AttackEngine(const AttackSchedule& schedule, std::string victim,
                           const Constellation* sky, double epoch_interval_s,
                           const ErrorModel& model)
    : schedule_(schedule), victim_(std::move(victim)), sky_(sky), interval_(epoch_interval_s),
      model_(model) {}

const CaptureState* AttackEngine::capture_state(std::size_t window_index) const {
    auto it = captures_.find(window_index);
    return it == captures_.end() ? nullptr : &it->second;
}

EpochObservations AttackEngine::apply(const EpochObservations& authentic,
                                      const EcefPosition& victim_truth, double scenario_time_s) {
    history_.push_back(authentic);
    EpochObservations out = authentic;

    // channels currently captured by any active spoof window (a jammer in the
    // same schedule leaves the adversary's own signals alone)
    std::set<std::pair<SatelliteId, BandCode>> captured;
    for (std::size_t i = 0; i < schedule_.windows.size(); ++i) {
        const AttackWindow& wdw = schedule_.windows[i];
        const bool active = wdw.victim == victim_ && scenario_time_s >= wdw.start_s &&
                            scenario_time_s < wdw.end_s;
        if (!active) {
            captures_.erase(i); // release is immediate at the observation level
            continue;
        }
        if (auto it = captures_.find(i); it != captures_.end()) {
            for (const auto& [key, st] : it->second.channel) {
                if (st == ChannelCapture::Captured) captured.insert(key);
            }
        }
    }

    for (std::size_t i = 0; i < schedule_.windows.size(); ++i) {
        const AttackWindow& wdw = schedule_.windows[i];
        if (wdw.victim != victim_ || scenario_time_s < wdw.start_s || scenario_time_s >= wdw.end_s) {
            continue;
        }
        SpoofContext ctx;
        ctx.sky = sky_;
        ctx.victim_truth = victim_truth;
        ctx.window_elapsed_s = scenario_time_s - wdw.start_s;
        ctx.epoch_interval_s = interval_;

        if (const auto* jam = std::get_if<JamAttack>(&wdw.kind)) {
            out = apply_jamming(out, *jam, schedule_.attacker_position, victim_truth, model_,
                                &captured);
        } else if (const auto* sync = std::get_if<SpoofSyncAttack>(&wdw.kind)) {
            out = apply_spoof_sync(out, *sync, captures_[i], ctx);
        } else if (const auto* async = std::get_if<SpoofAsyncAttack>(&wdw.kind)) {
            out = apply_spoof_async(out, *async, captures_[i], ctx, model_);
        } else if (const auto* ramp = std::get_if<PseudorangeRampAttack>(&wdw.kind)) {
            out = apply_pseudorange_ramp(out, *ramp, ctx.window_elapsed_s);
        } else if (const auto* mea = std::get_if<MeaconAttack>(&wdw.kind)) {
            out = apply_meacon(history_, mea->delay_s, interval_);
        }
    }

    // feedback for the synthesizer: channels that vanished this epoch
    lost_.clear();
    for (const Observation& a : authentic.obs) {
        bool present = false;
        for (const Observation& o : out.obs) {
            if (o.sat == a.sat && o.band == a.band) {
                present = true;
                break;
            }
        }
        if (!present) lost_.push_back({a.sat, a.band});
    }
    return out;
}

} // namespace rtkbench
