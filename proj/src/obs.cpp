// obs.cpp : observation synthesis
#include "rtkbench/obs.hpp"

#include <algorithm>
#include <cmath>

#include "rtkbench/rng.hpp"

namespace rtkbench {

double cn0_noise_scale(double cn0_dbhz) { return std::pow(10.0, (45.0 - cn0_dbhz) / 20.0); }

double nominal_cn0(double elevation_rad) {
    const double s = std::max(std::sin(elevation_rad), 1e-3);
    const double cn0 = 45.0 + 10.0 * std::log10(s / std::sin(deg2rad(45.0)));
    return std::min(52.0, std::max(30.0, cn0));
}

double iono_band_factor(System sys, BandCode band) {
    const double f1 = carrier_frequency_hz(sys, BandCode::L1E1);
    const double f = carrier_frequency_hz(sys, band);
    return (f1 / f) * (f1 / f);
}

double synth_pseudorange(double range_m, const ReceiverClock& rx_clock, double sv_clock_bias_s,
                         double iono_m, double tropo_m, double multipath_m, double noise_m) {
    return snap_m(range_m + iono_m + tropo_m + multipath_m + noise_m) +
           snap_m(kSpeedOfLight * rx_clock.bias_s) - snap_m(kSpeedOfLight * sv_clock_bias_s);
}

double synth_carrier(double range_m, const Band& band, int ambiguity_cycles,
                     const ReceiverClock& rx_clock, double sv_clock_bias_s, double iono_m,
                     double tropo_m, double phase_noise_cyc) {
    const double lam = band.wavelength_m;
    return snap_cyc((range_m - iono_m + tropo_m) / lam + phase_noise_cyc) +
           snap_cyc(kSpeedOfLight * rx_clock.bias_s / lam) -
           snap_cyc(kSpeedOfLight * sv_clock_bias_s / lam) + ambiguity_cycles;
}

double SvClockModel::bias_s(const SatelliteId& sat, const GnssTime& t) const {
    RngKey key = RngKey(seed_).with("svclock").with(static_cast<int>(sat.system)).with(sat.prn);
    const double bias = key.uniform(-1e-4, 1e-4, 0);
    const double drift = key.uniform(-1e-11, 1e-11, 1);
    return bias + drift * t.diff(t0_);
}

ObservationSynthesizer::ObservationSynthesizer(std::string receiver_id, ReceiverBands bands,
                                               ErrorModel model, SvClockModel sv_clock,
                                               const Constellation* sky, double elevation_mask_rad,
                                               double epoch_interval_s)
    : receiver_(std::move(receiver_id)),
      receiver_hash_(fnv1a(receiver_)),
      bands_(std::move(bands)),
      model_(model),
      svclk_(sv_clock),
      sky_(sky),
      mask_rad_(elevation_mask_rad),
      interval_s_(epoch_interval_s) {}

void ObservationSynthesizer::notify_lock_lost(const SatelliteId& sat, BandCode band) {
    auto it = channels_.find({sat, band});
    if (it != channels_.end()) it->second.last_seen_index = -2;
}

std::optional<int> ObservationSynthesizer::ambiguity(const SatelliteId& sat, BandCode band) const {
    auto it = channels_.find({sat, band});
    if (it == channels_.end()) return std::nullopt;
    return it->second.ambiguity;
}

EpochObservations ObservationSynthesizer::epoch(const EcefPosition& truth_position,
                                                const ReceiverClock& clock, const GnssTime& t) {
    ++epoch_index_;
    EpochObservations out;
    out.receiver = receiver_;
    out.epoch = t;
    out.clock_bias_truth_s = clock.bias_s;

    const EcefPosition anchor = model_.atmosphere_anchor.value_or(truth_position);
    const std::int64_t tkey = static_cast<std::int64_t>(std::llround(t.diff(GnssTime{}) * 1000.0));

    for (const SatelliteId& sat : sky_->visible(truth_position, t, mask_rad_)) {
        if (!bands_.systems.count(sat.system)) continue;
        const EcefPosition sp = sky_->position(sat, t);
        const double range = geometric_range(sp, truth_position);
        const double el = line_of_sight(sp, truth_position).elevation_rad;
        const double el_anchor = line_of_sight(sp, anchor).elevation_rad;
        const double mapping = 1.0 / std::max(std::sin(el_anchor), 0.03);
        const double cn0 = nominal_cn0(el);
        const double scale = cn0_noise_scale(cn0);
        const double sv_bias = svclk_.bias_s(sat, t);

        for (BandCode band : bands_.bands) {
            auto& ch = channels_[{sat, band}];
            if (ch.last_seen_index != epoch_index_ - 1) {
                // first lock or reacquisition: fresh ambiguity, lock restarts
                ++ch.draws;
                RngKey akey = RngKey(model_.seed)
                                  .with("ambiguity")
                                  .with(receiver_hash_)
                                  .with(static_cast<int>(sat.system))
                                  .with(sat.prn)
                                  .with(static_cast<int>(band))
                                  .with(ch.draws);
                ch.ambiguity = static_cast<int>(akey.uniform_int(-100000, 100000));
                ch.lock_time_s = 0.0;
            } else {
                ch.lock_time_s += interval_s_;
            }
            ch.last_seen_index = epoch_index_;

            RngKey nkey = RngKey(model_.seed)
                              .with("noise")
                              .with(receiver_hash_)
                              .with(static_cast<int>(sat.system))
                              .with(sat.prn)
                              .with(static_cast<int>(band))
                              .with(tkey);
            const double code_noise = model_.code_noise_sigma_m_45 * scale * nkey.gaussian(0);
            const double phase_noise = model_.phase_noise_sigma_cyc_45 * scale * nkey.gaussian(1);
            const double mp = model_.multipath_sigma_m * std::cos(el) * nkey.gaussian(2);

            const double iono = model_.iono_zenith_delay_m * iono_band_factor(sat.system, band) * mapping;
            const double tropo = model_.tropo_zenith_delay_m * mapping;

            Observation o;
            o.sat = sat;
            o.band = band;
            o.epoch = t;
            o.cn0_dbhz = cn0;
            o.lock_time_s = ch.lock_time_s;
            o.pseudorange_m = synth_pseudorange(range, clock, sv_bias, iono, tropo, mp, code_noise);
            o.carrier_cycles = synth_carrier(range, band_of(sat.system, band), ch.ambiguity, clock,
                                             sv_bias, iono, tropo, phase_noise);
            out.obs.push_back(o);
        }
    }
    std::sort(out.obs.begin(), out.obs.end(), [](const Observation& a, const Observation& b) {
        if (!(a.sat == b.sat)) return a.sat < b.sat;
        return a.band < b.band;
    });
    return out;
}

} // namespace rtkbench
