// solver.cpp : least-squares PVT, single and double differencing
#include "rtkbench/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "rtkbench/errors.hpp"

namespace rtkbench {

namespace {

double obs_sigma(double cn0, const SolverConfig& cfg) {
    return cfg.code_sigma_45_m * cn0_noise_scale(cn0);
}

double atmosphere_delay(double elevation_rad, System sys, BandCode band, const SolverConfig& cfg) {
    const double mapping = 1.0 / std::max(std::sin(elevation_rad), 0.03);
    return (cfg.iono_zenith_m * iono_band_factor(sys, band) + cfg.tropo_zenith_m) * mapping;
}

int count_distinct_sats(const std::vector<const Observation*>& obs) {
    int n = 0;
    const SatelliteId* prev = nullptr;
    for (const Observation* o : obs) {
        if (!prev || !(*prev == o->sat)) ++n;
        prev = &o->sat;
    }
    return n;
}

} // namespace

const char* status_name(SolutionStatus s) {
    switch (s) {
        case SolutionStatus::Fix: return "FIX";
        case SolutionStatus::Float: return "FLOAT";
        case SolutionStatus::Dgnss: return "DGNSS";
        case SolutionStatus::Single: return "SINGLE";
        default: return "NONE";
    }
}

RtkSolution spp_solve(const EpochObservations& obs, const EcefPosition& guess,
                      const Constellation& sky, const SvClockModel& sv_clock,
                      const SolverConfig& cfg) {
    // usable observations: above mask at the guess
    std::vector<const Observation*> used;
    std::vector<EcefPosition> sat_pos;
    for (const Observation& o : obs.obs) {
        const EcefPosition sp = sky.position(o.sat, o.epoch);
        if (line_of_sight(sp, guess).elevation_rad <= cfg.elevation_mask_rad) continue;
        used.push_back(&o);
        sat_pos.push_back(sp);
    }
    const int n_sats = count_distinct_sats(used);
    if (n_sats < 4) throw InsufficientGeometry("spp_solve: fewer than 4 satellites");

    const std::size_t m = used.size();
    Eigen::Vector3d p(guess.x, guess.y, guess.z);
    double cb = 0.0; // receiver clock, meters

    Eigen::MatrixXd h(m, 4);
    Eigen::VectorXd r(m), w(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double s = obs_sigma(used[i]->cn0_dbhz, cfg);
        w(i) = 1.0 / (s * s);
    }

    bool converged = false;
    for (int iter = 0; iter < cfg.max_iterations && !converged; ++iter) {
        const EcefPosition pe{p.x(), p.y(), p.z()};
        for (std::size_t i = 0; i < m; ++i) {
            const Observation& o = *used[i];
            const double range = geometric_range(sat_pos[i], pe);
            const LosVector los = line_of_sight(sat_pos[i], pe);
            const double model = range + cb - kSpeedOfLight * sv_clock.bias_s(o.sat, o.epoch) +
                                 atmosphere_delay(los.elevation_rad, o.sat.system, o.band, cfg);
            r(i) = o.pseudorange_m - model;
            h(i, 0) = -los.ux;
            h(i, 1) = -los.uy;
            h(i, 2) = -los.uz;
            h(i, 3) = 1.0;
        }
        const Eigen::MatrixXd hw = w.cwiseSqrt().asDiagonal() * h;
        if (iter == 0) {
            const auto sv = hw.jacobiSvd().singularValues();
            if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > cfg.max_condition) {
                throw InsufficientGeometry("spp_solve: geometry condition number too high");
            }
        }
        const Eigen::VectorXd rw = w.cwiseSqrt().asDiagonal() * r;
        const Eigen::VectorXd dx = hw.colPivHouseholderQr().solve(rw);
        p += dx.head<3>();
        cb += dx(3);
        converged = dx.head<3>().norm() < cfg.convergence_m;
    }
    if (!converged) throw NoConvergence("spp_solve: no convergence");

    RtkSolution sol;
    sol.epoch = obs.epoch;
    sol.position = {p.x(), p.y(), p.z()};
    sol.status = SolutionStatus::Single;
    sol.clock_bias_s = cb / kSpeedOfLight;
    sol.n_sats = n_sats;

    // post-fit residuals and covariance
    const EcefPosition pe{p.x(), p.y(), p.z()};
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const Observation& o = *used[i];
        const LosVector los = line_of_sight(sat_pos[i], pe);
        const double model = geometric_range(sat_pos[i], pe) + cb -
                             kSpeedOfLight * sv_clock.bias_s(o.sat, o.epoch) +
                             atmosphere_delay(los.elevation_rad, o.sat.system, o.band, cfg);
        const double res = o.pseudorange_m - model;
        ss += res * res;
    }
    sol.residual_rms_m = std::sqrt(ss / static_cast<double>(m));
    const Eigen::Matrix4d q = (h.transpose() * w.asDiagonal() * h).inverse();
    sol.covariance_diag = {q(0, 0), q(1, 1), q(2, 2)};
    return sol;
}

double residual_rms_at(const EpochObservations& obs, const EcefPosition& position,
                       const Constellation& sky, const SvClockModel& sv_clock,
                       const SolverConfig& cfg) {
    // clock-only fit at the fixed position
    std::vector<double> res;
    std::vector<double> wgt;
    for (const Observation& o : obs.obs) {
        const EcefPosition sp = sky.position(o.sat, o.epoch);
        const LosVector los = line_of_sight(sp, position);
        if (los.elevation_rad <= cfg.elevation_mask_rad) continue;
        const double model0 = geometric_range(sp, position) -
                              kSpeedOfLight * sv_clock.bias_s(o.sat, o.epoch) +
                              atmosphere_delay(los.elevation_rad, o.sat.system, o.band, cfg);
        const double s = obs_sigma(o.cn0_dbhz, cfg);
        res.push_back(o.pseudorange_m - model0);
        wgt.push_back(1.0 / (s * s));
    }
    if (res.empty()) throw InsufficientGeometry("residual_rms_at: no usable observations");
    double sw = 0.0, swr = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) {
        sw += wgt[i];
        swr += wgt[i] * res[i];
    }
    const double cb = swr / sw;
    double ss = 0.0;
    for (double v : res) ss += (v - cb) * (v - cb);
    return std::sqrt(ss / static_cast<double>(res.size()));
}

namespace {

struct CommonPair {
    const Observation* rover;
    const Observation* station;
    EcefPosition sat_rover;   // satellite at the rover obs epoch
    EcefPosition sat_station; // satellite at the correction epoch
    double elevation;         // at the guess
};

std::vector<CommonPair> match_common(const EpochObservations& rover,
                                     const StationCorrections& corr, const EcefPosition& guess,
                                     const Constellation& sky, double mask_rad) {
    std::vector<CommonPair> out;
    for (const Observation& ro : rover.obs) {
        for (const Observation& so : corr.obs) {
            if (!(so.sat == ro.sat) || so.band != ro.band) continue;
            CommonPair cp{};
            cp.rover = &ro;
            cp.station = &so;
            cp.sat_rover = sky.position(ro.sat, ro.epoch);
            cp.sat_station = sky.position(so.sat, corr.epoch);
            cp.elevation = line_of_sight(cp.sat_rover, guess).elevation_rad;
            if (cp.elevation <= mask_rad) break;
            out.push_back(cp);
            break;
        }
    }
    return out;
}

int distinct_sats(const std::vector<CommonPair>& v) {
    int n = 0;
    const SatelliteId* prev = nullptr;
    for (const auto& cp : v) {
        if (!prev || !(*prev == cp.rover->sat)) ++n;
        prev = &cp.rover->sat;
    }
    return n;
}

double pair_sigma(const CommonPair& cp, const SolverConfig& cfg) {
    const double a = obs_sigma(cp.rover->cn0_dbhz, cfg);
    const double b = obs_sigma(cp.station->cn0_dbhz, cfg);
    return std::sqrt(a * a + b * b);
}

} // namespace

RtkSolution dgnss_solve(const EpochObservations& rover, const StationCorrections& corr,
                        const EcefPosition& guess, const Constellation& sky,
                        const SolverConfig& cfg) {
    if (geometric_range(guess, corr.declared_position) > cfg.dgnss_baseline_limit_m) {
        throw BaselineTooLong("dgnss_solve: baseline exceeds limit");
    }
    const std::vector<CommonPair> common = match_common(rover, corr, guess, sky, cfg.elevation_mask_rad);
    const int n_sats = distinct_sats(common);
    if (n_sats < 4) throw InsufficientCommonSats("dgnss_solve: fewer than 4 common satellites");

    const std::size_t m = common.size();
    Eigen::Vector3d p(guess.x, guess.y, guess.z);
    double cbd = 0.0; // differential clock c(b_rv - b_ref), meters

    Eigen::MatrixXd h(m, 4);
    Eigen::VectorXd r(m), w(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double s = pair_sigma(common[i], cfg);
        w(i) = 1.0 / (s * s);
    }

    bool converged = false;
    for (int iter = 0; iter < cfg.max_iterations && !converged; ++iter) {
        const EcefPosition pe{p.x(), p.y(), p.z()};
        for (std::size_t i = 0; i < m; ++i) {
            const CommonPair& cp = common[i];
            // single difference referenced back to the declared position
            const double delta = cp.rover->pseudorange_m - cp.station->pseudorange_m +
                                 geometric_range(cp.sat_station, corr.declared_position);
            const LosVector los = line_of_sight(cp.sat_rover, pe);
            r(i) = delta - (geometric_range(cp.sat_rover, pe) + cbd);
            h(i, 0) = -los.ux;
            h(i, 1) = -los.uy;
            h(i, 2) = -los.uz;
            h(i, 3) = 1.0;
        }
        const Eigen::MatrixXd hw = w.cwiseSqrt().asDiagonal() * h;
        if (iter == 0) {
            const auto sv = hw.jacobiSvd().singularValues();
            if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > cfg.max_condition) {
                throw InsufficientGeometry("dgnss_solve: geometry condition number too high");
            }
        }
        const Eigen::VectorXd dx =
            hw.colPivHouseholderQr().solve(w.cwiseSqrt().asDiagonal() * r);
        p += dx.head<3>();
        cbd += dx(3);
        converged = dx.head<3>().norm() < cfg.convergence_m;
    }
    if (!converged) throw NoConvergence("dgnss_solve: no convergence");

    RtkSolution sol;
    sol.epoch = rover.epoch;
    sol.position = {p.x(), p.y(), p.z()};
    sol.status = SolutionStatus::Dgnss;
    sol.clock_bias_s = cbd / kSpeedOfLight;
    sol.n_sats = n_sats;

    const EcefPosition pe{p.x(), p.y(), p.z()};
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const CommonPair& cp = common[i];
        const double delta = cp.rover->pseudorange_m - cp.station->pseudorange_m +
                             geometric_range(cp.sat_station, corr.declared_position);
        const double res = delta - (geometric_range(cp.sat_rover, pe) + cbd);
        ss += res * res;
    }
    sol.residual_rms_m = std::sqrt(ss / static_cast<double>(m));
    const Eigen::Matrix4d q = (h.transpose() * w.asDiagonal() * h).inverse();
    sol.covariance_diag = {q(0, 0), q(1, 1), q(2, 2)};
    return sol;
}

void RtkEngine::reset() {
    ref_prn_.clear();
    pairs_.clear();
    last_dds_.clear();
}

RtkSolution RtkEngine::solve(const EpochObservations& rover, const StationCorrections& corr,
                             const EcefPosition& guess, const Constellation& sky) {
    std::vector<CommonPair> common = match_common(rover, corr, guess, sky, cfg_.elevation_mask_rad);

    // group by system, count common satellites
    std::map<System, std::vector<const CommonPair*>> by_system;
    std::map<System, std::map<int, double>> elev; // prn -> elevation
    for (const CommonPair& cp : common) {
        by_system[cp.rover->sat.system].push_back(&cp);
        elev[cp.rover->sat.system][cp.rover->sat.prn] = cp.elevation;
    }
    int best_count = 0;
    for (const auto& [sys, v] : elev) best_count = std::max(best_count, static_cast<int>(v.size()));
    if (best_count < 5) throw InsufficientCommonSats("rtk_solve: fewer than 5 common satellites");

    const bool carrier_ok_lock = true;
    auto carrier_usable = [&](const CommonPair& cp) {
        return carrier_ok_lock && cp.rover->lock_time_s >= cfg_.min_lock_s &&
               cp.station->lock_time_s >= cfg_.min_lock_s;
    };

    // reference satellite per system: keep the previous one while it is still
    // common and comfortably above the mask; otherwise highest elevation with
    // usable carrier on every shared band.
    std::map<System, int> new_ref;
    for (auto& [sys, list] : by_system) {
        std::map<int, bool> all_carrier;
        for (const CommonPair* cp : list) {
            auto [it, inserted] = all_carrier.try_emplace(cp->rover->sat.prn, true);
            it->second = it->second && carrier_usable(*cp);
        }
        int keep = -1;
        auto prev = ref_prn_.find(sys);
        if (prev != ref_prn_.end()) {
            auto e = elev[sys].find(prev->second);
            auto c = all_carrier.find(prev->second);
            if (e != elev[sys].end() && c != all_carrier.end() && c->second &&
                e->second > cfg_.elevation_mask_rad + deg2rad(5.0)) {
                keep = prev->second;
            }
        }
        if (keep < 0) {
            double best_el = -1.0;
            for (const auto& [prn, ok] : all_carrier) {
                if (ok && elev[sys][prn] > best_el) {
                    best_el = elev[sys][prn];
                    keep = prn;
                }
            }
        }
        if (keep < 0) throw InsufficientCommonSats("rtk_solve: no usable reference satellite");
        new_ref[sys] = keep;
    }

    // reference change: re-reference stored ambiguities through the pivot
    // pair dd(new_ref, old_ref); dd(j, new) = dd(j, old) - dd(new, old)
    for (const auto& [sys, prn] : new_ref) {
        auto prev = ref_prn_.find(sys);
        if (prev != ref_prn_.end() && prev->second != prn) {
            const int old_prn = prev->second;
            std::map<BandCode, PairState> pivot;
            for (const auto& [key, st] : pairs_) {
                if (key.sys == sys && key.prn == prn) pivot[key.band] = st;
            }
            std::map<PairKey, PairState> next;
            for (const auto& [key, st] : pairs_) {
                if (key.sys != sys) {
                    next[key] = st;
                    continue;
                }
                auto pv = pivot.find(key.band);
                if (pv == pivot.end()) continue;
                const PairState& p = pv->second;
                PairState ns;
                ns.epochs = std::min(st.epochs, p.epochs);
                if (ns.epochs <= 0) continue;
                const PairKey nk =
                    key.prn == prn ? PairKey{sys, old_prn, key.band} : key;
                const double mean =
                    key.prn == prn ? -p.mean() : st.mean() - p.mean();
                ns.float_sum = mean * ns.epochs;
                ns.last_float = mean;
                if (key.prn == prn) {
                    if (p.fixed) ns.fixed = -*p.fixed;
                } else if (st.fixed && p.fixed) {
                    ns.fixed = *st.fixed - *p.fixed;
                }
                next[nk] = ns;
            }
            pairs_ = std::move(next);
        }
        ref_prn_[sys] = prn;
    }

    // build double differences
    struct DdRow {
        PairKey key;
        double dd_code;
        double dd_carrier_cyc;
        double wavelength;
        double sigma_code;
        bool carrier;
        const CommonPair* other;
        const CommonPair* ref;
    };
    std::vector<DdRow> rows;
    for (auto& [sys, list] : by_system) {
        const int ref = new_ref[sys];
        std::map<BandCode, const CommonPair*> refs;
        for (const CommonPair* cp : list) {
            if (cp->rover->sat.prn == ref) refs[cp->rover->band] = cp;
        }
        for (const CommonPair* cp : list) {
            if (cp->rover->sat.prn == ref) continue;
            auto rit = refs.find(cp->rover->band);
            if (rit == refs.end()) continue;
            const CommonPair* rp = rit->second;
            DdRow row{};
            row.key = {sys, cp->rover->sat.prn, cp->rover->band};
            row.dd_code = (cp->rover->pseudorange_m - cp->station->pseudorange_m) -
                          (rp->rover->pseudorange_m - rp->station->pseudorange_m);
            row.dd_carrier_cyc = (cp->rover->carrier_cycles - cp->station->carrier_cycles) -
                                 (rp->rover->carrier_cycles - rp->station->carrier_cycles);
            row.wavelength = band_of(sys, cp->rover->band).wavelength_m;
            const double sa = pair_sigma(*cp, cfg_), sb = pair_sigma(*rp, cfg_);
            row.sigma_code = std::sqrt(sa * sa + sb * sb);
            row.carrier = carrier_usable(*cp) && carrier_usable(*rp);
            row.other = cp;
            row.ref = rp;
            rows.push_back(row);
        }
    }
    if (rows.size() < 3) throw InsufficientCommonSats("rtk_solve: not enough double differences");

    // drop state for pairs that vanished this epoch (cycle slip handling is
    // implicit: lock_time reset downstream makes carrier_usable false, and the
    // accumulator resets on the next large float jump)
    std::vector<std::size_t> carrier_rows;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].carrier) carrier_rows.push_back(i);
    }

    // --- float solution: [dp(3), N per carrier row] ---
    const std::size_t na = carrier_rows.size();
    const std::size_t m = rows.size() + na;
    Eigen::Vector3d p(guess.x, guess.y, guess.z);
    Eigen::VectorXd amb = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(na));

    // initialize ambiguities from code-carrier difference
    for (std::size_t k = 0; k < na; ++k) {
        const DdRow& row = rows[carrier_rows[k]];
        amb(static_cast<Eigen::Index>(k)) = row.dd_carrier_cyc - row.dd_code / row.wavelength;
    }

    auto dd_model = [&](const DdRow& row, const EcefPosition& pe) {
        return (geometric_range(row.other->sat_rover, pe) -
                geometric_range(row.other->sat_station, corr.declared_position)) -
               (geometric_range(row.ref->sat_rover, pe) -
                geometric_range(row.ref->sat_station, corr.declared_position));
    };

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), 3 + static_cast<Eigen::Index>(na));
    Eigen::VectorXd r(static_cast<Eigen::Index>(m)), w(static_cast<Eigen::Index>(m));
    bool converged = false;
    for (int iter = 0; iter < cfg_.max_iterations && !converged; ++iter) {
        const EcefPosition pe{p.x(), p.y(), p.z()};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const DdRow& row = rows[i];
            const LosVector lo = line_of_sight(row.other->sat_rover, pe);
            const LosVector lr = line_of_sight(row.ref->sat_rover, pe);
            r(static_cast<Eigen::Index>(i)) = row.dd_code - dd_model(row, pe);
            h(static_cast<Eigen::Index>(i), 0) = lr.ux - lo.ux;
            h(static_cast<Eigen::Index>(i), 1) = lr.uy - lo.uy;
            h(static_cast<Eigen::Index>(i), 2) = lr.uz - lo.uz;
            const double sd = 2.0 * row.sigma_code; // dd noise inflation
            w(static_cast<Eigen::Index>(i)) = 1.0 / (sd * sd);
        }
        for (std::size_t k = 0; k < na; ++k) {
            const DdRow& row = rows[carrier_rows[k]];
            const Eigen::Index i = static_cast<Eigen::Index>(rows.size() + k);
            const LosVector lo = line_of_sight(row.other->sat_rover, pe);
            const LosVector lr = line_of_sight(row.ref->sat_rover, pe);
            r(i) = row.wavelength * (row.dd_carrier_cyc - amb(static_cast<Eigen::Index>(k))) -
                   dd_model(row, pe);
            h(i, 0) = lr.ux - lo.ux;
            h(i, 1) = lr.uy - lo.uy;
            h(i, 2) = lr.uz - lo.uz;
            h(i, 3 + static_cast<Eigen::Index>(k)) = row.wavelength;
            const double sd = 2.0 * row.sigma_code / cfg_.carrier_code_ratio;
            w(i) = 1.0 / (sd * sd);
        }
        const Eigen::MatrixXd hw = w.cwiseSqrt().asDiagonal() * h;
        const Eigen::VectorXd dx = hw.colPivHouseholderQr().solve(w.cwiseSqrt().asDiagonal() * r);
        if (!dx.allFinite()) throw InsufficientGeometry("rtk_solve: singular float system");
        p += dx.head<3>();
        for (std::size_t k = 0; k < na; ++k) amb(static_cast<Eigen::Index>(k)) += dx(3 + static_cast<Eigen::Index>(k));
        converged = dx.head<3>().norm() < cfg_.convergence_m;
    }
    if (!converged) throw NoConvergence("rtk_solve: float solution did not converge");

    // --- ambiguity bookkeeping ---
    std::map<PairKey, double> float_now;
    for (std::size_t k = 0; k < na; ++k) {
        const DdRow& row = rows[carrier_rows[k]];
        float_now[row.key] = amb(static_cast<Eigen::Index>(k));
    }
    for (auto& [key, value] : float_now) {
        PairState& st = pairs_[key];
        if (st.epochs > 0 && std::fabs(value - st.mean()) > 5.0) {
            st = PairState{}; // slip or step change: restart accumulation
        }
        st.float_sum += value;
        st.epochs += 1;
        st.last_float = value;
    }
    // pairs absent this epoch keep their state (short outages tolerated)

    const double baseline = geometric_range(guess, corr.declared_position);
    const bool fix_allowed = baseline <= cfg_.fix_baseline_limit_m;

    int active_fixed = 0;
    for (const auto& [key, st] : pairs_) {
        if (st.fixed && float_now.count(key)) ++active_fixed;
    }

    if (fix_allowed && active_fixed >= 4) {
        // a fixed set is live: mature pairs whose mean rounds cleanly join it
        for (auto& [key, st] : pairs_) {
            if (st.fixed || !float_now.count(key) || st.epochs < cfg_.fix_min_epochs) continue;
            const double mean = st.mean();
            if (std::fabs(mean - std::nearbyint(mean)) <= 0.2) {
                st.fixed = static_cast<int>(std::llround(mean));
            }
        }
    } else if (fix_allowed) {
        // fresh fix attempt: ratio test over the mature candidate set
        std::vector<PairState*> ready;
        for (auto& [key, st] : pairs_) {
            if (float_now.count(key) && st.epochs >= cfg_.fix_min_epochs) ready.push_back(&st);
        }
        if (ready.size() >= 4) {
            double best = 0.0, second = std::numeric_limits<double>::max();
            for (PairState* st : ready) {
                const double frac = st->mean() - std::nearbyint(st->mean());
                best += st->epochs * frac * frac;
            }
            for (PairState* st : ready) {
                const double frac = st->mean() - std::nearbyint(st->mean());
                const double flip = 1.0 - std::fabs(frac);
                const double alt = best - st->epochs * frac * frac + st->epochs * flip * flip;
                second = std::min(second, alt);
            }
            const double ratio = second / std::max(best, 1e-9);
            if (ratio >= cfg_.ratio_threshold) {
                for (PairState* st : ready) {
                    st->fixed = static_cast<int>(std::llround(st->mean()));
                }
            }
        }
    }

    // --- fixed solution when enough fixed pairs are present this epoch ---
    std::vector<std::size_t> fixed_rows;
    for (std::size_t k = 0; k < na; ++k) {
        const DdRow& row = rows[carrier_rows[k]];
        auto it = pairs_.find(row.key);
        if (it != pairs_.end() && it->second.fixed) fixed_rows.push_back(carrier_rows[k]);
    }

    RtkSolution sol;
    sol.epoch = rover.epoch;
    sol.n_sats = distinct_sats(common);

    bool have_fix = false;
    Eigen::Vector3d pf = p;
    double fix_res_rms = 0.0;
    std::array<double, 3> fix_cov{};
    if (fix_allowed && fixed_rows.size() >= 4) {
        // position-only LSQ on carrier with fixed integers plus code rows
        const std::size_t mf = rows.size() + fixed_rows.size();
        Eigen::MatrixXd hf(static_cast<Eigen::Index>(mf), 3);
        Eigen::VectorXd rf(static_cast<Eigen::Index>(mf)), wf(static_cast<Eigen::Index>(mf));
        bool fconv = false;
        for (int iter = 0; iter < cfg_.max_iterations && !fconv; ++iter) {
            const EcefPosition pe{pf.x(), pf.y(), pf.z()};
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const DdRow& row = rows[i];
                const LosVector lo = line_of_sight(row.other->sat_rover, pe);
                const LosVector lr = line_of_sight(row.ref->sat_rover, pe);
                rf(static_cast<Eigen::Index>(i)) = row.dd_code - dd_model(row, pe);
                hf(static_cast<Eigen::Index>(i), 0) = lr.ux - lo.ux;
                hf(static_cast<Eigen::Index>(i), 1) = lr.uy - lo.uy;
                hf(static_cast<Eigen::Index>(i), 2) = lr.uz - lo.uz;
                const double sd = 2.0 * row.sigma_code;
                wf(static_cast<Eigen::Index>(i)) = 1.0 / (sd * sd);
            }
            for (std::size_t k = 0; k < fixed_rows.size(); ++k) {
                const DdRow& row = rows[fixed_rows[k]];
                const int nfix = *pairs_[row.key].fixed;
                const Eigen::Index i = static_cast<Eigen::Index>(rows.size() + k);
                const LosVector lo = line_of_sight(row.other->sat_rover, pe);
                const LosVector lr = line_of_sight(row.ref->sat_rover, pe);
                rf(i) = row.wavelength * (row.dd_carrier_cyc - nfix) - dd_model(row, pe);
                hf(i, 0) = lr.ux - lo.ux;
                hf(i, 1) = lr.uy - lo.uy;
                hf(i, 2) = lr.uz - lo.uz;
                const double sd = 2.0 * row.sigma_code / cfg_.carrier_code_ratio;
                wf(i) = 1.0 / (sd * sd);
            }
            const Eigen::MatrixXd hw = wf.cwiseSqrt().asDiagonal() * hf;
            const Eigen::VectorXd dx =
                hw.colPivHouseholderQr().solve(wf.cwiseSqrt().asDiagonal() * rf);
            if (!dx.allFinite()) break;
            pf += dx;
            fconv = dx.norm() < cfg_.convergence_m;
        }
        if (fconv) {
            // carrier residual gate on the fixed solution
            const EcefPosition pe{pf.x(), pf.y(), pf.z()};
            double ss = 0.0;
            for (std::size_t k = 0; k < fixed_rows.size(); ++k) {
                const DdRow& row = rows[fixed_rows[k]];
                const int nfix = *pairs_[row.key].fixed;
                const double res = row.wavelength * (row.dd_carrier_cyc - nfix) - dd_model(row, pe);
                ss += res * res;
            }
            fix_res_rms = std::sqrt(ss / static_cast<double>(fixed_rows.size()));
            if (fix_res_rms <= cfg_.fix_residual_limit_m) {
                have_fix = true;
                const Eigen::Matrix3d q = (hf.transpose() * wf.asDiagonal() * hf).inverse();
                fix_cov = {q(0, 0), q(1, 1), q(2, 2)};
            } else {
                // held integers no longer consistent: drop and re-estimate
                for (auto& [key, st] : pairs_) st = PairState{};
            }
        }
    }

    last_dds_.clear();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const DdRow& row = rows[i];
        DoubleDifference dd;
        dd.ref_sat = row.ref->rover->sat;
        dd.other_sat = row.other->rover->sat;
        dd.band = row.key.band;
        dd.dd_pseudorange_m = row.dd_code;
        dd.dd_carrier_cyc = row.dd_carrier_cyc;
        dd.carrier_valid = row.carrier;
        auto it = pairs_.find(row.key);
        if (it != pairs_.end() && it->second.fixed) {
            dd.dd_ambiguity_cyc = *it->second.fixed;
            dd.fixed = true;
        } else if (float_now.count(row.key)) {
            dd.dd_ambiguity_cyc = float_now[row.key];
        }
        last_dds_.push_back(dd);
    }

    if (have_fix) {
        sol.position = {pf.x(), pf.y(), pf.z()};
        sol.status = SolutionStatus::Fix;
        sol.residual_rms_m = fix_res_rms;
        sol.covariance_diag = fix_cov;
    } else {
        sol.position = {p.x(), p.y(), p.z()};
        sol.status = SolutionStatus::Float;
        const EcefPosition pe{p.x(), p.y(), p.z()};
        double ss = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double res = rows[i].dd_code - dd_model(rows[i], pe);
            ss += res * res;
        }
        sol.residual_rms_m = std::sqrt(ss / static_cast<double>(rows.size()));
        const Eigen::MatrixXd hw = w.cwiseSqrt().asDiagonal() * h;
        const Eigen::MatrixXd q = (hw.transpose() * hw).inverse();
        sol.covariance_diag = {q(0, 0), q(1, 1), q(2, 2)};
    }
    sol.clock_bias_s = 0.0; // receiver clocks cancel in double differences
    return sol;
}

RoverPilot::RoverPilot(SolverConfig cfg, FallbackPolicy policy, const Constellation* sky,
                       SvClockModel sv_clock, EcefPosition initial_guess)
    : cfg_(cfg),
      policy_(policy),
      sky_(sky),
      svclk_(sv_clock),
      initial_guess_(initial_guess),
      engine_(cfg) {}

EcefPosition RoverPilot::current_guess() const { return last_position_.value_or(initial_guess_); }

RtkSolution RoverPilot::epoch_pipeline(const EpochObservations& rover_obs,
                                       const std::optional<StationCorrections>& corr,
                                       const GnssTime& wall) {
    buffer_.push_back(rover_obs);
    while (buffer_.size() > 4) buffer_.pop_front();

    const EcefPosition guess = current_guess();
    RtkSolution sol;
    sol.epoch = wall;
    sol.status = SolutionStatus::None;

    const bool fresh = corr && wall.diff(corr->epoch) <= cfg_.correction_max_age_s + 1e-9 &&
                       wall.diff(corr->epoch) >= -1e-9;
    if (fresh) {
        const EpochObservations* matched = nullptr;
        for (const EpochObservations& e : buffer_) {
            if (e.epoch == corr->epoch) matched = &e;
        }
        if (matched) {
            try {
                sol = engine_.solve(*matched, *corr, guess, *sky_);
            } catch (const Error&) {
                try {
                    sol = dgnss_solve(*matched, *corr, guess, *sky_, cfg_);
                } catch (const Error&) {
                    sol.status = SolutionStatus::None;
                }
            }
        }
    }
    if (sol.status == SolutionStatus::None && policy_ == FallbackPolicy::FallbackToSingle) {
        try {
            sol = spp_solve(rover_obs, guess, *sky_, svclk_, cfg_);
        } catch (const Error&) {
            sol.status = SolutionStatus::None;
        }
    }
    sol.epoch = wall;
    if (sol.status != SolutionStatus::None) last_position_ = sol.position;
    return sol;
}

} // namespace rtkbench
