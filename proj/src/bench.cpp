// bench.cpp : scenario executor, metrics, CSV/JSON/SVG outputs
#include "rtkbench/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rtkbench/attack.hpp"
#include "rtkbench/errors.hpp"
#include "rtkbench/rng.hpp"
#include "rtkbench/station.hpp"

namespace rtkbench {

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

bool window_active(const AttackSchedule& schedule, double t_s) {
    for (const AttackWindow& w : schedule.windows) {
        if (t_s >= w.start_s && t_s < w.end_s) return true;
    }
    return false;
}

} // namespace

RunReport run_scenario(const Scenario& sc) {
    RunReport rep;
    rep.scenario = sc;

    Constellation sky;
    sky.add(build_constellation(System::SysG, sc.shell_g.n_sats, sc.shell_g.n_planes,
                                sc.shell_g.semi_major_axis_m, sc.shell_g.inclination_rad, sc.seed,
                                sc.start));
    sky.add(build_constellation(System::SysE, sc.shell_e.n_sats, sc.shell_e.n_planes,
                                sc.shell_e.semi_major_axis_m, sc.shell_e.inclination_rad, sc.seed,
                                sc.start));

    const EcefPosition station_truth = sc.station_truth();
    rep.trajectory = generate_trajectory(sc.seed, sc.duration_s, station_truth, sc.trajectory,
                                         sc.start, sc.epoch_interval_s);

    const SvClockModel svclk(sc.seed, sc.start);
    ErrorModel errors = sc.errors;
    errors.atmosphere_anchor = station_truth;

    ObservationSynthesizer synth_station("station", sc.station.bands, errors, svclk, &sky,
                                         sc.elevation_mask_rad, sc.epoch_interval_s);
    ObservationSynthesizer synth_rover("rover", sc.rover.bands, errors, svclk, &sky,
                                       sc.elevation_mask_rad, sc.epoch_interval_s);

    AttackEngine eng_station(sc.attacks, "station", &sky, sc.epoch_interval_s, errors);
    AttackEngine eng_rover(sc.attacks, "rover", &sky, sc.epoch_interval_s, errors);

    StationConfig st_cfg;
    st_cfg.station_id = sc.station.id;
    st_cfg.mode = sc.station.mode;
    st_cfg.truth_position = station_truth;
    st_cfg.declared_position = station_truth;
    st_cfg.survey = sc.station.survey;
    st_cfg.bands = sc.station.bands;
    st_cfg.smoothing = sc.station.smoothing;
    st_cfg.epoch_interval_s = sc.epoch_interval_s;
    ReferenceStation station(st_cfg, sc.solver, &sky, svclk);

    RoverPilot pilot(sc.solver, sc.rover.policy, &sky, svclk, station_truth);
    CorrectionAssembler assembler;

    GeofenceMonitor geofence(sc.guard.geofence);
    ClockMonitor clock_mon(sc.guard.clock, sc.station.clock.drift_s_s);
    ResidualMonitor resid_mon(sc.guard.residual);
    int alarm_streak = 0, clean_streak = 0;
    bool blocked = false;

    double st_bias = sc.station.clock.bias_s;
    double rv_bias = sc.rover.clock.bias_s;
    const double dt = sc.epoch_interval_s;
    const auto n = static_cast<std::size_t>(std::llround(sc.duration_s / dt));

    for (std::size_t k = 0; k < n; ++k) {
        const double t_s = static_cast<double>(k) * dt;
        const GnssTime wall = sc.start.plus(t_s);
        const EcefPosition rover_truth = rep.trajectory[k].position;

        const ReceiverClock st_clk{st_bias, sc.station.clock.drift_s_s,
                                   sc.station.clock.random_walk_sigma};
        const ReceiverClock rv_clk{rv_bias, sc.rover.clock.drift_s_s,
                                   sc.rover.clock.random_walk_sigma};

        const EpochObservations auth_station = synth_station.epoch(station_truth, st_clk, wall);
        const EpochObservations auth_rover = synth_rover.epoch(rover_truth, rv_clk, wall);

        const EpochObservations atk_station = eng_station.apply(auth_station, station_truth, t_s);
        for (const auto& [sat, band] : eng_station.lost_channels()) {
            synth_station.notify_lock_lost(sat, band);
        }
        const EpochObservations atk_rover = eng_rover.apply(auth_rover, rover_truth, t_s);
        for (const auto& [sat, band] : eng_rover.lost_channels()) {
            synth_rover.notify_lock_lost(sat, band);
        }

        station.set_stream_blocked(blocked);
        const StationEpochOutput st_out = station.step(atk_station, wall);

        StationRecord st_rec;
        st_rec.index = static_cast<int>(k);
        st_rec.declared = st_out.declared_position;
        st_rec.monitor_spp = st_out.monitor_spp;
        st_rec.reported_clock_s = st_out.reported_clock_bias_s;
        st_rec.stream_enabled = st_out.stream_enabled;
        rep.station.push_back(st_rec);

        if (sc.rover.guard) {
            const auto gv = geofence.step(wall, st_out.monitor_spp, st_out.declared_position);
            const auto cv = clock_mon.step(
                wall, st_out.monitor_spp ? std::optional<double>(st_out.reported_clock_bias_s)
                                         : std::nullopt);
            const auto rm = resid_mon.step(
                wall, st_out.monitor_spp ? std::optional<double>(st_out.monitor_spp->residual_rms_m)
                                         : std::nullopt);
            rep.verdicts.push_back(gv);
            rep.verdicts.push_back(cv);
            rep.verdicts.push_back(rm);
            const bool station_alarm = gv.alarm || cv.alarm || rm.alarm;
            if (station_alarm) {
                ++alarm_streak;
                clean_streak = 0;
            } else {
                alarm_streak = 0;
                ++clean_streak;
            }
            if (alarm_streak >= sc.guard.station_disable_persistence) blocked = true;
            if (blocked && clean_streak >= sc.guard.station_reenable_clean) blocked = false;
        }

        if (sc.corrections_source == CorrectionsSource::Truth) {
            StationCorrections sc_truth;
            sc_truth.station_id = sc.station.id;
            sc_truth.declared_position = station_truth;
            sc_truth.epoch = auth_station.epoch;
            sc_truth.obs = auth_station.obs;
            CorrectionMessage info;
            info.type = MessageType::StationInfo;
            info.position = station_truth;
            assembler.push(info);
            CorrectionMessage obs;
            obs.type = MessageType::Observations;
            obs.station_id = sc.station.id;
            obs.gps_week = static_cast<std::uint16_t>(auth_station.epoch.week);
            obs.tow_ms = static_cast<std::uint32_t>(std::llround(auth_station.epoch.tow_s * 1000.0));
            obs.obs = auth_station.obs;
            assembler.push(obs);
        } else if (st_out.stream_enabled) {
            for (const CorrectionMessage& m : station.make_corrections(st_out)) assembler.push(m);
        }

        const std::optional<StationCorrections>& corr = assembler.latest();
        RtkSolution sol = pilot.epoch_pipeline(atk_rover, corr, wall);
        bool corrections_used = sol.status == SolutionStatus::Dgnss ||
                                sol.status == SolutionStatus::Float ||
                                sol.status == SolutionStatus::Fix;

        if (sc.rover.guard) {
            std::optional<RtkSolution> standalone;
            try {
                standalone = spp_solve(atk_rover, pilot.current_guess(), sky, svclk, sc.solver);
            } catch (const Error&) {
            }
            const std::optional<RtkSolution> corrected =
                corrections_used ? std::optional<RtkSolution>(sol) : std::nullopt;
            const auto bv = correction_benefit_check(wall, standalone, corrected, atk_rover, sky,
                                                     svclk, sc.solver, sc.guard.benefit);
            rep.verdicts.push_back(bv);
            if (bv.alarm) {
                // discard this epoch's corrections, fall back per policy
                corrections_used = false;
                if (sc.rover.policy == FallbackPolicy::FallbackToSingle && standalone) {
                    sol = *standalone;
                } else {
                    sol = RtkSolution{};
                    sol.epoch = wall;
                }
            }
        }

        EpochRecord rec;
        rec.index = static_cast<int>(k);
        rec.wall = wall;
        rec.truth = rover_truth;
        rec.solution = sol;
        rec.attack_active = window_active(sc.attacks, t_s);
        rec.corrections_used = corrections_used;
        if (sol.status != SolutionStatus::None) {
            rec.error = ecef_to_enu(sol.position, rover_truth);
            rec.err_2d = rec.error.norm2d();
            rec.err_3d = rec.error.norm();
        }
        rep.epochs.push_back(rec);

        // receiver clocks evolve as drift plus random walk
        st_bias += sc.station.clock.drift_s_s * dt +
                   sc.station.clock.random_walk_sigma * std::sqrt(dt) *
                       RngKey(sc.seed).with("clkwalk").with("station").with(static_cast<int>(k)).gaussian();
        rv_bias += sc.rover.clock.drift_s_s * dt +
                   sc.rover.clock.random_walk_sigma * std::sqrt(dt) *
                       RngKey(sc.seed).with("clkwalk").with("rover").with(static_cast<int>(k)).gaussian();
    }

    rep.summary = compute_metrics(rep.epochs, rep.verdicts, sc.attacks.windows, dt);
    return rep;
}

RunSummary compute_metrics(const std::vector<EpochRecord>& epochs,
                           const std::vector<DetectorVerdict>& verdicts,
                           const std::vector<AttackWindow>& windows, double epoch_interval_s) {
    RunSummary s;
    s.epochs = static_cast<int>(epochs.size());
    if (epochs.empty()) throw EmptyRun("compute_metrics: no records");

    double se = 0, sn = 0, su = 0, s2 = 0, s3 = 0;
    double ae = 0, an = 0, au = 0, a2 = 0, a3 = 0;
    double b2 = 0, b3 = 0;
    int with_pos = 0, fixes = 0, atk_pos = 0, atk_total = 0, ben_pos = 0;
    for (const EpochRecord& r : epochs) {
        if (r.attack_active) ++atk_total;
        if (r.solution.status == SolutionStatus::None) continue;
        ++with_pos;
        if (r.solution.status == SolutionStatus::Fix) ++fixes;
        se += r.error.east * r.error.east;
        sn += r.error.north * r.error.north;
        su += r.error.up * r.error.up;
        s2 += r.err_2d * r.err_2d;
        s3 += r.err_3d * r.err_3d;
        s.max_err_3d = std::max(s.max_err_3d, r.err_3d);
        if (r.attack_active) {
            ++atk_pos;
            ae += r.error.east * r.error.east;
            an += r.error.north * r.error.north;
            au += r.error.up * r.error.up;
            a2 += r.err_2d * r.err_2d;
            a3 += r.err_3d * r.err_3d;
        } else {
            ++ben_pos;
            b2 += r.err_2d * r.err_2d;
            b3 += r.err_3d * r.err_3d;
        }
    }
    if (with_pos == 0) throw EmptyRun("compute_metrics: no positioned epochs");
    const double np = with_pos;
    s.rms_e = std::sqrt(se / np);
    s.rms_n = std::sqrt(sn / np);
    s.rms_u = std::sqrt(su / np);
    s.rms_2d = std::sqrt(s2 / np);
    s.rms_3d = std::sqrt(s3 / np);
    s.fix_rate = static_cast<double>(fixes) / static_cast<double>(epochs.size());
    s.availability = np / static_cast<double>(epochs.size());
    s.attacked_epochs = atk_total;
    if (atk_pos > 0) {
        s.attacked_rms_e = std::sqrt(ae / atk_pos);
        s.attacked_rms_n = std::sqrt(an / atk_pos);
        s.attacked_rms_u = std::sqrt(au / atk_pos);
        s.attacked_rms_2d = std::sqrt(a2 / atk_pos);
        s.attacked_rms_3d = std::sqrt(a3 / atk_pos);
    }
    if (atk_total > 0) s.attacked_availability = static_cast<double>(atk_pos) / atk_total;
    if (ben_pos > 0) {
        s.benign_rms_2d = std::sqrt(b2 / ben_pos);
        s.benign_rms_3d = std::sqrt(b3 / ben_pos);
    }

    const GnssTime t0 = epochs.front().wall;
    for (const AttackWindow& w : windows) {
        WindowLatency lat;
        lat.start_s = w.start_s;
        lat.end_s = w.end_s;
        for (const DetectorVerdict& v : verdicts) {
            if (!v.alarm) continue;
            const double tv = v.epoch.diff(t0);
            if (tv >= w.start_s - 1e-9) {
                const int idx = static_cast<int>(std::llround(tv / epoch_interval_s));
                lat.first_alarm_epoch = idx;
                lat.latency_epochs =
                    idx - static_cast<int>(std::llround(w.start_s / epoch_interval_s));
                break;
            }
        }
        s.latencies.push_back(lat);
    }
    return s;
}

std::string epochs_csv(const RunReport& rep) {
    std::string out =
        "epoch,status,x,y,z,err_e,err_n,err_u,err_2d,err_3d,clk_bias,n_sats,resid_rms\n";
    for (const EpochRecord& r : rep.epochs) {
        out += std::to_string(r.index);
        out += ",";
        out += status_name(r.solution.status);
        if (r.solution.status != SolutionStatus::None) {
            out += "," + fmt("%.4f", r.solution.position.x) + "," +
                   fmt("%.4f", r.solution.position.y) + "," + fmt("%.4f", r.solution.position.z);
            out += "," + fmt("%.6f", r.error.east) + "," + fmt("%.6f", r.error.north) + "," +
                   fmt("%.6f", r.error.up);
            out += "," + fmt("%.6f", r.err_2d) + "," + fmt("%.6f", r.err_3d);
            out += "," + fmt("%.12e", r.solution.clock_bias_s);
            out += "," + std::to_string(r.solution.n_sats);
            out += "," + fmt("%.6f", r.solution.residual_rms_m);
        } else {
            out += ",,,,,,,,,,0,";
        }
        out += "\n";
    }
    return out;
}

std::string verdicts_csv(const RunReport& rep) {
    std::string out = "epoch,detector,alarm,score,reason\n";
    const GnssTime t0 = rep.scenario.start;
    for (const DetectorVerdict& v : rep.verdicts) {
        const int idx =
            static_cast<int>(std::llround(v.epoch.diff(t0) / rep.scenario.epoch_interval_s));
        out += std::to_string(idx) + "," + v.detector + "," + (v.alarm ? "1" : "0") + "," +
               fmt("%.6g", v.score) + "," + reason_name(v.reason) + "\n";
    }
    return out;
}

std::string report_json(const RunReport& rep) {
    nlohmann::json j;
    j["scenario"] = rep.scenario.name;
    j["seed"] = rep.scenario.seed;
    j["duration_s"] = rep.scenario.duration_s;
    j["epochs"] = rep.summary.epochs;
    j["summary"] = {
        {"rms_2d", rep.summary.rms_2d},
        {"rms_3d", rep.summary.rms_3d},
        {"rms_e", rep.summary.rms_e},
        {"rms_n", rep.summary.rms_n},
        {"rms_u", rep.summary.rms_u},
        {"fix_rate", rep.summary.fix_rate},
        {"availability", rep.summary.availability},
        {"max_err_3d", rep.summary.max_err_3d},
        {"attacked_rms_2d", rep.summary.attacked_rms_2d},
        {"attacked_rms_3d", rep.summary.attacked_rms_3d},
        {"attacked_availability", rep.summary.attacked_availability},
        {"benign_rms_2d", rep.summary.benign_rms_2d},
        {"benign_rms_3d", rep.summary.benign_rms_3d},
    };
    nlohmann::json wins = nlohmann::json::array();
    for (const WindowLatency& w : rep.summary.latencies) {
        nlohmann::json jw;
        jw["start_s"] = w.start_s;
        jw["end_s"] = w.end_s;
        if (w.latency_epochs) {
            jw["first_alarm_epoch"] = *w.first_alarm_epoch;
            jw["latency_epochs"] = *w.latency_epochs;
        }
        wins.push_back(jw);
    }
    j["attack_windows"] = wins;
    return j.dump(2) + "\n";
}

namespace {

const char* status_color(SolutionStatus s) {
    switch (s) {
        case SolutionStatus::Fix: return "#2ca02c";
        case SolutionStatus::Float: return "#17becf";
        case SolutionStatus::Dgnss: return "#1f77b4";
        case SolutionStatus::Single: return "#ff7f0e";
        default: return "#d62728";
    }
}

} // namespace

std::string plot_svg(const RunReport& rep) {
    const int w = 900, h1 = 460, h2 = 300, h = h1 + h2 + 60;
    std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" + std::to_string(w) +
                      "' height='" + std::to_string(h) + "'>\n";
    svg += "<rect width='100%' height='100%' fill='white'/>\n";

    // --- track panel: truth polyline + status-colored solution dots ---
    double min_e = 1e9, max_e = -1e9, min_n = 1e9, max_n = -1e9;
    for (const auto& t : rep.trajectory) {
        min_e = std::min(min_e, t.enu.east);
        max_e = std::max(max_e, t.enu.east);
        min_n = std::min(min_n, t.enu.north);
        max_n = std::max(max_n, t.enu.north);
    }
    const double pad = 0.05 * std::max({max_e - min_e, max_n - min_n, 1.0});
    min_e -= pad;
    max_e += pad;
    min_n -= pad;
    max_n += pad;
    const double span = std::max(max_e - min_e, max_n - min_n);
    auto tx = [&](double e) { return 40.0 + (e - min_e) / span * (w - 80); };
    auto ty = [&](double n) { return 20.0 + (max_n - n) / span * (h1 - 40); };

    svg += "<polyline fill='none' stroke='#bbbbbb' stroke-width='1' points='";
    for (const auto& t : rep.trajectory) {
        svg += fmt("%.1f", tx(t.enu.east)) + "," + fmt("%.1f", ty(t.enu.north)) + " ";
    }
    svg += "'/>\n";
    const EcefPosition station_truth = rep.scenario.station_truth();
    for (const EpochRecord& r : rep.epochs) {
        if (r.solution.status == SolutionStatus::None) continue;
        const EnuVector p = ecef_to_enu(r.solution.position, station_truth);
        svg += "<circle cx='" + fmt("%.1f", tx(p.east)) + "' cy='" + fmt("%.1f", ty(p.north)) +
               "' r='1.6' fill='" + status_color(r.solution.status) + "'/>\n";
    }
    svg += "<text x='40' y='14' font-size='12' fill='#333'>track (ENU m) - " +
           rep.scenario.name + "</text>\n";

    // --- error panel: 3D error vs epoch, attack windows shaded ---
    const double y0 = h1 + 40.0;
    double emax = 0.0;
    for (const EpochRecord& r : rep.epochs) emax = std::max(emax, r.err_3d);
    emax = std::max(emax, 0.1);
    auto ex = [&](double idx) {
        return 40.0 + idx / std::max<double>(1.0, rep.epochs.size() - 1) * (w - 80);
    };
    auto ey = [&](double v) { return y0 + (1.0 - std::min(v, emax) / emax) * (h2 - 20); };

    for (const AttackWindow& wdw : rep.scenario.attacks.windows) {
        const double x0 = ex(wdw.start_s / rep.scenario.epoch_interval_s);
        const double x1 = ex(wdw.end_s / rep.scenario.epoch_interval_s);
        svg += "<rect x='" + fmt("%.1f", x0) + "' y='" + fmt("%.1f", y0) + "' width='" +
               fmt("%.1f", x1 - x0) + "' height='" + std::to_string(h2 - 20) +
               "' fill='#d62728' opacity='0.12'/>\n";
    }
    svg += "<polyline fill='none' stroke='#1f77b4' stroke-width='1' points='";
    for (const EpochRecord& r : rep.epochs) {
        if (r.solution.status == SolutionStatus::None) continue;
        svg += fmt("%.1f", ex(r.index)) + "," + fmt("%.1f", ey(r.err_3d)) + " ";
    }
    svg += "'/>\n";
    svg += "<text x='40' y='" + fmt("%.0f", y0 - 8) +
           "' font-size='12' fill='#333'>3D error vs epoch (max " + fmt("%.2f", emax) +
           " m)</text>\n";
    svg += "</svg>\n";
    return svg;
}

void write_report_files(const RunReport& rep, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream f(out_dir + "/" + name, std::ios::binary);
        if (!f) throw ConfigError("cannot write " + out_dir + "/" + name);
        f << content;
    };
    write("epochs.csv", epochs_csv(rep));
    write("verdicts.csv", verdicts_csv(rep));
    write("report.json", report_json(rep));
    write("plot.svg", plot_svg(rep));
}

} // namespace rtkbench
