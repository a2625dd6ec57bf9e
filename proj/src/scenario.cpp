// scenario.cpp : scenario file parsing
#include "rtkbench/scenario.hpp"

#include <fstream>
#include <sstream>

#include "rtkbench/errors.hpp"

namespace rtkbench {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double num(const std::string& s, const std::string& line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("scenario: bad number '" + s + "' in: " + line);
    }
}

std::set<BandCode> parse_bands(const std::string& s, const std::string& line) {
    std::set<BandCode> out;
    for (const std::string& tok : split(s, ',')) {
        if (tok == "L1E1" || tok == "*") out.insert(BandCode::L1E1);
        if (tok == "L2E5b" || tok == "*") out.insert(BandCode::L2E5b);
        if (tok != "L1E1" && tok != "L2E5b" && tok != "*") {
            throw ConfigError("scenario: unknown band '" + tok + "' in: " + line);
        }
    }
    return out;
}

std::set<System> parse_systems(const std::string& s, const std::string& line) {
    std::set<System> out;
    for (const std::string& tok : split(s, ',')) {
        if (tok == "SysG" || tok == "*") out.insert(System::SysG);
        if (tok == "SysE" || tok == "*") out.insert(System::SysE);
        if (tok != "SysG" && tok != "SysE" && tok != "*") {
            throw ConfigError("scenario: unknown system '" + tok + "' in: " + line);
        }
    }
    return out;
}

std::map<std::string, std::string> parse_kv(const std::vector<std::string>& toks,
                                            std::size_t from, const std::string& line) {
    std::map<std::string, std::string> kv;
    for (std::size_t i = from; i < toks.size(); ++i) {
        const auto eq = toks[i].find('=');
        if (eq == std::string::npos) {
            throw ConfigError("scenario: expected key=value, got '" + toks[i] + "' in: " + line);
        }
        kv[toks[i].substr(0, eq)] = toks[i].substr(eq + 1);
    }
    return kv;
}

AttackWindow parse_attack(const std::vector<std::string>& toks, const std::string& line,
                          const EcefPosition& station_truth) {
    if (toks.size() < 5) throw ConfigError("scenario: malformed attack line: " + line);
    AttackWindow w;
    w.start_s = num(toks[1], line);
    w.end_s = num(toks[2], line);
    w.victim = toks[3];
    const std::string& kind = toks[4];
    auto kv = parse_kv(toks, 5, line);

    auto get = [&](const char* k, const char* dflt) -> std::string {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : it->second;
    };

    if (kind == "jam") {
        JamAttack j;
        j.power_dbm = num(get("power_dbm", "0"), line);
        j.bandwidth_hz = num(get("bandwidth_hz", "25e6"), line);
        j.center_band = get("band", "L1E1") == "L2E5b" ? BandCode::L2E5b : BandCode::L1E1;
        const std::string m = get("matched", "");
        if (m == "SysG") j.matched_system = System::SysG;
        if (m == "SysE") j.matched_system = System::SysE;
        j.processing_gain_db = num(get("pg_db", "36"), line);
        w.kind = j;
    } else if (kind == "spoof_sync" || kind == "spoof_async") {
        SpoofSyncAttack s;
        const auto off = split(get("offset_enu", "0,0,0"), ',');
        if (off.size() != 3) throw ConfigError("scenario: offset_enu needs e,n,u: " + line);
        s.target_position = enu_to_ecef({num(off[0], line), num(off[1], line), num(off[2], line)},
                                        station_truth);
        s.position_ramp_m_per_s = num(get("position_ramp", "0"), line);
        s.clock_ramp_s_per_s = num(get("clock_ramp", "0"), line);
        s.bands = parse_bands(get("bands", "*"), line);
        s.systems = parse_systems(get("systems", "*"), line);
        s.power_advantage_db = num(get("advantage_db", "10"), line);
        s.atmos_bias_m = num(get("atmos_bias", "0"), line);
        if (kind == "spoof_sync") {
            w.kind = s;
        } else {
            SpoofAsyncAttack a;
            a.spoof = s;
            a.capture_delay_epochs = static_cast<int>(num(get("capture_delay", "5"), line));
            w.kind = a;
        }
    } else if (kind == "ramp") {
        PseudorangeRampAttack r;
        r.rate_m_per_s = num(get("rate", "0"), line);
        r.bands = parse_bands(get("bands", "*"), line);
        r.systems = parse_systems(get("systems", "*"), line);
        w.kind = r;
    } else if (kind == "meacon") {
        MeaconAttack m;
        m.delay_s = num(get("delay", "1"), line);
        w.kind = m;
    } else {
        throw ConfigError("scenario: unknown attack kind '" + kind + "' in: " + line);
    }
    return w;
}

} // namespace

Scenario parse_scenario(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("rtkbench-scenario v1", 0) != 0) {
        throw ConfigError("scenario: missing 'rtkbench-scenario v1' header");
    }
    Scenario sc;
    std::vector<std::vector<std::string>> attack_lines;

    while (std::getline(in, line)) {
        if (const auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
        std::istringstream ls(line);
        std::vector<std::string> toks;
        std::string tok;
        while (ls >> tok) toks.push_back(tok);
        if (toks.empty()) continue;
        const std::string& k = toks[0];
        auto want = [&](std::size_t n) {
            if (toks.size() != n + 1) throw ConfigError("scenario: bad arity in: " + line);
        };

        if (k == "name") {
            want(1);
            sc.name = toks[1];
        } else if (k == "duration_s") {
            want(1);
            sc.duration_s = num(toks[1], line);
        } else if (k == "seed") {
            want(1);
            sc.seed = static_cast<std::uint64_t>(num(toks[1], line));
        } else if (k == "epoch_interval_s") {
            want(1);
            sc.epoch_interval_s = num(toks[1], line);
        } else if (k == "start_week") {
            want(1);
            sc.start.week = static_cast<int>(num(toks[1], line));
        } else if (k == "start_tow_s") {
            want(1);
            sc.start.tow_s = num(toks[1], line);
        } else if (k == "station.llh_deg") {
            want(3);
            sc.station.geodetic = {deg2rad(num(toks[1], line)), deg2rad(num(toks[2], line)),
                                   num(toks[3], line)};
        } else if (k == "station.id") {
            want(1);
            sc.station.id = static_cast<std::uint16_t>(num(toks[1], line));
        } else if (k == "station.mode") {
            want(1);
            if (toks[1] == "static") sc.station.mode = StationModeKind::Static;
            else if (toks[1] == "survey_in") sc.station.mode = StationModeKind::SurveyIn;
            else if (toks[1] == "time_only") sc.station.mode = StationModeKind::TimeOnly;
            else throw ConfigError("scenario: unknown station mode: " + line);
        } else if (k == "station.survey_target_sigma_m") {
            want(1);
            sc.station.survey.target_sigma_m = num(toks[1], line);
        } else if (k == "station.survey_min_duration_s") {
            want(1);
            sc.station.survey.min_duration_s = num(toks[1], line);
        } else if (k == "station.bands") {
            want(1);
            sc.station.bands.bands = parse_bands(toks[1], line);
        } else if (k == "station.systems") {
            want(1);
            sc.station.bands.systems = parse_systems(toks[1], line);
        } else if (k == "station.smoothing") {
            want(1);
            sc.station.smoothing = toks[1] == "on";
        } else if (k == "station.clock_bias_s") {
            want(1);
            sc.station.clock.bias_s = num(toks[1], line);
        } else if (k == "station.clock_drift_s_s") {
            want(1);
            sc.station.clock.drift_s_s = num(toks[1], line);
        } else if (k == "station.clock_rw_sigma") {
            want(1);
            sc.station.clock.random_walk_sigma = num(toks[1], line);
        } else if (k == "rover.bands") {
            want(1);
            sc.rover.bands.bands = parse_bands(toks[1], line);
        } else if (k == "rover.systems") {
            want(1);
            sc.rover.bands.systems = parse_systems(toks[1], line);
        } else if (k == "rover.policy") {
            want(1);
            if (toks[1] == "strict") sc.rover.policy = FallbackPolicy::Strict;
            else if (toks[1] == "fallback_single") sc.rover.policy = FallbackPolicy::FallbackToSingle;
            else throw ConfigError("scenario: unknown rover policy: " + line);
        } else if (k == "rover.guard") {
            want(1);
            sc.rover.guard = toks[1] == "on";
        } else if (k == "rover.clock_bias_s") {
            want(1);
            sc.rover.clock.bias_s = num(toks[1], line);
        } else if (k == "rover.clock_drift_s_s") {
            want(1);
            sc.rover.clock.drift_s_s = num(toks[1], line);
        } else if (k == "rover.waypoints") {
            want(1);
            sc.trajectory.waypoint_count = static_cast<int>(num(toks[1], line));
        } else if (k == "shell_g") {
            want(4);
            sc.shell_g = {static_cast<int>(num(toks[1], line)), static_cast<int>(num(toks[2], line)),
                          num(toks[3], line), deg2rad(num(toks[4], line))};
        } else if (k == "shell_e") {
            want(4);
            sc.shell_e = {static_cast<int>(num(toks[1], line)), static_cast<int>(num(toks[2], line)),
                          num(toks[3], line), deg2rad(num(toks[4], line))};
        } else if (k == "errors.iono_zenith_m") {
            want(1);
            sc.errors.iono_zenith_delay_m = num(toks[1], line);
            sc.solver.iono_zenith_m = sc.errors.iono_zenith_delay_m;
        } else if (k == "errors.tropo_zenith_m") {
            want(1);
            sc.errors.tropo_zenith_delay_m = num(toks[1], line);
            sc.solver.tropo_zenith_m = sc.errors.tropo_zenith_delay_m;
        } else if (k == "errors.multipath_sigma_m") {
            want(1);
            sc.errors.multipath_sigma_m = num(toks[1], line);
        } else if (k == "errors.code_sigma_m") {
            want(1);
            sc.errors.code_noise_sigma_m_45 = num(toks[1], line);
        } else if (k == "errors.phase_sigma_cyc") {
            want(1);
            sc.errors.phase_noise_sigma_cyc_45 = num(toks[1], line);
        } else if (k == "elevation_mask_deg") {
            want(1);
            sc.elevation_mask_rad = deg2rad(num(toks[1], line));
            sc.solver.elevation_mask_rad = sc.elevation_mask_rad;
        } else if (k == "attacker.enu") {
            want(3);
            sc.attacker_enu = {num(toks[1], line), num(toks[2], line), num(toks[3], line)};
        } else if (k == "corrections.source") {
            want(1);
            if (toks[1] == "station") sc.corrections_source = CorrectionsSource::Station;
            else if (toks[1] == "truth") sc.corrections_source = CorrectionsSource::Truth;
            else throw ConfigError("scenario: unknown corrections source: " + line);
        } else if (k == "guard.geofence") {
            want(2);
            sc.guard.geofence.radius_threshold_m = num(toks[1], line);
            sc.guard.geofence.persistence = static_cast<int>(num(toks[2], line));
        } else if (k == "guard.clock") {
            want(2);
            sc.guard.clock.max_drift_s_s = num(toks[1], line);
            sc.guard.clock.window = static_cast<int>(num(toks[2], line));
        } else if (k == "guard.residual") {
            want(2);
            sc.guard.residual.threshold_m = num(toks[1], line);
            sc.guard.residual.persistence = static_cast<int>(num(toks[2], line));
        } else if (k == "guard.benefit_factor") {
            want(1);
            sc.guard.benefit.harmful_factor = num(toks[1], line);
        } else if (k == "solver.ratio_threshold") {
            want(1);
            sc.solver.ratio_threshold = num(toks[1], line);
        } else if (k == "solver.fix_min_epochs") {
            want(1);
            sc.solver.fix_min_epochs = static_cast<int>(num(toks[1], line));
        } else if (k == "attack") {
            attack_lines.push_back(toks);
        } else {
            throw ConfigError("scenario: unknown key '" + k + "' in: " + line);
        }
    }

    if (sc.duration_s < 60.0) throw ConfigError("scenario: duration below 60 s");
    const EcefPosition truth = sc.station_truth();
    sc.attacks.attacker_position = enu_to_ecef(sc.attacker_enu, truth);
    for (const auto& toks : attack_lines) {
        std::string joined;
        for (const auto& t : toks) joined += t + " ";
        sc.attacks.windows.push_back(parse_attack(toks, joined, truth));
    }
    sc.errors.seed = sc.seed;
    sc.errors.atmosphere_anchor = truth;
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("scenario: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    Scenario sc = parse_scenario(ss.str());
    if (sc.name == "unnamed") {
        // default the name to the file stem
        auto slash = path.find_last_of('/');
        std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
        if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
        sc.name = stem;
    }
    return sc;
}

} // namespace rtkbench
