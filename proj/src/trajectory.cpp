// trajectory.cpp : seeded vehicle drive with speed/acceleration caps
#include "rtkbench/trajectory.hpp"

#include <cmath>

#include "rtkbench/errors.hpp"
#include "rtkbench/rng.hpp"

namespace rtkbench {

std::vector<TrajectorySample> generate_trajectory(std::uint64_t seed, double duration_s,
                                                  const EcefPosition& station,
                                                  const TrajectoryConfig& cfg,
                                                  const GnssTime& start, double epoch_interval_s) {
    if (duration_s < 60.0) throw ConfigError("generate_trajectory: duration below 60 s");
    if (cfg.waypoint_count < 1) throw ConfigError("generate_trajectory: no waypoints");

    RngKey key = RngKey(seed).with("trajectory");
    const double height = key.uniform(cfg.min_height_m, cfg.max_height_m, 0);

    std::vector<std::pair<double, double>> wps; // (east, north)
    for (int i = 0; i < cfg.waypoint_count; ++i) {
        const double r = cfg.radius_m * std::sqrt(key.uniform01(2 + 2 * i));
        const double th = key.uniform(0.0, 2.0 * kPi, 3 + 2 * i);
        wps.emplace_back(r * std::cos(th), r * std::sin(th));
    }

    const double dt = epoch_interval_s;
    const double amax = cfg.max_accel_m_s2;
    const auto n = static_cast<std::size_t>(std::llround(duration_s / dt));
    std::vector<TrajectorySample> out;
    out.reserve(n);

    double pe = 0.0, pn = 0.0; // start at the station
    double ve = 0.0, vn = 0.0;
    double he = 1.0, hn = 0.0; // heading
    std::size_t target = 0;

    for (std::size_t k = 0; k < n; ++k) {
        const double de = wps[target].first - pe;
        const double dn = wps[target].second - pn;
        const double dist = std::sqrt(de * de + dn * dn);
        const double speed = std::sqrt(ve * ve + vn * vn);
        if (dist < 5.0 && speed < 0.5) target = (target + 1) % wps.size();

        // heading: straight along the velocity while moving; turns happen at
        // low speed only, and the turn epoch respects the acceleration cap
        double ue = he, un = hn;
        bool turning = false;
        if (speed > 0.5) {
            ue = ve / speed;
            un = vn / speed;
        } else if (dist > 1e-6) {
            ue = de / dist;
            un = dn / dist;
            turning = (ue * he + un * hn) < 0.999;
        }

        const double ahead = std::max(de * ue + dn * un - 3.0, 0.0);
        const double v_des = std::min(cfg.max_speed_m_s, 0.85 * std::sqrt(2.0 * amax * ahead));
        double a_cmd = (v_des - speed) / dt;
        a_cmd = std::max(-amax, std::min(amax, a_cmd));
        double v_next = std::max(0.0, speed + a_cmd * dt);
        if (turning) v_next = std::min(v_next, std::max(0.0, amax * dt - speed));

        const double ve_next = ue * v_next;
        const double vn_next = un * v_next;
        const double ae = (ve_next - ve) / dt;
        const double an = (vn_next - vn) / dt;

        TrajectorySample s;
        s.epoch = start.plus(static_cast<double>(k) * dt);
        s.enu = {pe, pn, height};
        s.position = enu_to_ecef(s.enu, station);
        s.velocity = {ve, vn, 0.0};
        s.acceleration = {ae, an, 0.0};
        out.push_back(s);

        pe += ve * dt + 0.5 * ae * dt * dt;
        pn += vn * dt + 0.5 * an * dt * dt;
        ve = ve_next;
        vn = vn_next;
        he = ue;
        hn = un;
    }
    return out;
}

} // namespace rtkbench
