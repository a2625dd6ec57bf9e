// rtkbench_main.cpp : command-line front end (run, matrix, caster, golden)
#include <algorithm>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rtkbench/bench.hpp"
#include "rtkbench/caster_service.hpp"
#include "rtkbench/errors.hpp"

namespace fs = std::filesystem;
using namespace rtkbench;

namespace {

int cmd_run(const std::string& scenario_path, const std::string& out_dir) {
    const Scenario sc = load_scenario(scenario_path);
    const RunReport rep = run_scenario(sc);
    write_report_files(rep, out_dir);
    std::printf("%s: epochs=%d fix_rate=%.3f availability=%.3f rms3d=%.3f m\n", sc.name.c_str(),
                rep.summary.epochs, rep.summary.fix_rate, rep.summary.availability,
                rep.summary.rms_3d);
    return 0;
}

std::string bands_string(const ReceiverBands& b) {
    std::string out;
    for (System s : b.systems) {
        for (BandCode c : b.bands) {
            if (!out.empty()) out += "+";
            out += std::string(system_name(s)) + ":" + band_name(c);
        }
    }
    return out;
}

std::string attack_string(const Scenario& sc) {
    if (sc.attacks.windows.empty()) return "none";
    std::string out;
    for (const AttackWindow& w : sc.attacks.windows) {
        if (!out.empty()) out += ";";
        if (std::holds_alternative<JamAttack>(w.kind)) out += "jam";
        else if (std::holds_alternative<SpoofSyncAttack>(w.kind)) out += "spoof_sync";
        else if (std::holds_alternative<SpoofAsyncAttack>(w.kind)) out += "spoof_async";
        else if (std::holds_alternative<PseudorangeRampAttack>(w.kind)) out += "ramp";
        else out += "meacon";
    }
    return out;
}

int cmd_matrix(const std::string& suite_dir, const std::string& out_dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(suite_dir)) {
        if (e.path().extension() == ".scn") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("matrix: no .scn files in " + suite_dir);

    fs::create_directories(out_dir);
    std::string summary =
        "test,station_bands,rover_bands,attack,fix_rate,availability,rms_2d,rms_3d,"
        "attacked_rms_2d,attacked_rms_3d,attacked_availability\n";
    std::printf("%-12s %-26s %-26s %-22s %8s %8s %9s %9s\n", "test", "station", "rover", "attack",
                "fix", "avail", "rms2d", "rms3d");
    for (const fs::path& f : files) {
        const Scenario sc = load_scenario(f.string());
        const RunReport rep = run_scenario(sc);
        write_report_files(rep, (fs::path(out_dir) / sc.name).string());
        char row[512];
        std::snprintf(row, sizeof(row), "%s,%s,%s,%s,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n",
                      sc.name.c_str(), bands_string(sc.station.bands).c_str(),
                      bands_string(sc.rover.bands).c_str(), attack_string(sc).c_str(),
                      rep.summary.fix_rate, rep.summary.availability, rep.summary.rms_2d,
                      rep.summary.rms_3d, rep.summary.attacked_rms_2d, rep.summary.attacked_rms_3d,
                      rep.summary.attacked_availability);
        summary += row;
        std::printf("%-12s %-26s %-26s %-22s %8.3f %8.3f %9.3f %9.3f\n", sc.name.c_str(),
                    bands_string(sc.station.bands).c_str(), bands_string(sc.rover.bands).c_str(),
                    attack_string(sc).c_str(), rep.summary.fix_rate, rep.summary.availability,
                    rep.summary.rms_2d, rep.summary.rms_3d);
    }
    std::ofstream out(fs::path(out_dir) / "summary.csv", std::ios::binary);
    out << summary;
    std::printf("wrote %s/summary.csv\n", out_dir.c_str());
    return 0;
}

int cmd_caster(const std::string& bind, const std::string& mounts_file) {
    const auto colon = bind.find(':');
    if (colon == std::string::npos) throw ConfigError("caster: --bind must be addr:port");
    const std::string addr = bind.substr(0, colon);
    const auto port = static_cast<std::uint16_t>(std::stoi(bind.substr(colon + 1)));

    std::vector<MountpointDef> mounts;
    std::ifstream mf(mounts_file);
    if (!mf) throw ConfigError("caster: cannot open " + mounts_file);
    std::string name, token;
    int station_id;
    while (mf >> name >> station_id >> token) {
        mounts.push_back({name, static_cast<std::uint16_t>(station_id), token});
    }
    if (mounts.empty()) throw ConfigError("caster: no mountpoints in " + mounts_file);

    CasterService service(addr, port, mounts);
    service.start();
    std::printf("caster listening on %s:%u with %zu mountpoint(s)\n", addr.c_str(),
                service.port(), mounts.size());
    // run until interrupted
    std::signal(SIGINT, [](int) { std::exit(0); });
    for (;;) pause();
    return 0;
}

int cmd_golden(const std::string& out_dir, bool force) {
    const fs::path target = fs::path(out_dir) / "frame_type1.hex";
    if (fs::exists(target) && !force) {
        std::fprintf(stderr, "golden: %s exists, use --force to regenerate\n",
                     target.string().c_str());
        return 1;
    }
    CorrectionMessage msg;
    msg.type = MessageType::StationInfo;
    msg.station_id = 7;
    msg.gps_week = 2300;
    msg.tow_ms = 0;
    msg.position = {6378137.0, 0.0, 0.0};
    const std::vector<std::uint8_t> frame = encode_frame(msg);
    fs::create_directories(out_dir);
    std::ofstream f(target, std::ios::binary);
    for (std::uint8_t b : frame) {
        char buf[4];
        std::snprintf(buf, sizeof(buf), "%02x", b);
        f << buf;
    }
    f << "\n";
    std::printf("wrote %s (%zu bytes)\n", target.string().c_str(), frame.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"measurement-level GNSS RTK attack/defense workbench"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out";
    auto* run = app.add_subcommand("run", "run one scenario and write reports");
    run->add_option("--scenario", scenario_path, "scenario file")->required();
    run->add_option("--out", out_dir, "output directory");

    std::string suite_dir, matrix_out = "out/matrix";
    auto* matrix = app.add_subcommand("matrix", "run every scenario in a suite directory");
    matrix->add_option("--suite", suite_dir, "directory with .scn files")->required();
    matrix->add_option("--out", matrix_out, "output directory");

    std::string bind = "127.0.0.1:2101", mounts_file;
    auto* caster = app.add_subcommand("caster", "start the TCP correction caster");
    caster->add_option("--bind", bind, "addr:port");
    caster->add_option("--mounts", mounts_file, "mountpoints file: name station_id token")
        ->required();

    std::string golden_out = "tests/golden";
    bool force = false;
    auto* golden = app.add_subcommand("golden", "regenerate golden wire frames");
    golden->add_option("--out", golden_out, "golden directory");
    golden->add_flag("--force", force, "overwrite existing goldens");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(scenario_path, out_dir);
        if (matrix->parsed()) return cmd_matrix(suite_dir, matrix_out);
        if (caster->parsed()) return cmd_caster(bind, mounts_file);
        if (golden->parsed()) return cmd_golden(golden_out, force);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
