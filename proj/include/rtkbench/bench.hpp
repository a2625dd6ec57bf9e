// bench.hpp : end-to-end scenario execution, metrics and report output
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rtkbench/guard.hpp"
#include "rtkbench/scenario.hpp"
#include "rtkbench/solver.hpp"
#include "rtkbench/trajectory.hpp"

namespace rtkbench {

struct EpochRecord {
    int index = 0;
    GnssTime wall{};
    EcefPosition truth{};
    RtkSolution solution{};
    EnuVector error{}; // solution - truth, ENU at the truth point
    double err_2d = 0.0;
    double err_3d = 0.0;
    bool attack_active = false;
    bool corrections_used = false;
};

struct StationRecord {
    int index = 0;
    EcefPosition declared{};
    std::optional<RtkSolution> monitor_spp;
    double reported_clock_s = 0.0;
    bool stream_enabled = false;
};

struct WindowLatency {
    double start_s = 0.0;
    double end_s = 0.0;
    std::optional<int> first_alarm_epoch; // index, >= window start
    std::optional<int> latency_epochs;    // first alarm - start
};

struct RunSummary {
    double rms_2d = 0.0;
    double rms_3d = 0.0;
    double rms_e = 0.0, rms_n = 0.0, rms_u = 0.0;
    double fix_rate = 0.0;
    double availability = 0.0;
    double max_err_3d = 0.0;
    int epochs = 0;
    // split over attack windows (station or rover victim)
    double attacked_rms_2d = 0.0, attacked_rms_3d = 0.0;
    double attacked_rms_e = 0.0, attacked_rms_n = 0.0, attacked_rms_u = 0.0;
    double benign_rms_2d = 0.0, benign_rms_3d = 0.0;
    double attacked_availability = 1.0;
    int attacked_epochs = 0;
    std::vector<WindowLatency> latencies;
};

struct RunReport {
    Scenario scenario;
    std::vector<TrajectorySample> trajectory;
    std::vector<EpochRecord> epochs;
    std::vector<StationRecord> station;
    std::vector<DetectorVerdict> verdicts;
    RunSummary summary;
};

RunReport run_scenario(const Scenario& scenario);

// Recomputes the summary from per-epoch records. Throws EmptyRun when no
// record carries a position.
RunSummary compute_metrics(const std::vector<EpochRecord>& epochs,
                           const std::vector<DetectorVerdict>& verdicts,
                           const std::vector<AttackWindow>& windows, double epoch_interval_s);

std::string epochs_csv(const RunReport& report);
std::string verdicts_csv(const RunReport& report);
std::string report_json(const RunReport& report);
std::string plot_svg(const RunReport& report);

// Writes report.json, epochs.csv, verdicts.csv and plot.svg into out_dir.
void write_report_files(const RunReport& report, const std::string& out_dir);

} // namespace rtkbench
