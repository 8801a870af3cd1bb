#pragma once

#include "spinhjb/driver.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace spinhjb {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// Master seeds of the two disjoint random streams.
struct RunSeeds {
    std::uint64_t outer = 1;      ///< outer controlled path
    std::uint64_t estimator = 1;  ///< every nested Monte-Carlo estimate

    SeedPolicy outer_policy() const { return SeedPolicy{outer}.derive(stream::outer); }
    SeedPolicy estimator_policy() const { return SeedPolicy{estimator}.derive(stream::estimator); }

    friend bool operator==(const RunSeeds&, const RunSeeds&) = default;
};

/// Everything needed to reproduce one experiment.
struct ScenarioSpec {
    std::string name;
    ModelParams params;
    SpinConfiguration initial;
    TargetProfile target;
    TerminalPayoff payoff;
    Partition partition;
    EstimatorConfig estimator;
    RunSeeds seeds;
    std::string output_dir = "out";

    /// Throws std::invalid_argument if the parts disagree about N or are invalid.
    void validate() const;

    friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

/// Nonfatal diagnostics, currently only the weight-underflow regime
/// lambda nu^2 << delta C_ext^2 (1 + alpha^2).
std::vector<std::string> regime_warnings(const ScenarioSpec& spec);

const std::vector<std::string>& preset_names();

/// Throws std::invalid_argument for unknown names.
ScenarioSpec preset(const std::string& name);

struct ExactValue {
    double w = 0.0;
    Field grad_w;  ///< tangential gradient of w
    Field grad_W;  ///< -grad_w / (beta w)
};

/// w = e^{t-T} m_3 + 2 with beta = 2, N = 1.
ExactValue exact_solution_test1(double t, const SpinConfiguration& m, double horizon = 0.5);

/// w = e^{t-T} (m_{1,3} + m_{2,3}) + 2 with beta = 1, N = 2.
ExactValue exact_solution_test2(double t, const SpinConfiguration& m, double horizon = 0.5);

/// Closed form for a preset that has one, as an ExactSolution.
ExactSolution exact_solution_for(const ScenarioSpec& spec);

// Config files: INI sections [scenario] [model] [initial] [target] [payoff]
// [grid] [estimator] [seeds] [output]. See README for the keys.
std::string emit_config(const ScenarioSpec& spec);
ScenarioSpec parse_config(const std::string& text);
ScenarioSpec load_config_file(const std::filesystem::path& path);

/// Tabulated target grid and everything derived for one run.
struct ScenarioResult {
    ControlledRun run;
    CostBreakdown cost;
    TargetGrid target;
};

/// Monte-Carlo run of the feedback loop for spec.
ScenarioResult run_scenario(const ScenarioSpec& spec);

/// Same loop driven by a caller-supplied oracle (exact, zero, ...).
ScenarioResult run_scenario(const ScenarioSpec& spec, const GradientOracle& oracle);

/// One row per grid time: t, m_{i,l}, u_{i,l}, |u_i|^2, angle_i, w, w_stderr,
/// flagged_fraction. Values absent at t = T (or for zero controls) are empty.
std::string trajectory_csv(const ScenarioResult& result);

/// t, err
std::string err_csv(const PathSample& trajectory, const std::vector<double>& err);

/// Writes config.ini, trajectory.csv, extra tables and manifest.json into dir.
void write_run_artifact(const ScenarioSpec& spec, const ScenarioResult& result,
                        const std::filesystem::path& dir,
                        const std::vector<std::pair<std::string, std::string>>& extra_tables = {});

/// Time average of an err(t) series (trapezoid rule on the grid).
double time_average(const std::vector<double>& series, const Partition& partition);

}  // namespace spinhjb
