// Command-line front end: run presets or config files, validate against the
// closed-form test problems, estimate w at a point, emit editable configs.

#include "spinhjb/scenarios.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace spinhjb;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;
constexpr std::size_t kDeskSampleCap = 10000;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> tau;
    std::optional<std::size_t> samples;
    std::optional<double> hbar;
    std::optional<int> quad_points;
    std::optional<unsigned> threads;
    std::optional<std::string> out_dir;
    std::optional<std::string> method;
    bool full = false;
    bool strict = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "master seed for both the outer and the estimator streams");
    cmd->add_option("--tau", o.tau, "time step; T/tau must be an integer");
    cmd->add_option("--samples", o.samples, "Monte-Carlo samples M per estimate (even)");
    cmd->add_option("--hbar", o.hbar, "stencil width (0 selects 1/sqrt(M))");
    cmd->add_option("--quad-points", o.quad_points, "Gauss-Legendre points per step (1-5)");
    cmd->add_option("--threads", o.threads, "worker threads");
    cmd->add_option("--out-dir", o.out_dir, "output directory");
    cmd->add_flag("--full", o.full, "use the preset's sample count even above 10^4");
    cmd->add_flag("--strict", o.strict, "treat parameter-regime warnings as errors");
}

ScenarioSpec resolve(const std::string& name_or_path) {
    const auto& names = preset_names();
    if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return preset(name_or_path);
    if (std::filesystem::exists(name_or_path)) return load_config_file(name_or_path);
    return preset(name_or_path);  // throws with the list of presets
}

void apply(ScenarioSpec& spec, const Overrides& o) {
    if (o.seed) spec.seeds = RunSeeds{*o.seed, *o.seed};
    if (o.tau) {
        if (!(*o.tau > 0.0)) throw std::invalid_argument("--tau must be > 0");
        const double steps = std::round(spec.params.horizon / *o.tau);
        if (steps < 1.0 || std::abs(steps * *o.tau - spec.params.horizon) > 1e-9 * spec.params.horizon)
            throw std::invalid_argument("--tau must divide the horizon T evenly");
        spec.partition = Partition(spec.params.horizon, static_cast<std::size_t>(steps));
    }
    if (o.samples) spec.estimator.samples = *o.samples;
    if (o.hbar) spec.estimator.hbar = *o.hbar;
    if (o.quad_points) spec.estimator.quad_points = *o.quad_points;
    if (o.threads) spec.estimator.threads = *o.threads;
    if (o.out_dir) spec.output_dir = *o.out_dir;
    if (o.method) {
        if (*o.method != "A" && *o.method != "B") throw std::invalid_argument("--method must be A or B");
        spec.estimator.method = *o.method == "A" ? GradientMethod::A : GradientMethod::B;
    }
    if (!o.full && spec.estimator.samples > kDeskSampleCap) {
        std::cerr << "note: capping M at " << kDeskSampleCap << " (was " << spec.estimator.samples
                  << "); pass --full to use the preset value\n";
        spec.estimator.samples = kDeskSampleCap;
    }
    spec.validate();

    std::vector<std::string> warnings = regime_warnings(spec);
    const double h = spec.estimator.hbar;
    const double root = 1.0 / std::sqrt(static_cast<double>(spec.estimator.samples));
    if (h > 0.0 && h < 0.1 * root && spec.estimator.samples <= kDeskSampleCap)
        warnings.push_back("hbar = " + std::to_string(h) + " is much smaller than 1/sqrt(M) = " +
                           std::to_string(root) + "; difference quotients will be noisy");
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    if (o.strict && !warnings.empty()) throw std::invalid_argument("warnings are fatal under --strict");
}

int cmd_run(const std::string& target, const Overrides& o) {
    ScenarioSpec spec = resolve(target);
    apply(spec, o);
    const ScenarioResult result = run_scenario(spec);
    write_run_artifact(spec, result, spec.output_dir);
    std::printf("%s: J = %zu, M = %zu, cost = %.6g (running %.6g, control %.6g, terminal %.6g)\n",
                spec.name.c_str(), spec.partition.steps, spec.estimator.samples, result.cost.total(),
                result.cost.running, result.cost.control, result.cost.terminal);
    std::printf("max orthogonality %.3g, artifact in %s\n", max_orthogonality_angle(result.run),
                spec.output_dir.c_str());
    return kOk;
}

int cmd_validate(const std::string& problem, const Overrides& o) {
    if (problem != "test1" && problem != "test2")
        throw std::invalid_argument("validate takes test1 or test2");
    ScenarioSpec spec = preset(problem);
    apply(spec, o);
    const ScenarioResult approx = run_scenario(spec);
    const ScenarioResult exact = run_scenario(spec, exact_oracle(spec.partition, exact_solution_for(spec)));
    const auto err = err_metric(exact.run.trajectory, approx.run.trajectory);
    write_run_artifact(spec, approx, spec.output_dir,
                       {{"err.csv", err_csv(approx.run.trajectory, err)},
                        {"exact_trajectory.csv", trajectory_csv(exact)}});
    std::printf("%s method %s M = %zu: mean err = %.6e, max err = %.6e, final err = %.6e\n",
                problem.c_str(), spec.estimator.method == GradientMethod::A ? "A" : "B",
                spec.estimator.samples, time_average(err, spec.partition),
                *std::max_element(err.begin(), err.end()), err.back());
    return kOk;
}

int cmd_estimate_w(const std::string& target, const Overrides& o, std::size_t time_index,
                   const std::optional<std::string>& point) {
    ScenarioSpec spec = resolve(target);
    apply(spec, o);
    if (time_index >= spec.partition.steps) throw std::invalid_argument("--time-index must be < J");
    SpinConfiguration m = spec.initial;
    if (point) {
        std::string text = *point;
        std::replace(text.begin(), text.end(), ';', ' ');
        std::replace(text.begin(), text.end(), ',', ' ');
        std::istringstream in(text);
        Field flat;
        for (double v; in >> v;) flat.push_back(v);
        if (!in.eof()) throw std::invalid_argument("--point must be a list of numbers");
        m = SpinConfiguration(flat);
        if (m.dims() != spec.params.dims()) throw std::invalid_argument("--point has the wrong number of spins");
    }
    const Partition part = spec.partition.from(time_index);
    const TargetGrid target_grid = tabulate_target(spec.target, spec.partition);
    const WEstimate est = estimate_w(spec.params, part, m, spec.estimator, spec.payoff, target_grid,
                                     spec.seeds.estimator_policy());
    const double b = beta(spec.params);
    std::printf("t = %.6g  w = %.10g +- %.3g (95%% CI [%.10g, %.10g])  W = %.10g  flagged = %.3g\n",
                part.start_time(), est.value, est.std_error, est.value - 1.96 * est.std_error,
                est.value + 1.96 * est.std_error, value_function_W(est, b), est.flagged_fraction);
    try {
        const auto exact = exact_solution_for(spec)(part.start_time(), m);
        std::printf("exact w = %.10g, deviation = %.3g standard errors\n", exact.first,
                    est.std_error > 0 ? (est.value - exact.first) / est.std_error : 0.0);
    } catch (const std::invalid_argument&) {
    }
    return kOk;
}

int cmd_emit_config(const std::string& name, const std::optional<std::string>& output) {
    const std::string text = emit_config(resolve(name));
    if (!output) {
        std::cout << text;
        return kOk;
    }
    std::ofstream out(*output, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write '" + *output + "'");
    out << text;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feedback control of stochastic spin ensembles via Feynman-Kac gradient estimation"};
    app.require_subcommand(1);

    Overrides run_o, val_o, est_o;
    std::string run_target, val_problem, est_target, emit_name;
    std::size_t time_index = 0;
    std::optional<std::string> point, emit_out;

    auto* run = app.add_subcommand("run", "run the full feedback loop and write an artifact directory");
    run->add_option("scenario", run_target, "preset name, config file, or manifest.json")->required();
    run->add_option("--method", run_o.method, "gradient method A or B");
    add_common(run, run_o);

    auto* val = app.add_subcommand("validate", "compare against the closed-form test problem");
    val->add_option("problem", val_problem, "test1 or test2")->required();
    val->add_option("--method", val_o.method, "gradient method A or B");
    add_common(val, val_o);

    auto* est = app.add_subcommand("estimate-w", "Monte-Carlo estimate of w at one point");
    est->add_option("scenario", est_target, "preset name or config file")->required();
    est->add_option("--time-index", time_index, "grid index of the evaluation time");
    est->add_option("--point", point, "state as 'x y z; x y z; ...' (default: initial state)");
    add_common(est, est_o);

    auto* emit = app.add_subcommand("emit-config", "write a preset as an editable config file");
    emit->add_option("preset", emit_name, "preset name")->required();
    emit->add_option("-o,--output", emit_out, "output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*run) return cmd_run(run_target, run_o);
        if (*val) return cmd_validate(val_problem, val_o);
        if (*est) return cmd_estimate_w(est_target, est_o, time_index, point);
        if (*emit) return cmd_emit_config(emit_name, emit_out);
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << " (flagged fraction "
                  << e.flagged_fraction() << ")\n";
        return kNumericalFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kOk;
}
