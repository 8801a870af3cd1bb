#include "spinhjb/driver.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace spinhjb {

GradientOracle monte_carlo_oracle(const ModelParams& params, const Partition& partition,
                                  const EstimatorConfig& cfg, const TerminalPayoff& payoff,
                                  const TargetGrid& target, const SeedPolicy& seeds) {
    return [&params, partition, cfg, &payoff, &target, seeds](std::size_t step, StepStage stage,
                                                             const SpinConfiguration& m) {
        const SeedPolicy sub = seeds.derive({step, static_cast<std::uint64_t>(stage)});
        const GradientEstimate g =
            estimate_gradient(params, partition.from(step), m, cfg, payoff, target, sub);
        return OracleValue{g.grad_W, g.w_at_point.value, g.w_at_point.std_error, g.flagged_fraction};
    };
}

GradientOracle exact_oracle(const Partition& partition, ExactSolution solution) {
    return [partition, solution = std::move(solution)](std::size_t step, StepStage,
                                                       const SpinConfiguration& m) {
        auto [w, grad] = solution(partition.time(step), m);
        return OracleValue{std::move(grad), w, 0.0, 0.0};
    };
}

GradientOracle zero_oracle() {
    return [](std::size_t, StepStage, const SpinConfiguration& m) {
        return OracleValue{Field(m.dims(), 0.0), 1.0, 0.0, 0.0};
    };
}

namespace {

OracleValue query(const GradientOracle& oracle, const Partition& partition, std::size_t step,
                  StepStage stage, const SpinConfiguration& m) {
    try {
        OracleValue v = oracle(step, stage, m);
        if (v.grad_W.size() != m.dims())
            throw std::runtime_error("gradient oracle returned a vector of the wrong length");
        return v;
    } catch (const NumericalFailure& e) {
        std::ostringstream msg;
        msg << "step " << step << " (t = " << partition.time(step) << ", "
            << (stage == StepStage::state ? "grid state" : "midpoint") << "): " << e.what();
        throw NumericalFailure(msg.str(), e.flagged_fraction());
    }
}

}  // namespace

ControlledRun run_algorithm(const ModelParams& params, const Partition& partition,
                            const SpinConfiguration& start, const GradientOracle& oracle,
                            const WalkIncrements& outer_walk) {
    params.validate();
    if (start.dims() != params.dims()) throw std::invalid_argument("initial state has wrong dimension");
    if (partition.start != 0) throw std::invalid_argument("driver runs over the full partition");
    if (outer_walk.steps() < partition.steps || outer_walk.dims() != params.dims())
        throw std::invalid_argument("outer walk does not cover the partition");

    const std::size_t J = partition.steps;
    const double tau = partition.tau();
    ControlledRun run;
    run.trajectory = PathSample{partition, {start}};
    run.trajectory.states.reserve(J + 1);
    for (auto* v : {&run.u_state, &run.u_mid}) v->reserve(J);

    Field qm(params.dims());
    Field e(params.dims());
    Field mid(params.dims());
    Field next(params.dims());
    for (std::size_t l = 0; l < J; ++l) {
        const SpinConfiguration m = run.trajectory.states.back();
        const auto xi = outer_walk.row(l);

        OracleValue at_m = query(oracle, partition, l, StepStage::state, m);
        Field u1 = feedback_control(params, m, at_m.grad_W);
        controlled_stage(params, m.flat(), m.flat(), u1, xi, 1.0, tau, qm, e);

        for (std::size_t c = 0; c < mid.size(); ++c) mid[c] = 0.5 * (m.flat()[c] + e[c]);
        SpinConfiguration g = SpinConfiguration::normalized(mid);

        OracleValue at_g = query(oracle, partition, l, StepStage::midpoint, g);
        Field u2 = feedback_control(params, g, at_g.grad_W);
        controlled_stage(params, m.flat(), mid, u2, xi, 1.0, tau, qm, next);

        run.trajectory.states.emplace_back(next, kPathSphereTolerance);
        run.u_state.push_back(std::move(u1));
        run.u_mid.push_back(std::move(u2));
        run.midpoints.push_back(std::move(g));
        run.at_state.push_back(std::move(at_m));
        run.at_mid.push_back(std::move(at_g));
    }
    return run;
}

CostBreakdown realized_cost(const ModelParams& params, const PathSample& path,
                            const std::vector<Field>& controls, const TargetGrid& target,
                            const TerminalPayoff& payoff, int quad_points) {
    if (controls.size() + 1 != path.states.size())
        throw std::invalid_argument("realized_cost: need one control per step");
    CostBreakdown cost;
    const double tau = path.partition.tau();
    if (params.delta != 0.0) cost.running = params.delta * running_cost_integral(path, target, quad_points);
    for (const Field& u : controls) cost.control += 0.5 * params.lambda * tau * squared_norm(u);
    cost.terminal = payoff.value(path.states.back().flat(), beta(params));
    return cost;
}

CostBreakdown realized_cost(const ModelParams& params, const ControlledRun& run,
                            const TargetGrid& target, const TerminalPayoff& payoff,
                            int quad_points) {
    return realized_cost(params, run.trajectory, run.u_state, target, payoff, quad_points);
}

std::vector<double> err_metric(const PathSample& a, const PathSample& b) {
    if (!(a.partition == b.partition) || a.states.size() != b.states.size())
        throw std::invalid_argument("err_metric: trajectories live on different partitions");
    std::vector<double> err;
    err.reserve(a.states.size());
    for (std::size_t j = 0; j < a.states.size(); ++j)
        err.push_back(squared_distance(a.states[j].flat(), b.states[j].flat()));
    return err;
}

std::optional<double> normalized_inner(Vec3 m, Vec3 u) {
    const double nu = norm(u);
    const double nm = norm(m);
    if (nu == 0.0 || nm == 0.0) return std::nullopt;
    return std::abs(dot(m, u)) / (nm * nu);
}

std::vector<std::optional<double>> orthogonality_angle(const ControlledRun& run, std::size_t i) {
    std::vector<std::optional<double>> out;
    out.reserve(run.steps());
    for (std::size_t l = 0; l < run.steps(); ++l)
        out.push_back(normalized_inner(run.trajectory.states[l].spin(i), block(run.u_state[l], i)));
    return out;
}

double max_orthogonality_angle(const ControlledRun& run) {
    double worst = 0.0;
    for (std::size_t l = 0; l < run.steps(); ++l) {
        const SpinConfiguration& m = run.trajectory.states[l];
        for (std::size_t i = 0; i < m.n_spins(); ++i) {
            if (auto a = normalized_inner(m.spin(i), block(run.u_state[l], i))) worst = std::max(worst, *a);
            if (auto a = normalized_inner(run.midpoints[l].spin(i), block(run.u_mid[l], i)))
                worst = std::max(worst, *a);
        }
    }
    return worst;
}

}  // namespace spinhjb
