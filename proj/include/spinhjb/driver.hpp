#pragma once

#include "spinhjb/gradient.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace spinhjb {

/// What a gradient oracle returns at one evaluation point.
struct OracleValue {
    Field grad_W;
    double w = 0.0;
    double w_stderr = 0.0;
    double flagged_fraction = 0.0;
};

/// Stage 1 evaluates at the grid state, stage 2 at the normalized midpoint.
enum class StepStage { state = 1, midpoint = 2 };

/// grad W at (t_step, m). The step index selects the sub-partition and the
/// estimator sub-stream.
using GradientOracle =
    std::function<OracleValue(std::size_t step, StepStage stage, const SpinConfiguration& m)>;

/// Monte-Carlo oracle. Walks for (step, stage) come from seeds.derive({step, stage}).
GradientOracle monte_carlo_oracle(const ModelParams& params, const Partition& partition,
                                  const EstimatorConfig& cfg, const TerminalPayoff& payoff,
                                  const TargetGrid& target, const SeedPolicy& seeds);

/// Closed-form oracle from a function of (t, m) returning (w, grad_W).
using ExactSolution = std::function<std::pair<double, Field>(double, const SpinConfiguration&)>;
GradientOracle exact_oracle(const Partition& partition, ExactSolution solution);

/// grad W = 0, w = 1.
GradientOracle zero_oracle();

/// Discrete optimal pair {m^j, u^j} with everything the estimators reported.
struct ControlledRun {
    PathSample trajectory;       ///< m^0, ..., m^J
    std::vector<Field> u_state;  ///< u(t_l, m^l), l = 0..J-1
    std::vector<Field> u_mid;    ///< u(t_l, g^l)
    std::vector<SpinConfiguration> midpoints;  ///< g^l
    std::vector<OracleValue> at_state;
    std::vector<OracleValue> at_mid;

    std::size_t steps() const { return u_state.size(); }
};

/// Runs the feedback loop along the outer walk. Row l of outer_walk drives
/// the step t_l -> t_{l+1}. Estimator underflow aborts with NumericalFailure
/// naming the step.
ControlledRun run_algorithm(const ModelParams& params, const Partition& partition,
                            const SpinConfiguration& start, const GradientOracle& oracle,
                            const WalkIncrements& outer_walk);

struct CostBreakdown {
    double running = 0.0;   ///< delta int |m - mtilde|^2
    double control = 0.0;   ///< lambda/2 int |u|^2, u piecewise constant
    double terminal = 0.0;  ///< h(m(T))

    double total() const { return running + control + terminal; }
};

/// Realized cost of one controlled trajectory. The control on [t_l, t_{l+1})
/// is the state-point control u(t_l, m^l).
CostBreakdown realized_cost(const ModelParams& params, const ControlledRun& run,
                            const TargetGrid& target, const TerminalPayoff& payoff,
                            int quad_points);

/// Same, for an arbitrary path with given per-step controls.
CostBreakdown realized_cost(const ModelParams& params, const PathSample& path,
                            const std::vector<Field>& controls, const TargetGrid& target,
                            const TerminalPayoff& payoff, int quad_points);

/// |m_a(t_j) - m_b(t_j)|^2 per grid time. Throws on mismatched partitions.
std::vector<double> err_metric(const PathSample& a, const PathSample& b);

/// |<m_i, u_i>| / (|m_i| |u_i|) at each state-point control; empty where u_i = 0.
std::vector<std::optional<double>> orthogonality_angle(const ControlledRun& run, std::size_t i);

/// Largest angle over all spins, steps, and both control evaluations.
double max_orthogonality_angle(const ControlledRun& run);

/// Normalized inner product of a single pair, empty if u = 0.
std::optional<double> normalized_inner(Vec3 m, Vec3 u);

}  // namespace spinhjb
