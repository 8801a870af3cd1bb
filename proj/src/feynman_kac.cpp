#include "spinhjb/feynman_kac.hpp"

#include "spinhjb/parallel.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace spinhjb {

namespace {

// Below this exponent exp() leaves the normal range of double.
const double kLogUnderflow = std::log(std::numeric_limits<double>::min());

double tracking_exponent(const ModelParams& params, double beta, double cost) {
    return params.delta == 0.0 ? 0.0 : beta * params.delta * cost;
}

}  // namespace

QuadratureRule gauss_legendre(int points) {
    std::vector<double> x;
    std::vector<double> w;
    switch (points) {
        case 1:
            x = {0.0};
            w = {2.0};
            break;
        case 2:
            x = {-0.5773502691896257, 0.5773502691896257};
            w = {1.0, 1.0};
            break;
        case 3:
            x = {-0.7745966692414834, 0.0, 0.7745966692414834};
            w = {0.5555555555555556, 0.8888888888888888, 0.5555555555555556};
            break;
        case 4:
            x = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
            w = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
            break;
        case 5:
            x = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                 0.9061798459386640};
            w = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                 0.2369268850561891};
            break;
        default:
            throw std::invalid_argument("Gauss-Legendre order must be between 1 and 5");
    }
    QuadratureRule rule;
    for (std::size_t q = 0; q < x.size(); ++q) {
        rule.nodes.push_back(0.5 * (x[q] + 1.0));
        rule.weights.push_back(0.5 * w[q]);
    }
    return rule;
}

TargetGrid tabulate_target(const TargetProfile& profile, const Partition& partition) {
    TargetGrid grid{partition.from(0), {}};
    grid.values.reserve(partition.steps + 1);
    for (std::size_t j = 0; j <= partition.steps; ++j)
        grid.values.push_back(profile.at(partition.time(j)).field());
    return grid;
}

double step_tracking_integral(std::span<const double> m0, std::span<const double> m1,
                              std::span<const double> target0, std::span<const double> target1,
                              double tau, const QuadratureRule& rule) {
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double s = rule.nodes[q];
        double sq = 0.0;
        for (std::size_t c = 0; c < m0.size(); ++c) {
            const double d = (1.0 - s) * (m0[c] - target0[c]) + s * (m1[c] - target1[c]);
            sq += d * d;
        }
        acc += rule.weights[q] * sq;
    }
    return tau * acc;
}

double running_cost_integral(const PathSample& path, const TargetGrid& target, int quad_points) {
    const QuadratureRule rule = gauss_legendre(quad_points);
    const Partition& p = path.partition;
    const double tau = p.tau();
    double total = 0.0;
    for (std::size_t r = 0; r + 1 < path.states.size(); ++r) {
        const std::size_t j = p.start + r;
        total += step_tracking_integral(path.states[r].flat(), path.states[r + 1].flat(),
                                        target.at(j), target.at(j + 1), tau, rule);
    }
    return total;
}

bool PathWeight::flagged() const { return !(log_value >= kLogUnderflow); }

double PathWeight::value() const { return flagged() ? 0.0 : std::exp(log_value); }

PathWeight path_functional_H(const ModelParams& params, const PathSample& path,
                             const TerminalPayoff& payoff, const TargetGrid& target,
                             int quad_points) {
    const double b = beta(params);
    const double cost = params.delta == 0.0 ? 0.0 : running_cost_integral(path, target, quad_points);
    return PathWeight{payoff.log_weight(path.states.back().flat(), b) -
                      tracking_exponent(params, b, cost)};
}

double EstimatorConfig::effective_hbar() const {
    return hbar > 0.0 ? hbar : 1.0 / std::sqrt(static_cast<double>(samples));
}

void EstimatorConfig::validate() const {
    if (samples < 2 || samples % 2 != 0)
        throw std::invalid_argument("Monte-Carlo sample count M must be even and >= 2 (antithetic pairs)");
    if (hbar < 0.0) throw std::invalid_argument("stencil width hbar must be > 0 (or 0 for 1/sqrt(M))");
    if (effective_hbar() >= 1.0) throw std::invalid_argument("stencil width hbar must be < 1");
    if (quad_points < 1 || quad_points > 5)
        throw std::invalid_argument("quadrature points per step must be between 1 and 5");
    if (threads == 0) throw std::invalid_argument("thread count must be >= 1");
}

AuxiliaryPathEvaluator::AuxiliaryPathEvaluator(const ModelParams& params,
                                               const TerminalPayoff& payoff,
                                               const TargetGrid& target, int quad_points)
    : params_(params),
      payoff_(payoff),
      target_(target),
      rule_(gauss_legendre(quad_points)),
      beta_(beta(params)),
      current_(params.dims()),
      next_(params.dims()),
      stage_(params.dims()),
      mid_(params.dims()),
      qm_(params.dims()) {}

PathWeight AuxiliaryPathEvaluator::evaluate(std::span<const double> start,
                                            const Partition& partition,
                                            const WalkIncrements& walk, double xi_sign) {
    current_.assign(start.begin(), start.end());
    const double tau = partition.tau();
    const bool track = params_.delta != 0.0;
    double cost = 0.0;
    for (std::size_t r = 0; r < partition.remaining(); ++r) {
        const auto xi = walk.row(r);
        auxiliary_stage(params_, current_, current_, xi, xi_sign, tau, qm_, stage_);
        for (std::size_t c = 0; c < mid_.size(); ++c) mid_[c] = 0.5 * (current_[c] + stage_[c]);
        auxiliary_stage(params_, current_, mid_, xi, xi_sign, tau, qm_, next_);
        if (track) {
            const std::size_t j = partition.start + r;
            cost += step_tracking_integral(current_, next_, target_.at(j), target_.at(j + 1), tau,
                                           rule_);
        }
        std::swap(current_, next_);
    }
    return PathWeight{payoff_.log_weight(current_, beta_) - tracking_exponent(params_, beta_, cost)};
}

std::string underflow_hint() {
    return "value function vanished numerically (every Monte-Carlo weight underflowed); this happens "
           "when lambda*nu^2 << delta*C_ext^2*(1+alpha^2): raise lambda or nu, or lower delta";
}

WEstimate estimate_w(const ModelParams& params, const Partition& partition,
                     const SpinConfiguration& m, const EstimatorConfig& cfg,
                     const TerminalPayoff& payoff, const TargetGrid& target,
                     const SeedPolicy& seeds) {
    cfg.validate();
    if (m.dims() != params.dims()) throw std::invalid_argument("estimate_w: state has wrong dimension");
    const std::size_t pairs = cfg.pairs();
    std::vector<double> pair_mean(pairs);
    std::vector<double> pair_flags(pairs);

    parallel_chunks(pairs, cfg.threads, [&](std::size_t begin, std::size_t end, unsigned) {
        AuxiliaryPathEvaluator eval(params, payoff, target, cfg.quad_points);
        WalkIncrements walk;
        for (std::size_t k = begin; k < end; ++k) {
            walk.fill(seeds, k, partition.remaining(), params.dims(), partition.tau());
            const PathWeight plus = eval.evaluate(m.flat(), partition, walk, 1.0);
            const PathWeight minus = eval.evaluate(m.flat(), partition, walk, -1.0);
            pair_mean[k] = 0.5 * (plus.value() + minus.value());
            pair_flags[k] = (plus.flagged() ? 1.0 : 0.0) + (minus.flagged() ? 1.0 : 0.0);
        }
    });

    WEstimate est;
    est.samples_used = 2 * pairs;
    est.flagged_fraction = tree_sum(pair_flags) / static_cast<double>(2 * pairs);
    if (est.flagged_fraction >= 1.0) throw NumericalFailure(underflow_hint());
    est.value = tree_sum(pair_mean) / static_cast<double>(pairs);
    if (pairs > 1) {
        std::vector<double> dev(pairs);
        for (std::size_t k = 0; k < pairs; ++k) dev[k] = (pair_mean[k] - est.value) * (pair_mean[k] - est.value);
        const double var = tree_sum(dev) / static_cast<double>(pairs - 1);
        est.std_error = std::sqrt(var / static_cast<double>(pairs));
    }
    return est;
}

double value_function_W(const WEstimate& estimate, double beta) {
    if (!(estimate.value > 0.0)) throw NumericalFailure(underflow_hint());
    return -std::log(estimate.value) / beta;
}

}  // namespace spinhjb
