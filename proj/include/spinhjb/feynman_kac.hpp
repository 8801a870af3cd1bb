#pragma once

#include "spinhjb/integrator.hpp"
#include "spinhjb/manifold.hpp"
#include "spinhjb/model.hpp"
#include "spinhjb/rng.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinhjb {

/// Raised when a Monte-Carlo quantity cannot be formed in double precision.
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what, double flagged_fraction = 1.0)
        : std::runtime_error(what), flagged_fraction_(flagged_fraction) {}

    /// Share of Monte-Carlo samples whose weight underflowed.
    double flagged_fraction() const { return flagged_fraction_; }

private:
    double flagged_fraction_;
};

/// Gauss-Legendre rule mapped to [0, 1].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Supported orders are 1 through 5.
QuadratureRule gauss_legendre(int points);

/// Target profile sampled on the grid points t_0, ..., t_J.
struct TargetGrid {
    Partition partition;
    std::vector<Field> values;  ///< index j -> mtilde(t_j)

    std::span<const double> at(std::size_t j) const { return values[j]; }
};

TargetGrid tabulate_target(const TargetProfile& profile, const Partition& partition);

/// tau * sum_q w_q |(1-s_q)(m0 - g0) + s_q (m1 - g1)|^2 : one step of the
/// running cost with both the path and the target affinely interpolated.
double step_tracking_integral(std::span<const double> m0, std::span<const double> m1,
                              std::span<const double> target0, std::span<const double> target1,
                              double tau, const QuadratureRule& rule);

/// Composite quadrature of |m(r) - mtilde(r)|^2 over the path's sub-partition.
double running_cost_integral(const PathSample& path, const TargetGrid& target, int quad_points);

/// Log of H = exp(-beta h(m(T))) exp(-beta delta int |m - mtilde|^2).
struct PathWeight {
    double log_value = 0.0;

    /// exp(log_value) falls below the smallest normal double.
    bool flagged() const;
    /// exp(log_value), or 0 when flagged.
    double value() const;
};

PathWeight path_functional_H(const ModelParams& params, const PathSample& path,
                             const TerminalPayoff& payoff, const TargetGrid& target,
                             int quad_points);

enum class GradientMethod { A, B };

struct EstimatorConfig {
    std::size_t samples = 1000;  ///< M, counted in single paths; antithetic pairs are M/2
    double hbar = 0.0;           ///< stencil width; 0 selects 1/sqrt(M)
    int quad_points = 2;
    GradientMethod method = GradientMethod::B;
    unsigned threads = 1;

    std::size_t pairs() const { return samples / 2; }
    double effective_hbar() const;
    /// Throws std::invalid_argument on violated invariants.
    void validate() const;

    friend bool operator==(const EstimatorConfig&, const EstimatorConfig&) = default;
};

struct WEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t samples_used = 0;
    double flagged_fraction = 0.0;
};

/// Reusable workspace that evaluates log H along one auxiliary path without
/// storing it. Produces the same numbers as simulate_path + path_functional_H.
class AuxiliaryPathEvaluator {
public:
    AuxiliaryPathEvaluator(const ModelParams& params, const TerminalPayoff& payoff,
                           const TargetGrid& target, int quad_points);

    /// Walk rows drive steps start, ..., J-1; xi_sign = -1 gives the antithetic path.
    PathWeight evaluate(std::span<const double> start, const Partition& partition,
                        const WalkIncrements& walk, double xi_sign);

private:
    const ModelParams& params_;
    const TerminalPayoff& payoff_;
    const TargetGrid& target_;
    QuadratureRule rule_;
    double beta_;
    Field current_, next_, stage_, mid_, qm_;
};

/// Monte-Carlo estimate of w(t_start, m) over M/2 antithetic pairs; the
/// standard error is taken over pair averages. Throws NumericalFailure if
/// every sample underflows.
WEstimate estimate_w(const ModelParams& params, const Partition& partition,
                     const SpinConfiguration& m, const EstimatorConfig& cfg,
                     const TerminalPayoff& payoff, const TargetGrid& target,
                     const SeedPolicy& seeds);

/// W = -log(w) / beta.
double value_function_W(const WEstimate& estimate, double beta);

/// Message used whenever the value function vanishes numerically.
std::string underflow_hint();

}  // namespace spinhjb
