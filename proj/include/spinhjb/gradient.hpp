#pragma once

#include "spinhjb/feynman_kac.hpp"

namespace spinhjb {

/// Difference-quotient estimate of the manifold gradient of w (and of W).
struct GradientEstimate {
    Field grad_w;           ///< raw quotients d_{l,i}, ambient axes, not projected
    Field grad_w_stderr;    ///< Monte-Carlo standard error of each quotient
    WEstimate w_at_point;
    Field grad_W;           ///< -P(grad_w) / (beta w), blockwise tangent
    double normal_ratio = 0.0;    ///< |normal part of grad_w| / |tangent part|
    double flagged_fraction = 0.0;  ///< worst over all estimates involved
};

/// Expectation first, then central differences. Every stencil point and the
/// base point get independent walk sets (sub-streams of seeds).
GradientEstimate grad_w_method_A(const ModelParams& params, const Partition& partition,
                                 const SpinConfiguration& m, const EstimatorConfig& cfg,
                                 const TerminalPayoff& payoff, const TargetGrid& target,
                                 const SeedPolicy& seeds);

/// Central differences inside the expectation. One walk set drives the base
/// point and all 6N stencil points (common random numbers), with antithetic
/// pairing.
GradientEstimate grad_w_method_B(const ModelParams& params, const Partition& partition,
                                 const SpinConfiguration& m, const EstimatorConfig& cfg,
                                 const TerminalPayoff& payoff, const TargetGrid& target,
                                 const SeedPolicy& seeds);

/// Dispatches on cfg.method.
GradientEstimate estimate_gradient(const ModelParams& params, const Partition& partition,
                                   const SpinConfiguration& m, const EstimatorConfig& cfg,
                                   const TerminalPayoff& payoff, const TargetGrid& target,
                                   const SeedPolicy& seeds);

/// -P_m(grad_w) / (beta w)
Field log_gradient(const SpinConfiguration& m, std::span<const double> grad_w, double w, double beta);

/// Optimal feedback (C_ext / lambda)(m_i x g_i - alpha g_i), with g the
/// blockwise tangent projection of grad_W. Output blocks are orthogonal to m_i.
Field feedback_control(const ModelParams& params, const SpinConfiguration& m,
                       std::span<const double> grad_W);

}  // namespace spinhjb
