#include "spinhjb/gradient.hpp"

#include "spinhjb/parallel.hpp"

#include <cmath>

namespace spinhjb {

namespace {

struct Stencil {
    std::vector<SpinConfiguration> plus;   // index 3i + l
    std::vector<SpinConfiguration> minus;
};

Stencil build_stencil(const SpinConfiguration& m, double hbar) {
    Stencil s;
    for (std::size_t i = 0; i < m.n_spins(); ++i) {
        for (std::size_t l = 0; l < 3; ++l) {
            s.plus.push_back(perturb_renormalized(m, i, l, hbar, StencilSign::plus));
            s.minus.push_back(perturb_renormalized(m, i, l, hbar, StencilSign::minus));
        }
    }
    return s;
}

double normal_ratio(const SpinConfiguration& m, std::span<const double> g) {
    double normal = 0.0;
    double tangent = 0.0;
    for (std::size_t i = 0; i < m.n_spins(); ++i) {
        const Vec3 mi = m.spin(i);
        const Vec3 gi = block(g, i);
        const double n = dot(gi, mi);
        normal += n * n;
        const Vec3 t = gi - n * mi;
        tangent += dot(t, t);
    }
    if (tangent == 0.0) return normal == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(normal / tangent);
}

void finish(GradientEstimate& g, const SpinConfiguration& m, double beta) {
    if (!(g.w_at_point.value > 0.0)) throw NumericalFailure(underflow_hint(), g.w_at_point.flagged_fraction);
    g.grad_W = log_gradient(m, g.grad_w, g.w_at_point.value, beta);
    g.normal_ratio = normal_ratio(m, g.grad_w);
}

}  // namespace

Field log_gradient(const SpinConfiguration& m, std::span<const double> grad_w, double w, double beta) {
    Field g(grad_w.begin(), grad_w.end());
    tangent_project_inplace(m.flat(), g);
    const double scale = -1.0 / (beta * w);
    for (double& v : g) v *= scale;
    return g;
}

GradientEstimate grad_w_method_A(const ModelParams& params, const Partition& partition,
                                 const SpinConfiguration& m, const EstimatorConfig& cfg,
                                 const TerminalPayoff& payoff, const TargetGrid& target,
                                 const SeedPolicy& seeds) {
    cfg.validate();
    const double hbar = cfg.effective_hbar();
    const Stencil stencil = build_stencil(m, hbar);
    const std::size_t dims = m.dims();

    GradientEstimate g;
    g.grad_w.assign(dims, 0.0);
    g.grad_w_stderr.assign(dims, 0.0);
    g.w_at_point = estimate_w(params, partition, m, cfg, payoff, target, seeds.derive(0));
    g.flagged_fraction = g.w_at_point.flagged_fraction;
    for (std::size_t s = 0; s < dims; ++s) {
        const WEstimate wp =
            estimate_w(params, partition, stencil.plus[s], cfg, payoff, target, seeds.derive(1 + 2 * s));
        const WEstimate wm =
            estimate_w(params, partition, stencil.minus[s], cfg, payoff, target, seeds.derive(2 + 2 * s));
        g.grad_w[s] = (wp.value - wm.value) / (2.0 * hbar);
        g.grad_w_stderr[s] = std::sqrt(wp.std_error * wp.std_error + wm.std_error * wm.std_error) /
                             (2.0 * hbar);
        g.flagged_fraction = std::max({g.flagged_fraction, wp.flagged_fraction, wm.flagged_fraction});
    }
    finish(g, m, beta(params));
    return g;
}

GradientEstimate grad_w_method_B(const ModelParams& params, const Partition& partition,
                                 const SpinConfiguration& m, const EstimatorConfig& cfg,
                                 const TerminalPayoff& payoff, const TargetGrid& target,
                                 const SeedPolicy& seeds) {
    cfg.validate();
    if (m.dims() != params.dims()) throw std::invalid_argument("gradient: state has wrong dimension");
    const double hbar = cfg.effective_hbar();
    const Stencil stencil = build_stencil(m, hbar);
    const std::size_t dims = m.dims();
    const std::size_t pairs = cfg.pairs();

    // Column 0 holds pair averages of H at m, column 1 + s the pair averages
    // of the quotient for stencil direction s.
    std::vector<std::vector<double>> columns(1 + dims, std::vector<double>(pairs));
    std::vector<double> base_flags(pairs);
    std::vector<double> all_flags(pairs);

    parallel_chunks(pairs, cfg.threads, [&](std::size_t begin, std::size_t end, unsigned) {
        AuxiliaryPathEvaluator eval(params, payoff, target, cfg.quad_points);
        WalkIncrements walk;
        for (std::size_t k = begin; k < end; ++k) {
            walk.fill(seeds, k, partition.remaining(), params.dims(), partition.tau());
            double base = 0.0;
            double flagged_base = 0.0;
            double flagged = 0.0;
            for (double sign : {1.0, -1.0}) {
                const PathWeight h0 = eval.evaluate(m.flat(), partition, walk, sign);
                base += 0.5 * h0.value();
                flagged_base += h0.flagged() ? 1.0 : 0.0;
            }
            columns[0][k] = base;
            for (std::size_t s = 0; s < dims; ++s) {
                double quotient = 0.0;
                for (double sign : {1.0, -1.0}) {
                    const PathWeight hp = eval.evaluate(stencil.plus[s].flat(), partition, walk, sign);
                    const PathWeight hm = eval.evaluate(stencil.minus[s].flat(), partition, walk, sign);
                    quotient += 0.5 * (hp.value() - hm.value()) / (2.0 * hbar);
                    flagged += (hp.flagged() ? 1.0 : 0.0) + (hm.flagged() ? 1.0 : 0.0);
                }
                columns[1 + s][k] = quotient;
            }
            base_flags[k] = flagged_base;
            all_flags[k] = flagged + flagged_base;
        }
    });

    auto mean_and_error = [pairs](const std::vector<double>& col) {
        const double mean = tree_sum(col) / static_cast<double>(pairs);
        double se = 0.0;
        if (pairs > 1) {
            std::vector<double> dev(pairs);
            for (std::size_t k = 0; k < pairs; ++k) dev[k] = (col[k] - mean) * (col[k] - mean);
            se = std::sqrt(tree_sum(dev) / static_cast<double>(pairs - 1) / static_cast<double>(pairs));
        }
        return std::pair{mean, se};
    };

    GradientEstimate g;
    const double base_flagged = tree_sum(base_flags) / static_cast<double>(2 * pairs);
    if (base_flagged >= 1.0) throw NumericalFailure(underflow_hint());
    const auto [w, w_se] = mean_and_error(columns[0]);
    g.w_at_point = WEstimate{w, w_se, 2 * pairs, base_flagged};
    g.flagged_fraction = tree_sum(all_flags) / static_cast<double>(2 * pairs * (1 + 2 * dims));
    g.grad_w.resize(dims);
    g.grad_w_stderr.resize(dims);
    for (std::size_t s = 0; s < dims; ++s) {
        const auto [d, d_se] = mean_and_error(columns[1 + s]);
        g.grad_w[s] = d;
        g.grad_w_stderr[s] = d_se;
    }
    finish(g, m, beta(params));
    return g;
}

GradientEstimate estimate_gradient(const ModelParams& params, const Partition& partition,
                                   const SpinConfiguration& m, const EstimatorConfig& cfg,
                                   const TerminalPayoff& payoff, const TargetGrid& target,
                                   const SeedPolicy& seeds) {
    return cfg.method == GradientMethod::A
               ? grad_w_method_A(params, partition, m, cfg, payoff, target, seeds)
               : grad_w_method_B(params, partition, m, cfg, payoff, target, seeds);
}

Field feedback_control(const ModelParams& params, const SpinConfiguration& m,
                       std::span<const double> grad_W) {
    if (grad_W.size() != m.dims()) throw std::invalid_argument("feedback_control: gradient has wrong length");
    const double scale = params.c_ext / params.lambda;
    Field u(m.dims());
    for (std::size_t i = 0; i < m.n_spins(); ++i) {
        const Vec3 mi = m.spin(i);
        Vec3 g = block(grad_W, i);
        if (!is_finite(g)) throw std::invalid_argument("feedback_control: gradient is not finite");
        g = g - dot(g, mi) * mi;
        set_block(u, i, scale * (cross(mi, g) - params.alpha * g));
    }
    return u;
}

}  // namespace spinhjb
