#include "spinhjb/integrator.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace spinhjb {

Partition::Partition(double horizon_, std::size_t steps_, std::size_t start_)
    : horizon(horizon_), steps(steps_), start(start_) {
    if (!(horizon > 0.0)) throw std::invalid_argument("partition horizon must be > 0");
    if (steps == 0) throw std::invalid_argument("partition needs at least one step");
    if (start > steps) throw std::invalid_argument("partition start index beyond the last grid point");
}

Vec3 midpoint_stage(Vec3 m, Vec3 a, Vec3 xi, double tau, double nu) {
    const Vec3 c = 0.5 * (tau * a + nu * xi);
    // (Id + sigma(c))^{-1} = (Id - sigma(c) + c c^T) / (1 + |c|^2)
    const Vec3 v = m - cross(c, m);
    const Vec3 e = (1.0 / (1.0 + dot(c, c))) * (v - cross(c, v) + dot(c, v) * c);
#ifndef NDEBUG
    const Vec3 residual = (e + cross(c, e)) - v;
    assert(norm(residual) < 1e-12 * (1.0 + norm(m)));
#endif
    return e;
}

Vec3 midpoint_stage_gauss(Vec3 m, Vec3 a, Vec3 xi, double tau, double nu) {
    const Vec3 c = 0.5 * (tau * a + nu * xi);
    const Mat3 s = cross_matrix(c);
    double aug[3][4];
    const Vec3 rhs = m - mat_vec(s, m);
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t k = 0; k < 3; ++k) aug[r][k] = (r == k ? 1.0 : 0.0) + s[r][k];
        aug[r][3] = rhs[r];
    }
    for (std::size_t col = 0; col < 3; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < 3; ++r)
            if (std::abs(aug[r][col]) > std::abs(aug[pivot][col])) pivot = r;
        if (pivot != col)
            for (std::size_t k = 0; k < 4; ++k) std::swap(aug[col][k], aug[pivot][k]);
        for (std::size_t r = col + 1; r < 3; ++r) {
            const double f = aug[r][col] / aug[col][col];
            for (std::size_t k = col; k < 4; ++k) aug[r][k] -= f * aug[col][k];
        }
    }
    double x[3];
    for (std::size_t r = 3; r-- > 0;) {
        double acc = aug[r][3];
        for (std::size_t k = r + 1; k < 3; ++k) acc -= aug[r][k] * x[k];
        x[r] = acc / aug[r][r];
    }
    return {x[0], x[1], x[2]};
}

void auxiliary_stage(const ModelParams& params, std::span<const double> m,
                     std::span<const double> drift_point, std::span<const double> xi,
                     double xi_sign, double tau, std::span<double> qm, std::span<double> out) {
    q_apply(params, drift_point, qm);
    const std::size_t n = m.size() / 3;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 a = abar_block(block(drift_point, i), block(qm, i), params.alpha);
        set_block(out, i, midpoint_stage(block(m, i), a, xi_sign * block(xi, i), tau, params.nu));
    }
}

void controlled_stage(const ModelParams& params, std::span<const double> m,
                      std::span<const double> drift_point, std::span<const double> u,
                      std::span<const double> xi, double xi_sign, double tau,
                      std::span<double> qm, std::span<double> out) {
    q_apply(params, drift_point, qm);
    const std::size_t n = m.size() / 3;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 a = a_ctrl_block(block(drift_point, i), block(qm, i), block(u, i), params.alpha,
                                    params.c_ext);
        set_block(out, i, midpoint_stage(block(m, i), a, xi_sign * block(xi, i), tau, params.nu));
    }
}

namespace {

Field midpoint(std::span<const double> a, std::span<const double> b) {
    Field mid(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) mid[k] = 0.5 * (a[k] + b[k]);
    return mid;
}

void check_shape(const ModelParams& params, const SpinConfiguration& m, std::span<const double> xi) {
    if (m.dims() != params.dims() || xi.size() != m.dims())
        throw std::invalid_argument("step: state, model and increments disagree in dimension");
}

}  // namespace

SpinConfiguration step_auxiliary(const ModelParams& params, const SpinConfiguration& m,
                                 std::span<const double> xi, double tau) {
    check_shape(params, m, xi);
    Field qm(m.dims());
    Field e(m.dims());
    auxiliary_stage(params, m.flat(), m.flat(), xi, 1.0, tau, qm, e);
    const Field mid = midpoint(m.flat(), e);
    Field next(m.dims());
    auxiliary_stage(params, m.flat(), mid, xi, 1.0, tau, qm, next);
    return SpinConfiguration(std::move(next), kPathSphereTolerance);
}

SpinConfiguration step_controlled(const ModelParams& params, const SpinConfiguration& m,
                                  const ControlProvider& control, double t,
                                  std::span<const double> xi, double tau) {
    check_shape(params, m, xi);
    if (!control) throw std::invalid_argument("controlled step needs a control provider");
    Field qm(m.dims());
    Field e(m.dims());
    const Field u_state = control(t, m);
    if (u_state.size() != m.dims()) throw std::runtime_error("control provider returned wrong length");
    controlled_stage(params, m.flat(), m.flat(), u_state, xi, 1.0, tau, qm, e);
    const Field mid = midpoint(m.flat(), e);
    const SpinConfiguration g = SpinConfiguration::normalized(mid);
    const Field u_mid = control(t, g);
    if (u_mid.size() != m.dims()) throw std::runtime_error("control provider returned wrong length");
    Field next(m.dims());
    controlled_stage(params, m.flat(), mid, u_mid, xi, 1.0, tau, qm, next);
    return SpinConfiguration(std::move(next), kPathSphereTolerance);
}

PathSample simulate_path(const ModelParams& params, const SpinConfiguration& start,
                         const Partition& partition, const WalkIncrements& walk, PathMode mode,
                         const ControlProvider& control) {
    const std::size_t n_steps = partition.remaining();
    if (walk.steps() < n_steps || (n_steps > 0 && walk.dims() != start.dims()))
        throw std::invalid_argument("walk does not cover the sub-partition");
    if (mode == PathMode::controlled && !control)
        throw std::invalid_argument("controlled path needs a control provider");
    PathSample path{partition, {start}};
    path.states.reserve(n_steps + 1);
    const double tau = partition.tau();
    for (std::size_t r = 0; r < n_steps; ++r) {
        const SpinConfiguration& m = path.states.back();
        if (mode == PathMode::auxiliary)
            path.states.push_back(step_auxiliary(params, m, walk.row(r), tau));
        else
            path.states.push_back(
                step_controlled(params, m, control, partition.time(partition.start + r), walk.row(r), tau));
    }
    return path;
}

}  // namespace spinhjb
