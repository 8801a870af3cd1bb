#include "spinhjb/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace spinhjb {

namespace {

constexpr double kSymmetryTolerance = 1e-12;
constexpr double kPsdTolerance = 1e-10;
constexpr std::size_t kDenseEigenLimit = 16;

std::vector<double> zero_dense(std::size_t n_spins) {
    return std::vector<double>(9 * n_spins * n_spins, 0.0);
}

}  // namespace

ExchangeMatrix::ExchangeMatrix(std::size_t n_spins, Builder builder, double mu,
                               std::vector<double> dense)
    : n_spins_(n_spins), builder_(builder), mu_(mu), dense_(std::move(dense)) {
    const std::size_t dim = 3 * n_spins_;
    if (n_spins_ == 0) throw std::invalid_argument("exchange matrix needs at least one spin");
    if (dense_.size() != dim * dim)
        throw std::invalid_argument("exchange matrix literal must have (3N)^2 = " +
                                    std::to_string(dim * dim) + " entries");
    validate();
    row_start_.reserve(dim + 1);
    row_start_.push_back(0);
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            const double v = dense_[r * dim + c];
            if (v != 0.0) {
                col_.push_back(c);
                val_.push_back(v);
            }
        }
        row_start_.push_back(col_.size());
    }
}

void ExchangeMatrix::validate() const {
    const std::size_t dim = 3 * n_spins_;
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            const double v = dense_[r * dim + c];
            if (!std::isfinite(v)) throw std::invalid_argument("exchange matrix has non-finite entries");
            if (std::abs(v - dense_[c * dim + r]) > kSymmetryTolerance)
                throw std::invalid_argument("exchange matrix is not symmetric at (" +
                                            std::to_string(r) + ", " + std::to_string(c) + ")");
        }
    }
    if (n_spins_ <= kDenseEigenLimit) {
        Eigen::MatrixXd a(dim, dim);
        for (std::size_t r = 0; r < dim; ++r)
            for (std::size_t c = 0; c < dim; ++c) a(r, c) = dense_[r * dim + c];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
        const double smallest = solver.eigenvalues().minCoeff();
        if (smallest < -kPsdTolerance)
            throw std::invalid_argument("exchange matrix is not positive semi-definite (eigenvalue " +
                                        std::to_string(smallest) + ")");
        return;
    }
    // Large ensembles: sample the quadratic form on random directions.
    std::mt19937_64 gen(0x5eedULL);
    std::normal_distribution<double> normal;
    std::vector<double> v(dim);
    for (int trial = 0; trial < 256; ++trial) {
        for (double& x : v) x = normal(gen);
        double form = 0.0;
        double vv = 0.0;
        for (std::size_t r = 0; r < dim; ++r) {
            double row = 0.0;
            for (std::size_t c = 0; c < dim; ++c) row += dense_[r * dim + c] * v[c];
            form += v[r] * row;
            vv += v[r] * v[r];
        }
        if (form < -kPsdTolerance * vv)
            throw std::invalid_argument("exchange matrix is not positive semi-definite");
    }
}

ExchangeMatrix ExchangeMatrix::zero(std::size_t n_spins) {
    return ExchangeMatrix(n_spins, Builder::zero, 0.0, zero_dense(n_spins));
}

ExchangeMatrix ExchangeMatrix::two_spin(double mu) {
    if (!(mu >= 0.0)) throw std::invalid_argument("two-spin exchange needs mu >= 0");
    auto d = zero_dense(2);
    for (std::size_t l = 0; l < 3; ++l) {
        d[l * 6 + l] = mu;
        d[(l + 3) * 6 + (l + 3)] = mu;
        d[l * 6 + (l + 3)] = -mu;
        d[(l + 3) * 6 + l] = -mu;
    }
    return ExchangeMatrix(2, Builder::two_spin_mu, mu, std::move(d));
}

ExchangeMatrix ExchangeMatrix::ring(std::size_t n_spins) {
    if (n_spins == 0) throw std::invalid_argument("ring exchange needs at least one spin");
    const std::size_t dim = 3 * n_spins;
    auto d = zero_dense(n_spins);
    for (std::size_t i = 0; i < n_spins; ++i) {
        const std::size_t next = (i + 1) % n_spins;
        const std::size_t prev = (i + n_spins - 1) % n_spins;
        for (std::size_t l = 0; l < 3; ++l) {
            d[(3 * i + l) * dim + 3 * i + l] += 2.0;
            d[(3 * i + l) * dim + 3 * next + l] -= 1.0;
            d[(3 * i + l) * dim + 3 * prev + l] -= 1.0;
        }
    }
    return ExchangeMatrix(n_spins, Builder::ring, 0.0, std::move(d));
}

ExchangeMatrix ExchangeMatrix::dense(std::size_t n_spins, std::vector<double> values) {
    return ExchangeMatrix(n_spins, Builder::dense, 0.0, std::move(values));
}

void ExchangeMatrix::apply(std::span<const double> v, std::span<double> out) const {
    assert(v.size() == 3 * n_spins_ && out.size() == v.size());
    for (std::size_t r = 0; r + 1 < row_start_.size(); ++r) {
        double acc = 0.0;
        for (std::size_t k = row_start_[r]; k < row_start_[r + 1]; ++k) acc += val_[k] * v[col_[k]];
        out[r] = acc;
    }
}

void ModelParams::validate() const {
    if (d_diag.empty()) throw std::invalid_argument("model needs at least one spin");
    if (!(lambda > 0.0)) throw std::invalid_argument("control penalty lambda must be > 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon T must be > 0");
    if (!(alpha >= 0.0)) throw std::invalid_argument("damping alpha must be >= 0");
    if (!(nu >= 0.0)) throw std::invalid_argument("noise intensity nu must be >= 0");
    if (!(delta >= 0.0)) throw std::invalid_argument("tracking weight delta must be >= 0");
    if (!(c_ext > 0.0)) throw std::invalid_argument("external-field coupling C_ext must be > 0");
    if (exchange.n_spins() != n_spins())
        throw std::invalid_argument("exchange matrix is sized for " +
                                    std::to_string(exchange.n_spins()) + " spins but the model has " +
                                    std::to_string(n_spins()));
    for (const Vec3& d : d_diag)
        if (!is_finite(d)) throw std::invalid_argument("anisotropy diagonal has non-finite entries");
}

double beta(const ModelParams& params) {
    if (!(params.nu > 0.0))
        throw std::invalid_argument("no-noise regime unsupported: Hopf-Cole constant needs nu > 0");
    if (!(params.lambda > 0.0)) throw std::invalid_argument("Hopf-Cole constant needs lambda > 0");
    return params.c_ext * params.c_ext * (1.0 + params.alpha * params.alpha) /
           (params.lambda * params.nu * params.nu);
}

void q_apply(const ModelParams& params, std::span<const double> m, std::span<double> out) {
    params.exchange.apply(m, out);
    for (std::size_t i = 0; i < params.n_spins(); ++i) {
        const Vec3 d = params.d_diag[i];
        out[3 * i] += d.x * m[3 * i];
        out[3 * i + 1] += d.y * m[3 * i + 1];
        out[3 * i + 2] += d.z * m[3 * i + 2];
    }
}

Field q_apply(const ModelParams& params, std::span<const double> m) {
    Field out(m.size());
    q_apply(params, m, out);
    return out;
}

Field drift_f(const ModelParams& params, const SpinConfiguration& m, std::span<const double> u) {
    if (u.size() != m.dims()) throw std::invalid_argument("drift_f: control has wrong length");
    const Field qm = q_apply(params, m.flat());
    Field out(m.dims());
    for (std::size_t i = 0; i < m.n_spins(); ++i) {
        const Vec3 h = -block(qm, i) + params.c_ext * block(u, i);
        set_block(out, i, mat_vec(sigma_block(m.spin(i), params.alpha), h));
    }
    return out;
}

Field drift_b(const ModelParams& params, const SpinConfiguration& m) {
    const Field qm = q_apply(params, m.flat());
    Field out(m.dims());
    for (std::size_t i = 0; i < m.n_spins(); ++i) {
        const Vec3 mi = m.spin(i);
        const Vec3 mxq = cross(mi, block(qm, i));
        set_block(out, i, mxq - params.alpha * cross(mi, mxq));
    }
    return out;
}

Field drift_b_sigma_form(const ModelParams& params, const SpinConfiguration& m) {
    const Field qm = q_apply(params, m.flat());
    Field out(m.dims());
    for (std::size_t i = 0; i < m.n_spins(); ++i)
        set_block(out, i, mat_vec(sigma_block(m.spin(i), params.alpha), block(qm, i)));
    return out;
}

Vec3 abar(const ModelParams& params, std::span<const double> m, std::size_t i) {
    const Field qm = q_apply(params, m);
    return abar_block(block(m, i), block(qm, i), params.alpha);
}

Vec3 a_ctrl(const ModelParams& params, std::span<const double> m, std::span<const double> u,
            std::size_t i) {
    const Field qm = q_apply(params, m);
    return a_ctrl_block(block(m, i), block(qm, i), block(u, i), params.alpha, params.c_ext);
}

double lagrangian(const ModelParams& params, std::span<const double> m, std::span<const double> u,
                  std::span<const double> mtilde) {
    return params.delta * squared_distance(m, mtilde) + 0.5 * params.lambda * squared_norm(u);
}

// --- TargetProfile -----------------------------------------------------------

TargetProfile TargetProfile::constant(const SpinConfiguration& m) {
    std::vector<Track> tracks;
    for (std::size_t i = 0; i < m.n_spins(); ++i) tracks.emplace_back(Constant{m.spin(i)});
    return per_spin(std::move(tracks), 1.0);
}

TargetProfile TargetProfile::per_spin(std::vector<Track> tracks, double horizon) {
    if (tracks.empty()) throw std::invalid_argument("target profile needs at least one spin");
    if (!(horizon > 0.0)) throw std::invalid_argument("target profile horizon must be > 0");
    for (const Track& tr : tracks) {
        if (const auto* c = std::get_if<Constant>(&tr)) {
            if (std::abs(norm(c->direction) - 1.0) > kSphereTolerance)
                throw std::invalid_argument("constant target direction must be a unit vector");
        }
    }
    TargetProfile p;
    p.tracks_ = std::move(tracks);
    p.horizon_ = horizon;
    return p;
}

TargetProfile TargetProfile::tabulated(std::vector<double> times,
                                       std::vector<SpinConfiguration> states) {
    if (times.empty() || times.size() != states.size())
        throw std::invalid_argument("tabulated target needs one state per time");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1]))
            throw std::invalid_argument("tabulated target times must be strictly increasing");
    for (const auto& s : states)
        if (s.n_spins() != states.front().n_spins())
            throw std::invalid_argument("tabulated target states disagree in spin count");
    TargetProfile p;
    Tabulated tab;
    tab.times = std::move(times);
    for (auto& s : states) tab.states.push_back(s.field());
    p.horizon_ = tab.times.back();
    p.table_ = std::move(tab);
    return p;
}

std::size_t TargetProfile::n_spins() const {
    return table_ ? table_->states.front().size() / 3 : tracks_.size();
}

SpinConfiguration TargetProfile::at(double t) const {
    if (table_) {
        const auto& times = table_->times;
        const auto& states = table_->states;
        if (t <= times.front()) return SpinConfiguration(states.front());
        if (t >= times.back()) return SpinConfiguration(states.back());
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        const std::size_t k = static_cast<std::size_t>(it - times.begin());
        const double s = (t - times[k - 1]) / (times[k] - times[k - 1]);
        Field mix(states[k].size());
        for (std::size_t c = 0; c < mix.size(); ++c)
            mix[c] = (1.0 - s) * states[k - 1][c] + s * states[k][c];
        return SpinConfiguration::normalized(mix);
    }
    Field out(3 * tracks_.size());
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        Vec3 v;
        if (const auto* c = std::get_if<Constant>(&tracks_[i])) {
            v = c->direction;
        } else {
            const double phase = std::numbers::pi * t / horizon_;
            v = {-std::cos(phase), std::sin(phase), 0.0};
        }
        set_block(out, i, v);
    }
    return SpinConfiguration(std::move(out));
}

// --- TerminalPayoff ----------------------------------------------------------

TerminalPayoff TerminalPayoff::quadratic_tracking(SpinConfiguration target) {
    TerminalPayoff p;
    p.kind_ = Kind::quadratic_tracking;
    p.target_ = target.field();
    return p;
}

TerminalPayoff TerminalPayoff::log_harmonic_1spin() {
    TerminalPayoff p;
    p.kind_ = Kind::log_harmonic_1spin;
    return p;
}

TerminalPayoff TerminalPayoff::log_harmonic_2spin() {
    TerminalPayoff p;
    p.kind_ = Kind::log_harmonic_2spin;
    return p;
}

TerminalPayoff TerminalPayoff::custom(
    std::function<double(std::span<const double>, double)> log_weight) {
    if (!log_weight) throw std::invalid_argument("custom payoff needs a callable");
    TerminalPayoff p;
    p.kind_ = Kind::custom;
    p.custom_ = std::move(log_weight);
    return p;
}

double TerminalPayoff::log_weight(std::span<const double> m, double beta) const {
    switch (kind_) {
        case Kind::quadratic_tracking:
            if (m.size() != target_.size())
                throw std::invalid_argument("payoff target and state differ in spin count");
            return -beta * 0.5 * squared_distance(m, target_);
        case Kind::log_harmonic_1spin:
            if (m.size() != 3) throw std::invalid_argument("single-spin harmonic payoff needs N = 1");
            return std::log(m[2] + 2.0);
        case Kind::log_harmonic_2spin:
            if (m.size() != 6) throw std::invalid_argument("two-spin harmonic payoff needs N = 2");
            return std::log(m[2] + m[5] + 2.0);
        case Kind::custom:
            return custom_(m, beta);
    }
    return 0.0;
}

double TerminalPayoff::value(std::span<const double> m, double beta) const {
    if (kind_ == Kind::quadratic_tracking) {
        if (m.size() != target_.size())
            throw std::invalid_argument("payoff target and state differ in spin count");
        return 0.5 * squared_distance(m, target_);
    }
    return -log_weight(m, beta) / beta;
}

}  // namespace spinhjb
