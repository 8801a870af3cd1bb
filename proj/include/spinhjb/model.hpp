#pragma once

#include "spinhjb/manifold.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace spinhjb {

/// Symmetric positive semi-definite exchange coupling on (R^3)^N.
///
/// Kept densely for validation and serialization and as a compressed row
/// list for the inner loops.
class ExchangeMatrix {
public:
    enum class Builder { zero, two_spin_mu, ring, dense };

    static ExchangeMatrix zero(std::size_t n_spins);
    /// The 6x6 coupling mu (m_1 - m_2, m_2 - m_1).
    static ExchangeMatrix two_spin(double mu);
    /// Periodic chain: (J m)_i = -m_{i+1} + 2 m_i - m_{i-1}.
    static ExchangeMatrix ring(std::size_t n_spins);
    /// Row-major 3N x 3N literal. Throws if not symmetric PSD.
    static ExchangeMatrix dense(std::size_t n_spins, std::vector<double> values);

    std::size_t n_spins() const { return n_spins_; }
    Builder builder() const { return builder_; }
    /// Coupling strength for two_spin_mu, 0 otherwise.
    double mu() const { return mu_; }
    const std::vector<double>& dense_values() const { return dense_; }

    /// out = J v
    void apply(std::span<const double> v, std::span<double> out) const;

    friend bool operator==(const ExchangeMatrix& a, const ExchangeMatrix& b) {
        return a.n_spins_ == b.n_spins_ && a.builder_ == b.builder_ && a.mu_ == b.mu_ &&
               a.dense_ == b.dense_;
    }

private:
    ExchangeMatrix(std::size_t n_spins, Builder builder, double mu, std::vector<double> dense);
    void validate() const;

    std::size_t n_spins_ = 0;
    Builder builder_ = Builder::zero;
    double mu_ = 0.0;
    std::vector<double> dense_;
    std::vector<std::size_t> row_start_;
    std::vector<std::size_t> col_;
    std::vector<double> val_;
};

/// Physical and cost constants of the controlled ensemble.
struct ModelParams {
    double alpha = 0.0;    ///< Gilbert damping
    double nu = 0.0;       ///< noise intensity
    double lambda = 1.0;   ///< control penalty
    double delta = 0.0;    ///< tracking weight
    double c_ext = 1.0;    ///< external-field coupling
    double horizon = 1.0;  ///< final time T
    /// Diagonals of D_i = B_i - A (anisotropy plus stray field), one per spin.
    std::vector<Vec3> d_diag;
    ExchangeMatrix exchange = ExchangeMatrix::zero(1);

    std::size_t n_spins() const { return d_diag.size(); }
    std::size_t dims() const { return 3 * d_diag.size(); }

    /// Throws std::invalid_argument on violated invariants.
    void validate() const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Hopf-Cole constant C_ext^2 (1 + alpha^2) / (lambda nu^2). Rejects nu = 0.
double beta(const ModelParams& params);

/// out = (J + D) m
void q_apply(const ModelParams& params, std::span<const double> m, std::span<double> out);
Field q_apply(const ModelParams& params, std::span<const double> m);

/// Controlled drift Sigma(m)(-Q m + C_ext u), blockwise.
Field drift_f(const ModelParams& params, const SpinConfiguration& m, std::span<const double> u);

/// Auxiliary drift m x Qm - alpha m x (m x Qm).
Field drift_b(const ModelParams& params, const SpinConfiguration& m);

/// Same drift through the block matrices Sigma_i(m_i) (Qm)_i.
Field drift_b_sigma_form(const ModelParams& params, const SpinConfiguration& m);

/// -q_i + alpha m_i x q_i with q_i = (Qm)_i.
inline Vec3 abar_block(Vec3 m_i, Vec3 qm_i, double alpha) { return -qm_i + alpha * cross(m_i, qm_i); }

/// h - alpha m_i x h with h = -(Qm)_i + C_ext u_i.
inline Vec3 a_ctrl_block(Vec3 m_i, Vec3 qm_i, Vec3 u_i, double alpha, double c_ext) {
    const Vec3 h = -qm_i + c_ext * u_i;
    return h - alpha * cross(m_i, h);
}

/// Auxiliary drift argument for spin i (its cross with m_i is -b_i).
Vec3 abar(const ModelParams& params, std::span<const double> m, std::size_t i);

/// Controlled drift argument for spin i (its cross with m_i is f_i).
Vec3 a_ctrl(const ModelParams& params, std::span<const double> m, std::span<const double> u,
            std::size_t i);

/// delta |m - mtilde|^2 + lambda/2 |u|^2
double lagrangian(const ModelParams& params, std::span<const double> m, std::span<const double> u,
                  std::span<const double> mtilde);

/// Deterministic reference path t -> mtilde(t) on (S^2)^N.
class TargetProfile {
public:
    struct Constant {
        Vec3 direction;
        friend bool operator==(const Constant&, const Constant&) = default;
    };
    /// (-cos(pi t/T), sin(pi t/T), 0): half turn from -e1 to e1 through e2.
    struct RotatingSwitch {
        friend bool operator==(const RotatingSwitch&, const RotatingSwitch&) = default;
    };
    using Track = std::variant<Constant, RotatingSwitch>;

    struct Tabulated {
        std::vector<double> times;       ///< strictly increasing
        std::vector<Field> states;       ///< one configuration per time
        friend bool operator==(const Tabulated&, const Tabulated&) = default;
    };

    static TargetProfile constant(const SpinConfiguration& m);
    static TargetProfile per_spin(std::vector<Track> tracks, double horizon);
    static TargetProfile tabulated(std::vector<double> times, std::vector<SpinConfiguration> states);

    std::size_t n_spins() const;
    bool is_tabulated() const { return table_.has_value(); }
    const std::vector<Track>& tracks() const { return tracks_; }
    const Tabulated& table() const { return *table_; }
    double horizon() const { return horizon_; }

    SpinConfiguration at(double t) const;

    friend bool operator==(const TargetProfile&, const TargetProfile&) = default;

private:
    std::vector<Track> tracks_;
    double horizon_ = 1.0;
    std::optional<Tabulated> table_;
};

/// Terminal payoff h, or directly the terminal datum exp(-beta h) of the
/// linear equation for the spherical-harmonic kinds.
class TerminalPayoff {
public:
    enum class Kind { quadratic_tracking, log_harmonic_1spin, log_harmonic_2spin, custom };

    /// h(m) = 1/2 |m - target|^2
    static TerminalPayoff quadratic_tracking(SpinConfiguration target);
    /// exp(-beta h(m)) = m_3 + 2
    static TerminalPayoff log_harmonic_1spin();
    /// exp(-beta h(m)) = m_{1,3} + m_{2,3} + 2
    static TerminalPayoff log_harmonic_2spin();
    /// Caller supplies log(exp(-beta h(m))) as a function of (m, beta).
    static TerminalPayoff custom(std::function<double(std::span<const double>, double)> log_weight);

    Kind kind() const { return kind_; }
    const Field& target() const { return target_; }

    /// -beta h(m), i.e. the log of the terminal datum of the linear equation.
    double log_weight(std::span<const double> m, double beta) const;
    /// h(m)
    double value(std::span<const double> m, double beta) const;

    /// Payoffs compare equal when kind and data agree; custom payoffs never compare equal.
    friend bool operator==(const TerminalPayoff& a, const TerminalPayoff& b) {
        return a.kind_ == b.kind_ && a.kind_ != Kind::custom && a.target_ == b.target_;
    }

private:
    Kind kind_ = Kind::quadratic_tracking;
    Field target_;
    std::function<double(std::span<const double>, double)> custom_;
};

}  // namespace spinhjb
