#pragma once

#include "spinhjb/manifold.hpp"
#include "spinhjb/model.hpp"
#include "spinhjb/rng.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace spinhjb {

/// Path states are accepted on the sphere up to this defect.
inline constexpr double kPathSphereTolerance = 1e-10;

/// Uniform grid t_j = j T / J on [0, T], restricted to [t_start, T].
struct Partition {
    double horizon = 1.0;
    std::size_t steps = 1;  ///< J
    std::size_t start = 0;  ///< first index of the sub-partition

    Partition() = default;
    Partition(double horizon, std::size_t steps, std::size_t start = 0);

    double tau() const { return horizon / static_cast<double>(steps); }
    double time(std::size_t j) const { return static_cast<double>(j) * tau(); }
    double start_time() const { return time(start); }
    std::size_t remaining() const { return steps - start; }
    Partition from(std::size_t new_start) const { return Partition(horizon, steps, new_start); }

    friend bool operator==(const Partition&, const Partition&) = default;
};

/// Solves e = m + ((e + m)/2) x (tau a + nu xi) for e.
///
/// With c = (tau a + nu xi)/2 this is (Id + sigma(c)) e = (Id - sigma(c)) m,
/// a Cayley rotation of m; |e| = |m| up to roundoff.
Vec3 midpoint_stage(Vec3 m, Vec3 a, Vec3 xi, double tau, double nu);

/// Same linear system solved by Gaussian elimination with partial pivoting.
/// Reference for cross-checking the closed form.
Vec3 midpoint_stage_gauss(Vec3 m, Vec3 a, Vec3 xi, double tau, double nu);

/// One stage of the auxiliary scheme: out_i = Cayley update of m_i with drift
/// argument abar_i(drift_point) and noise xi_sign * xi_i. qm is scratch of size 3N.
void auxiliary_stage(const ModelParams& params, std::span<const double> m,
                     std::span<const double> drift_point, std::span<const double> xi,
                     double xi_sign, double tau, std::span<double> qm, std::span<double> out);

/// One stage of the controlled scheme with drift argument a_i(drift_point, u).
void controlled_stage(const ModelParams& params, std::span<const double> m,
                      std::span<const double> drift_point, std::span<const double> u,
                      std::span<const double> xi, double xi_sign, double tau,
                      std::span<double> qm, std::span<double> out);

/// Two-stage step of the auxiliary process (drift -b).
SpinConfiguration step_auxiliary(const ModelParams& params, const SpinConfiguration& m,
                                 std::span<const double> xi, double tau);

/// Feedback law u(t, m) on (R^3)^N.
using ControlProvider = std::function<Field(double, const SpinConfiguration&)>;

/// Two-stage step of the controlled process.
///
/// Stage 1 uses a_i(m, u(t, m)); stage 2 uses a_i((m + e)/2, u(t, g)) where g
/// is the blockwise-normalized midpoint (m + e)/2.
SpinConfiguration step_controlled(const ModelParams& params, const SpinConfiguration& m,
                                  const ControlProvider& control, double t,
                                  std::span<const double> xi, double tau);

struct PathSample {
    Partition partition;
    std::vector<SpinConfiguration> states;  ///< t_start, ..., T
};

enum class PathMode { auxiliary, controlled };

/// Iterates the chosen stepper from t_start to T. Row r of walk drives step
/// start + r. A control provider is required in controlled mode.
PathSample simulate_path(const ModelParams& params, const SpinConfiguration& start,
                         const Partition& partition, const WalkIncrements& walk, PathMode mode,
                         const ControlProvider& control = {});

}  // namespace spinhjb
