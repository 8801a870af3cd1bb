#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

/// Algebra on (R^3)^N and on the product of spheres (S^2)^N.
///
/// Configurations are stored as flat arrays of 3N reals; spin i occupies
/// entries [3i, 3i+3). Block operators are applied per spin and never
/// assembled as 3N x 3N matrices.
namespace spinhjb {

/// Norm tolerance for membership of a spin in S^2.
inline constexpr double kSphereTolerance = 1e-12;

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double operator[](std::size_t l) const { return l == 0 ? x : (l == 1 ? y : z); }

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend constexpr Vec3 operator*(Vec3 a, double s) { return s * a; }
    friend constexpr bool operator==(Vec3, Vec3) = default;

    static constexpr Vec3 unit(std::size_t l) {
        return {l == 0 ? 1.0 : 0.0, l == 1 ? 1.0 : 0.0, l == 2 ? 1.0 : 0.0};
    }
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

inline bool is_finite(Vec3 a) {
    return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

/// Row-major 3x3 matrix.
using Mat3 = std::array<std::array<double, 3>, 3>;

constexpr Vec3 mat_vec(const Mat3& a, Vec3 v) {
    return {a[0][0] * v.x + a[0][1] * v.y + a[0][2] * v.z,
            a[1][0] * v.x + a[1][1] * v.y + a[1][2] * v.z,
            a[2][0] * v.x + a[2][1] * v.y + a[2][2] * v.z};
}

Mat3 transpose(const Mat3& a);
Mat3 multiply(const Mat3& a, const Mat3& b);

/// Skew matrix sigma(m) with sigma(m) v = m x v.
Mat3 cross_matrix(Vec3 m);

/// Per-spin drift operator (Id - alpha sigma(m)) sigma(m).
///
/// For unit m this equals sigma(m) + alpha (Id - m (x) m), and it
/// annihilates m.
Mat3 sigma_block(Vec3 m, double alpha);

/// Flat storage helpers for (R^3)^N vectors.
inline Vec3 block(std::span<const double> v, std::size_t i) {
    return {v[3 * i], v[3 * i + 1], v[3 * i + 2]};
}

inline void set_block(std::span<double> v, std::size_t i, Vec3 b) {
    v[3 * i] = b.x;
    v[3 * i + 1] = b.y;
    v[3 * i + 2] = b.z;
}

/// Ambient vector in (R^3)^N.
using Field = std::vector<double>;

double squared_distance(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

/// A point of (S^2)^N.
///
/// Construction checks that every spin has unit norm within
/// kSphereTolerance; the configuration is never renormalized silently.
class SpinConfiguration {
public:
    SpinConfiguration() = default;

    /// Throws std::invalid_argument if a block is off the sphere or non-finite.
    explicit SpinConfiguration(Field flat, double tolerance = kSphereTolerance);
    explicit SpinConfiguration(std::span<const Vec3> spins, double tolerance = kSphereTolerance);

    /// Blockwise normalization of an arbitrary nonzero field.
    static SpinConfiguration normalized(std::span<const double> flat);

    std::size_t n_spins() const { return data_.size() / 3; }
    std::size_t dims() const { return data_.size(); }
    Vec3 spin(std::size_t i) const { return block(data_, i); }
    std::span<const double> flat() const { return data_; }
    const Field& field() const { return data_; }

    /// max_i | |m_i| - 1 |
    double max_norm_defect() const;

    friend bool operator==(const SpinConfiguration&, const SpinConfiguration&) = default;

private:
    Field data_;
};

/// Maximum blockwise unit-norm defect of a flat field.
double max_norm_defect(std::span<const double> flat);

/// Element of the tangent space at a specific configuration.
struct TangentVector {
    Field components;
};

/// Blockwise v_i - <v_i, m_i> m_i.
TangentVector tangent_project(const SpinConfiguration& m, std::span<const double> v);

/// In-place variant operating on raw blocks; m is assumed to have unit blocks.
void tangent_project_inplace(std::span<const double> m, std::span<double> v);

enum class StencilSign { plus, minus };

/// Replaces spin i by (m_i +/- hbar e_l) / |m_i +/- hbar e_l|.
///
/// Requires 0 < hbar < 1, i < N and l < 3 (zero-based).
SpinConfiguration perturb_renormalized(const SpinConfiguration& m, std::size_t i, std::size_t l,
                                       double hbar, StencilSign sign);

}  // namespace spinhjb
