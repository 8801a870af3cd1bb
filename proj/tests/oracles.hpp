#pragma once

// Reference computations written independently of the library code paths:
// dense Eigen solves instead of the closed-form Cayley update, explicit
// component formulas instead of the block helpers.

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using V3 = Eigen::Vector3d;

inline Eigen::Matrix3d skew(const V3& m) {
    Eigen::Matrix3d s;
    s << 0, -m(2), m(1), m(2), 0, -m(0), -m(1), m(0), 0;
    return s;
}

/// Solve e = m + ((e + m)/2) x c2 with c2 = tau a + nu xi, by LU.
inline V3 implicit_midpoint(const V3& m, const V3& a, const V3& xi, double tau, double nu) {
    // e - m = ((e+m)/2) x c2 = -(c2 x (e+m))/2
    const V3 c = 0.5 * (tau * a + nu * xi);
    const Eigen::Matrix3d lhs = Eigen::Matrix3d::Identity() + skew(c);
    const V3 rhs = (Eigen::Matrix3d::Identity() - skew(c)) * m;
    return lhs.fullPivLu().solve(rhs);
}

inline std::vector<double> random_unit_field(std::mt19937_64& gen, std::size_t n) {
    std::normal_distribution<double> g;
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) {
        V3 v(g(gen), g(gen), g(gen));
        v.normalize();
        out.insert(out.end(), {v(0), v(1), v(2)});
    }
    return out;
}

inline std::vector<double> random_field(std::mt19937_64& gen, std::size_t n) {
    std::normal_distribution<double> g;
    std::vector<double> out(3 * n);
    for (double& x : out) x = g(gen);
    return out;
}

inline V3 at(const std::vector<double>& v, std::size_t i) { return V3(v[3 * i], v[3 * i + 1], v[3 * i + 2]); }

/// Test problem 1: w = e^{t-T} m_3 + 2.
inline double w_test1(double t, const V3& m, double T = 0.5) { return std::exp(t - T) * m(2) + 2.0; }

/// Ambient gradient of the extension e^{t-T} x_3 + 2, projected on the tangent plane.
inline V3 tangential_grad_w_test1(double t, const V3& m, double T = 0.5) {
    const V3 ambient(0.0, 0.0, std::exp(t - T));
    return ambient - ambient.dot(m) * m;
}

}  // namespace oracle
