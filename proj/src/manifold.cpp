#include "spinhjb/manifold.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>
#include <string>

namespace spinhjb {

Mat3 transpose(const Mat3& a) {
    Mat3 t{};
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) t[c][r] = a[r][c];
    return t;
}

Mat3 multiply(const Mat3& a, const Mat3& b) {
    Mat3 p{};
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t k = 0; k < 3; ++k) p[r][c] += a[r][k] * b[k][c];
    return p;
}

Mat3 cross_matrix(Vec3 m) {
    return Mat3{{{0.0, -m.z, m.y}, {m.z, 0.0, -m.x}, {-m.y, m.x, 0.0}}};
}

Mat3 sigma_block(Vec3 m, double alpha) {
    const Mat3 s = cross_matrix(m);
    const Mat3 s2 = multiply(s, s);
    Mat3 out{};
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) out[r][c] = s[r][c] - alpha * s2[r][c];
    return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        acc += d * d;
    }
    return acc;
}

double squared_norm(std::span<const double> a) {
    double acc = 0.0;
    for (double v : a) acc += v * v;
    return acc;
}

double max_norm_defect(std::span<const double> flat) {
    double worst = 0.0;
    for (std::size_t i = 0; i < flat.size() / 3; ++i)
        worst = std::max(worst, std::abs(norm(block(flat, i)) - 1.0));
    return worst;
}

SpinConfiguration::SpinConfiguration(Field flat, double tolerance) : data_(std::move(flat)) {
    if (data_.empty() || data_.size() % 3 != 0)
        throw std::invalid_argument("spin configuration needs 3N > 0 components, got " +
                                    std::to_string(data_.size()));
    for (std::size_t i = 0; i < n_spins(); ++i) {
        const Vec3 s = spin(i);
        if (!is_finite(s))
            throw std::invalid_argument("spin " + std::to_string(i) + " has non-finite components");
        const double defect = std::abs(norm(s) - 1.0);
        if (defect > tolerance)
            throw std::invalid_argument("spin " + std::to_string(i) +
                                        " is off the unit sphere (| |m|-1 | = " +
                                        std::to_string(defect) + ")");
    }
}

SpinConfiguration::SpinConfiguration(std::span<const Vec3> spins, double tolerance)
    : SpinConfiguration(
          [&] {
              Field f(3 * spins.size());
              for (std::size_t i = 0; i < spins.size(); ++i) set_block(f, i, spins[i]);
              return f;
          }(),
          tolerance) {}

SpinConfiguration SpinConfiguration::normalized(std::span<const double> flat) {
    Field f(flat.begin(), flat.end());
    for (std::size_t i = 0; i < f.size() / 3; ++i) {
        const Vec3 s = block(f, i);
        const double n = norm(s);
        if (!(n > 1e-8)) throw std::invalid_argument("cannot normalize a vanishing spin block");
        set_block(f, i, (1.0 / n) * s);
    }
    return SpinConfiguration(std::move(f));
}

double SpinConfiguration::max_norm_defect() const { return spinhjb::max_norm_defect(data_); }

void tangent_project_inplace(std::span<const double> m, std::span<double> v) {
    assert(m.size() == v.size());
    for (std::size_t i = 0; i < m.size() / 3; ++i) {
        const Vec3 mi = block(m, i);
        const Vec3 vi = block(v, i);
        set_block(v, i, vi - dot(vi, mi) * mi);
    }
}

TangentVector tangent_project(const SpinConfiguration& m, std::span<const double> v) {
    if (v.size() != m.dims()) throw std::invalid_argument("tangent_project: dimension mismatch");
    TangentVector t{Field(v.begin(), v.end())};
    tangent_project_inplace(m.flat(), t.components);
    return t;
}

SpinConfiguration perturb_renormalized(const SpinConfiguration& m, std::size_t i, std::size_t l,
                                       double hbar, StencilSign sign) {
    if (!(hbar > 0.0 && hbar < 1.0)) throw std::invalid_argument("stencil width must lie in (0, 1)");
    if (i >= m.n_spins() || l >= 3) throw std::out_of_range("stencil index out of range");
    const double s = sign == StencilSign::plus ? hbar : -hbar;
    const Vec3 shifted = m.spin(i) + s * Vec3::unit(l);
    const double n = norm(shifted);
    assert(n >= 1e-8);
    Field f = m.field();
    set_block(f, i, (1.0 / n) * shifted);
    return SpinConfiguration(std::move(f));
}

}  // namespace spinhjb
