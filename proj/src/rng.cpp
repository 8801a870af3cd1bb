#include "spinhjb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spinhjb {

namespace {
constexpr std::uint64_t kSeedSalt = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kSampleMul = 0xd1b54a32d192ed03ULL;
constexpr std::uint64_t kStepMul = 0xaef17502108ef2d9ULL;
constexpr std::uint64_t kTagMul = 0xf1357aea2e62a9c5ULL;
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

SeedPolicy SeedPolicy::derive(std::uint64_t tag) const {
    return SeedPolicy{mix64(mix64(master_seed ^ kSeedSalt) ^ (tag * kTagMul + 1))};
}

SeedPolicy SeedPolicy::derive(std::initializer_list<std::uint64_t> tags) const {
    SeedPolicy p = *this;
    for (std::uint64_t t : tags) p = p.derive(t);
    return p;
}

std::uint64_t SeedPolicy::word(std::uint64_t k, std::uint64_t j, std::uint64_t b) const {
    const std::uint64_t base = mix64(mix64(master_seed ^ kSeedSalt) ^ (k * kSampleMul));
    return mix64(base ^ (j * kStepMul + b));
}

WalkIncrements::WalkIncrements(std::size_t steps, std::size_t dims, double amplitude)
    : steps_(steps), dims_(dims), amplitude_(amplitude), xi_(steps * dims, 0.0) {}

void WalkIncrements::fill(const SeedPolicy& policy, std::uint64_t sample_index, std::size_t steps,
                          std::size_t dims, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("walk increments need tau > 0");
    steps_ = steps;
    dims_ = dims;
    amplitude_ = std::sqrt(tau);
    xi_.resize(steps * dims);
    const std::size_t words = (dims + 63) / 64;
    for (std::size_t j = 0; j < steps; ++j) {
        double* row = xi_.data() + j * dims;
        for (std::size_t b = 0; b < words; ++b) {
            const std::uint64_t bits = policy.word(sample_index, j, b);
            const std::size_t lo = 64 * b;
            const std::size_t hi = std::min(dims, lo + 64);
            for (std::size_t c = lo; c < hi; ++c)
                row[c] = ((bits >> (c - lo)) & 1U) ? amplitude_ : -amplitude_;
        }
    }
}

WalkIncrements sample_walk(const SeedPolicy& policy, std::uint64_t sample_index, std::size_t steps,
                           std::size_t dims, double tau) {
    WalkIncrements w;
    w.fill(policy, sample_index, steps, dims, tau);
    return w;
}

WalkIncrements antithetic(const WalkIncrements& w) {
    WalkIncrements out(w.steps(), w.dims(), w.amplitude());
    for (std::size_t j = 0; j < w.steps(); ++j) {
        auto src = w.row(j);
        auto dst = out.row(j);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] = -src[c];
    }
    return out;
}

}  // namespace spinhjb
