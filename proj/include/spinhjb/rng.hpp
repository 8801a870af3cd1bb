#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace spinhjb {

/// Reproducible source of random-walk increments.
///
/// Every increment is a pure function of (master_seed, sample index, step,
/// component):
///
///   word  = mix(mix(mix(master_seed ^ C0) ^ (k * C1)) ^ (j * C2 + b))
///   sign  = bit (c mod 64) of the word with b = c / 64
///
/// where mix is the SplitMix64 finalizer. Sub-streams for distinct purposes
/// are obtained with derive(), which folds tags into the master seed the same
/// way. Nothing depends on draw order, so results do not depend on how
/// samples are scheduled across threads.
struct SeedPolicy {
    std::uint64_t master_seed = 0;

    SeedPolicy derive(std::uint64_t tag) const;
    SeedPolicy derive(std::initializer_list<std::uint64_t> tags) const;

    /// 64 random bits for block b of step j of sample k.
    std::uint64_t word(std::uint64_t k, std::uint64_t j, std::uint64_t b) const;

    friend bool operator==(SeedPolicy, SeedPolicy) = default;
};

std::uint64_t mix64(std::uint64_t x);

/// Stream tags used to keep the outer path and the estimator walks apart.
namespace stream {
inline constexpr std::uint64_t outer = 0x6f75746572ULL;      // "outer"
inline constexpr std::uint64_t estimator = 0x657374ULL;      // "est"
}  // namespace stream

/// steps x dims array of increments, each +sqrt(tau) or -sqrt(tau).
class WalkIncrements {
public:
    WalkIncrements() = default;
    WalkIncrements(std::size_t steps, std::size_t dims, double amplitude);

    std::size_t steps() const { return steps_; }
    std::size_t dims() const { return dims_; }
    double amplitude() const { return amplitude_; }

    std::span<const double> row(std::size_t j) const {
        return {xi_.data() + j * dims_, dims_};
    }
    std::span<double> row(std::size_t j) { return {xi_.data() + j * dims_, dims_}; }
    double operator()(std::size_t j, std::size_t c) const { return xi_[j * dims_ + c]; }
    std::span<const double> values() const { return xi_; }

    /// Regenerates in place; reuses storage when the shape is unchanged.
    void fill(const SeedPolicy& policy, std::uint64_t sample_index, std::size_t steps,
              std::size_t dims, double tau);

    friend bool operator==(const WalkIncrements&, const WalkIncrements&) = default;

private:
    std::size_t steps_ = 0;
    std::size_t dims_ = 0;
    double amplitude_ = 0.0;
    std::vector<double> xi_;
};

/// Rademacher increments +-sqrt(tau), i.i.d. across steps and components.
WalkIncrements sample_walk(const SeedPolicy& policy, std::uint64_t sample_index, std::size_t steps,
                           std::size_t dims, double tau);

/// Entrywise negation (the antithetic partner).
WalkIncrements antithetic(const WalkIncrements& w);

}  // namespace spinhjb
