#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace distilkit {

/// Seedable generator with splittable streams.
///
/// Every consumer asks for its own stream keyed by (purpose, index), so the
/// numbers a component sees never depend on how many draws another component
/// made before it. The engine is std::mt19937_64, whose output sequence is
/// fixed by the standard; the uniform and normal transforms below are written
/// out explicitly because the std distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    /// Independent child stream; deterministic in (seed, purpose, index).
    Rng stream(std::string_view purpose, std::uint64_t index = 0) const;

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n) without modulo bias. n must be > 0.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via Box-Muller; caches the second variate.
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace distilkit
