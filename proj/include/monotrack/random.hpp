#pragma once

#include <cstdint>
#include <random>

namespace monotrack {

// Seeded generator with explicit substreams. Uniform and normal draws are
// derived from raw engine output so sequences do not depend on the standard
// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    double uniform();
    double uniform(double lo, double hi);
    double normal();

    // Independent generator for a named sub-task; does not advance this one.
    Rng fork(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace monotrack
