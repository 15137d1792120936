#pragma once

// Deterministic sample generator.  splitmix64 keeps identical seeds producing
// bit-identical streams on every platform, which the CLI determinism contract
// requires; <random> distributions do not guarantee that.

#include <cstdint>
#include <vector>

namespace finsler {

class SampleRng {
 public:
    explicit SampleRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64()
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::vector<double> uniform_vec(int n, double lo, double hi)
    {
        std::vector<double> v(n);
        for (auto& x : v) x = uniform(lo, hi);
        return v;
    }

 private:
    std::uint64_t state_;
};

}  // namespace finsler
