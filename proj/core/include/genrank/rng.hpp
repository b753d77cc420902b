#pragma once

#include <cstdint>
#include <vector>

namespace genrank {

/// Deterministic 64-bit PRNG (splitmix64). The standard <random> distributions
/// are implementation-defined, so every sampling decision in the library goes
/// through this generator to keep artifacts byte-identical across platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound). bound must be > 0. Rejection sampling, unbiased.
    uint64_t below(uint64_t bound) {
        uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    /// Uniform double in [0, 1) with 53 bits of randomness.
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct indices drawn uniformly from [0, n), in draw order (partial Fisher-Yates).
    std::vector<size_t> sample_indices(size_t n, size_t k) {
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        for (size_t i = 0; i < k && i < n; ++i) {
            size_t j = i + static_cast<size_t>(below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k < n ? k : n);
        return idx;
    }

    /// Derive an independent stream for a named sub-task.
    Rng fork(uint64_t stream_id) {
        Rng child(state_ ^ (0xA0761D6478BD642Full * (stream_id + 1)));
        child.next_u64();
        return child;
    }

private:
    uint64_t state_;
};

}  // namespace genrank
