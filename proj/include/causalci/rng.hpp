#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace causalci {

/// SplitMix64 engine. Small state makes it cheap to create one stream per
/// (run, row) so that parallel generation reproduces serial output.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Derives the seed of an independent stream from a root seed and a path of
/// stream indices, e.g. derive_seed(seed, {run, row}).
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = seed;
    for (std::uint64_t idx : path) {
        SplitMix64 mix(h ^ (idx * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
        h = mix();
        h ^= mix();
    }
    return h;
}

inline SplitMix64 make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    return SplitMix64(derive_seed(seed, path));
}

}  // namespace causalci
