#pragma once

// Seeding and bounded draws shared by every randomized component.
//
// All randomness in a run flows from a single 64-bit seed. Independent
// streams (one bootstrap row per tree, one feature-selection stream per tree)
// are keyed off it with derive_seed(), and each stream drives a
// std::mt19937_64, whose output sequence is fixed by the C++ standard.
// Bounded integers use Lemire's multiply-shift with rejection, so draws are
// unbiased and identical across standard libraries (unlike
// std::uniform_int_distribution, whose algorithm is unspecified).

#include <cstdint>
#include <random>

namespace prf {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream tags for derive_seed(). Values are part of the reproducibility
/// contract; never renumber.
enum class Stream : std::uint64_t {
    kBootstrap = 1,
    kFeatureSelection = 2,
    kSynthetic = 3,
};

/// Sub-seed for element `index` of stream `stream` under `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                    std::uint64_t index) noexcept {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    return splitmix64(h ^ index);
}

/// Uniform integer in [0, bound). `bound` must be positive.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>(rng()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(rng()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

/// 64-bit FNV-1a, used for digests of tables and configs.
class Fnv1a {
public:
    void update(const void* data, std::size_t len) noexcept {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
    }
    void update_u64(std::uint64_t v) noexcept {
        unsigned char bytes[8];
        for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
        update(bytes, 8);
    }
    std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace prf
