#ifndef DKO_RNG_HPP
#define DKO_RNG_HPP

#include <cmath>
#include <cstdint>

namespace dko {

// Counter-based generator: output i of stream s under seed k is
// mix(key(k,s) + i*phi). Draws are a pure function of (seed, stream, counter),
// so independent streams can be split off without coupling their sequences,
// and replaying a run is just replaying the counters. Platform-independent
// (no library distributions involved).
class CounterRng {
public:
    // Stream ids used by the harness. Scenario retries bump the `rotation`
    // so a regenerated graph draws fresh values on every stream.
    enum Stream : std::uint64_t {
        kGraph = 1,      // positions, edges, anchor shuffle
        kInit = 2,       // initial velocities, estimate perturbation
        kMeasNoise = 3,  // optional measurement noise
        kInput = 4,      // optional input signal
    };

    CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t rotation = 0)
        : key_(mix(seed ^ mix(stream ^ mix(rotation)))), counter_(0) {}

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

    // Random access draw (does not advance the stream); used for pure
    // functions of the step index such as input signals.
    double uniform_at(std::uint64_t index) const {
        return static_cast<double>(mix(key_ + (index + 1) * kGolden) >> 11) * 0x1.0p-53;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; consumes exactly two uniforms per pair of gaussians.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // Guard against log(0).
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    // Deterministic in-place Fisher-Yates shuffle.
    template <typename Vec>
    void shuffle(Vec& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_u64() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

    // SplitMix64 finalizer.
    static std::uint64_t mix(std::uint64_t z) {
        z += kGolden;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// FNV-1a over bytes; used for config hashing.
inline std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x00000100000001b3ull;
    }
    return h;
}

}  // namespace dko

#endif  // DKO_RNG_HPP
