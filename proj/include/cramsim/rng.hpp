#pragma once

#include <cstdint>

namespace cramsim {

/// Counter-based random stream. The n-th draw is a pure function of
/// (key, n), so a trial's randomness depends only on how its key was
/// derived, never on which worker ran it or in what order.
///
/// The mixing function is the SplitMix64 finalizer.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static constexpr std::uint64_t at(std::uint64_t key, std::uint64_t position) {
        return mix(key + (position + 1) * kGamma);
    }

    static constexpr double uniform_at(std::uint64_t key, std::uint64_t position) {
        return static_cast<double>(at(key, position) >> 11) * 0x1.0p-53;
    }

    /// Key of an independent sub-stream, e.g. derive(seed, input_index, trial).
    static constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
        std::uint64_t k = mix(seed ^ 0x6a09e667f3bcc909ULL);
        k = mix(k + (a + 1) * kGamma);
        return mix(k ^ ((b + 1) * 0xd1b54a32d192ed03ULL));
    }

    std::uint64_t next() { return at(key_, position_++); }
    double uniform() { return uniform_at(key_, position_++); }
    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t key() const { return key_; }
    std::uint64_t position() const { return position_; }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
    std::uint64_t key_;
    std::uint64_t position_ = 0;
};

}  // namespace cramsim
