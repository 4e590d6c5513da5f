// rng.hpp - deterministic seeded random streams with hierarchical splitting.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace magrisk {

// All simulation randomness flows through RandomStream. mt19937_64 output is
// fully specified by the standard; std:: distributions are not, so uniform
// and Bernoulli draws are derived from raw 64-bit output only. Streams split
// by label (run -> per-agent -> per-step), so adding an agent or metric does
// not shift any sibling's draws.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t key);

    RandomStream child(std::string_view label) const;
    RandomStream child(std::uint64_t index) const;

    std::uint64_t nextU64();

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01();

    bool bernoulli(double p);

    // Uniform in [0, n). Modulo reduction: bias < 2^-32 for n up to 2^32,
    // irrelevant next to determinism here.
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
    std::mt19937_64 gen_;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t mix64(std::uint64_t z); // splitmix64 finaliser

} // namespace magrisk
