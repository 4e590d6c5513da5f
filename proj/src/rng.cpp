#include "magrisk/rng.hpp"

namespace magrisk {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RandomStream::RandomStream(std::uint64_t key) : key_(key), gen_(mix64(key)) {}

RandomStream RandomStream::child(std::string_view label) const {
    return RandomStream(mix64(key_ ^ fnv1a64(label)));
}

RandomStream RandomStream::child(std::uint64_t index) const {
    return RandomStream(mix64(key_ ^ mix64(index)));
}

std::uint64_t RandomStream::nextU64() { return gen_(); }

double RandomStream::uniform01() {
    return static_cast<double>(nextU64() >> 11) * 0x1.0p-53;
}

bool RandomStream::bernoulli(double p) {
    if (p <= 0.0) {
        nextU64(); // keep draw count independent of p
        return false;
    }
    if (p >= 1.0) {
        nextU64();
        return true;
    }
    return uniform01() < p;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
    return n == 0 ? 0 : nextU64() % n;
}

} // namespace magrisk
