#include "fairsynth/common.hpp"

#include <cmath>

namespace fairsynth {

std::string role_name(Role r) {
    switch (r) {
        case Role::Unlabeled: return "unlabeled";
        case Role::Protected: return "protected";
        case Role::Admissible: return "admissible";
        case Role::Outcome: return "outcome";
    }
    return "unlabeled";
}

Role role_from_name(std::string_view s) {
    if (s == "unlabeled" || s.empty()) return Role::Unlabeled;
    if (s == "protected") return Role::Protected;
    if (s == "admissible") return Role::Admissible;
    if (s == "outcome") return Role::Outcome;
    throw ConfigError("unknown role name: " + std::string(s));
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t RngStream::splitmix(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t seed) {
    // xoshiro256** state filled by splitmix64; never all-zero.
    std::uint64_t x = seed;
    for (auto& w : s_) w = splitmix(x);
}

RngStream RngStream::derive(std::uint64_t root_seed, std::string_view label) {
    std::uint64_t x = root_seed ^ (fnv1a64(label) * 0x9e3779b97f4a7c15ull);
    return RngStream(splitmix(x));
}

static inline std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::gaussian(double sigma) {
    // Box-Muller, one pair per call with the second deviate discarded: costs a
    // uniform but keeps the stream position independent of call history.
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return sigma * r * std::cos(2.0 * M_PI * u2);
}

std::size_t RngStream::uniform_index(std::size_t n) {
    // Rejection sampling to kill modulo bias.
    if (n == 0) throw std::logic_error("uniform_index(0)");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return static_cast<std::size_t>(v % n);
}

}  // namespace fairsynth
