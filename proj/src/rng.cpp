#include "qmlab/rng.hpp"

#include "qmlab/errors.hpp"

#include <cmath>

namespace qmlab {

std::uint64_t RngStream::mix(std::uint64_t x) {
    // splitmix64 finalizer (Stafford variant 13)
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

std::uint64_t RngStream::next_u64() {
    ctr_ += 1;
    return mix(key_ + 0x9e3779b97f4a7c15ull * ctr_);
}

RngStream RngStream::child(std::string_view name) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return RngStream(mix(key_ ^ mix(h ^ 0xa5a5a5a55a5a5a5aull)), 0);
}

RngStream RngStream::child(std::uint64_t index) const {
    return RngStream(mix(key_ ^ mix(index + 0x5851f42d4c957f2dull)), 0);
}

std::uint64_t RngStream::below(std::uint64_t n) {
    require(n > 0, Err::InvalidInput, "below(0)");
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

double RngStream::real01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::gauss() {
    double u1 = 0.0;
    do {
        u1 = real01();
    } while (u1 == 0.0);
    double u2 = real01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::size_t RngStream::pick_weighted(std::span<const double> weights) {
    require(!weights.empty(), Err::InvalidInput, "empty weight vector");
    long double total = 0.0L;
    for (double w : weights) {
        require(w >= 0.0, Err::InvalidInput, "negative weight");
        total += w;
    }
    require(total > 0.0L, Err::InvalidInput, "all weights zero");
    long double x = static_cast<long double>(real01()) * total;
    long double acc = 0.0L;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        acc += weights[i];
        if (x < acc) return i;
    }
    return weights.size() - 1;
}

} // namespace qmlab
