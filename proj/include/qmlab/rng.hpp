#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace qmlab {

// Counter-based seedable RNG. A stream is (key, counter); deriving a child
// stream mixes a name or index into the key, so parallel trials get
// independent streams with reproducible output on every platform (no
// implementation-defined std distributions anywhere).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    RngStream child(std::string_view name) const;
    RngStream child(std::uint64_t index) const;

    std::uint64_t next_u64();
    // uniform in [0, n), n > 0 (Lemire-style rejection, unbiased)
    std::uint64_t below(std::uint64_t n);
    // uniform in [0,1) with 53 bits
    double real01();
    // standard normal via Box-Muller (consumes two words, no cached state)
    double gauss();
    // index sampled proportionally to nonnegative weights
    std::size_t pick_weighted(std::span<const double> weights);

    static std::uint64_t mix(std::uint64_t x);

private:
    RngStream(std::uint64_t key, int) : key_(key) {}
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

} // namespace qmlab
