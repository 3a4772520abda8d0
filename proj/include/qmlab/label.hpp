#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qmlab {

// Classical basis labels are ordered tuples of integers. Lexicographic order
// (std::vector's operator<) is the canonical total order used everywhere.
using Label = std::vector<std::int64_t>;

inline Label single(std::int64_t v) { return Label{v}; }

inline Label concat(const Label& a, const Label& b) {
    Label out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

std::string label_str(const Label& l);

} // namespace qmlab
