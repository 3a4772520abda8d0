#pragma once

#include <stdexcept>
#include <string>

namespace qmlab {

enum class Err {
    InvalidInput,
    NotBijective,
    InvalidProjector,
    ZeroBranch,
    DimensionMismatch,
    InvariantBroken,
    InvalidPath,
    NotAnEncodedPoint,
    InvalidParams,
    SingularBasis,
    WidthTooNarrow,
    EmptyCoset,
    NotGoodEllipsoid,
    MixedCoset,
    DegenerateShortSet,
    RankDeficient,
    InternalError,
    InvalidMixture,
    EmptyAudit,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
public:
    Error(Err code, const std::string& msg)
        : std::runtime_error(std::string(err_name(code)) + ": " + msg), code_(code) {}
    Err code() const { return code_; }

private:
    Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Err code, const std::string& msg) {
    if (!cond) fail(code, msg);
}

} // namespace qmlab
