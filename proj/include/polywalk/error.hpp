#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace polywalk {

enum class ErrorKind {
    structural,     // dimension mismatch, malformed input
    unbounded,      // ray or LP without a finite bound
    infeasible,     // empty body or constraint set
    degenerate,     // start point on the boundary, singular barrier, zero normal
    configuration,  // incompatible walk/target/body pairing, bad parameters
    convergence,    // iterative routine did not converge
    insufficient,   // not enough samples for a statistic
    io
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::structural: return "structural";
        case ErrorKind::unbounded: return "unbounded";
        case ErrorKind::infeasible: return "infeasible";
        case ErrorKind::degenerate: return "degenerate";
        case ErrorKind::configuration: return "configuration";
        case ErrorKind::convergence: return "convergence";
        case ErrorKind::insufficient: return "insufficient";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) fail(kind, what);
}

}  // namespace polywalk
