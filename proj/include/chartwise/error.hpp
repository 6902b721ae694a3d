#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chartwise {

enum class ErrorKind {
    empty_input,
    parameter,
    dimension,
    cover,
    connectivity,
    numerical,
    divergence,
    domain,
    degenerate,
    io,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::empty_input: return "empty_input";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::cover: return "cover";
    case ErrorKind::connectivity: return "connectivity";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::domain: return "domain";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

/// Library-wide exception. The kind lets callers (and tests) branch on the
/// failure class without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

namespace detail {

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) throw Error(kind, what);
}

} // namespace detail
} // namespace chartwise
