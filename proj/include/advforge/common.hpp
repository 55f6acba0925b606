#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace advforge {

// Raised when a caller violates an operation's preconditions.
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Raised by place_foreground when the ratio configuration leaves no
// feasible center inside the frame.
struct InfeasiblePlacement : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised by the BBOX filters when no prediction row qualifies.
struct EmptyCandidate : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised by the attack loop when the filters come back empty for too
// many consecutive steps.
struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string fnv1a64_hex(const void* data, size_t n);
std::string fnv1a64_file_hex(const std::string& path);

} // namespace advforge
