#pragma once

#include <stdexcept>
#include <string>

namespace qkd {

// Histogram search found no coincidence peak above the accidental background.
struct NoSignalError : std::runtime_error {
    explicit NoSignalError(const std::string& msg) : std::runtime_error(msg) {}
};

// An estimator was asked for a value it has no events for (zero totals).
struct UndefinedEstimateError : std::runtime_error {
    explicit UndefinedEstimateError(const std::string& msg) : std::runtime_error(msg) {}
};

// A statistic is missing the setting combinations it needs.
struct InsufficientDataError : std::runtime_error {
    explicit InsufficientDataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Alice's and Bob's views of the conversation disagree (lengths, ids).
struct ProtocolDesyncError : std::runtime_error {
    explicit ProtocolDesyncError(const std::string& msg) : std::runtime_error(msg) {}
};

// One-time-pad material ran out; no partial output is produced.
struct KeyExhaustedError : std::runtime_error {
    explicit KeyExhaustedError(const std::string& msg) : std::runtime_error(msg) {}
};

// Attempt to address already-spent one-time-pad bits.
struct KeyReuseError : std::runtime_error {
    explicit KeyReuseError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qkd
