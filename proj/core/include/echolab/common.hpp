#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace echolab {

// Shared physical constants.
inline constexpr double kSpeedOfSound = 343.0;  // m/s
inline constexpr int kSampleRate = 16000;       // Hz, fixed project-wide

// Input violates a documented precondition (bad shapes, out-of-range values, ...).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid or inconsistent run configuration (missing paths, bad modes, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Streaming contract violated (e.g. frames delivered out of order).
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where finite math is required (NaN gradients, ...).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Requested talker trajectory does not fit the move-at-3s template.
class TrajectoryTooShort : public DomainError {
 public:
  explicit TrajectoryTooShort(const std::string& what) : DomainError(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw DomainError(what);
}

}  // namespace echolab
