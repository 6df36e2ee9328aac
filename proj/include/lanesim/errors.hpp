#pragma once

#include <stdexcept>
#include <string>

namespace lanesim {

// Error classes map onto the CLI exit codes: config/data problems exit 2,
// controller protocol failures exit 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed config, track or manifest documents.
struct ConfigError : Error {
  using Error::Error;
};

/// Drive-log ingestion problems: missing files, bad records, non-monotonic time.
struct DataError : Error {
  using Error::Error;
};

/// Precondition violations on library operations.
struct DomainError : Error {
  using Error::Error;
};

/// Pose offset outside the warp operating envelope.
struct EnvelopeError : DomainError {
  using DomainError::DomainError;
};

/// External controller subprocess misbehaved (timeout, bad reply, died).
struct ControllerError : Error {
  using Error::Error;
};

}  // namespace lanesim
