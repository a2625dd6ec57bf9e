// errors.hpp : exception types shared across the workbench
#pragma once

#include <stdexcept>
#include <string>

namespace rtkbench {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Geometry/value preconditions
class DegenerateInput : public Error { using Error::Error; };
class RangeError : public Error { using Error::Error; };

// Configuration
class ConfigError : public Error { using Error::Error; };

// Solver failures (turned into status downgrades by the epoch pipeline)
class InsufficientGeometry : public Error { using Error::Error; };
class NoConvergence : public Error { using Error::Error; };
class InsufficientCommonSats : public Error { using Error::Error; };
class BaselineTooLong : public Error { using Error::Error; };

// Station / guard / bench
class StreamDisabled : public Error { using Error::Error; };
class InsufficientStations : public Error { using Error::Error; };
class EmptyRun : public Error { using Error::Error; };

// Network client
class ConnectionRefused : public Error { using Error::Error; };
class AuthRejected : public Error { using Error::Error; };

} // namespace rtkbench
