#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jigsketch {

enum class ErrorCode {
    InvalidArgument,
    DegenerateBasis,
    DegenerateConfiguration,
    TooShort,
    NonPositiveFactor,
    UnknownBone,
    DeviceAlreadyBound,
    MissingExternal,
    NonFiniteInput,
    WrongVariant,
    NoBindings,
    EmptyTimeline,
    ParseError,
    NonMonotonicTime,
    BadMode,
    UnknownId,
    MalformedCommand,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateBasis: return "DegenerateBasis";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::NonPositiveFactor: return "NonPositiveFactor";
    case ErrorCode::UnknownBone: return "UnknownBone";
    case ErrorCode::DeviceAlreadyBound: return "DeviceAlreadyBound";
    case ErrorCode::MissingExternal: return "MissingExternal";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::WrongVariant: return "WrongVariant";
    case ErrorCode::NoBindings: return "NoBindings";
    case ErrorCode::EmptyTimeline: return "EmptyTimeline";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::BadMode: return "BadMode";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::MalformedCommand: return "MalformedCommand";
    }
    return "Unknown";
}

/// Every library failure is raised as an Error carrying a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Parse failures also carry the 1-based line they occurred on.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class NonMonotonicTime : public Error {
public:
    NonMonotonicTime(std::string device, std::size_t line)
        : Error(ErrorCode::NonMonotonicTime,
                "device '" + device + "' time decreases at line " + std::to_string(line)),
          device_(std::move(device)), line_(line) {}

    const std::string& device() const noexcept { return device_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string device_;
    std::size_t line_;
};

} // namespace jigsketch
