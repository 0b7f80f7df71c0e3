#pragma once

#include <stdexcept>
#include <string>

namespace csma {

enum class ErrorCode {
    invalid_order,
    invalid_width,
    mismatch,
    overlap,
    incomplete_table,
    overflow,
    lookup,
    invalid_schedule,
    insufficient_data,
    geometry,
    spec,
    config,
    io,
};

inline const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_order: return "invalid-order";
    case ErrorCode::invalid_width: return "invalid-width";
    case ErrorCode::mismatch: return "mismatch";
    case ErrorCode::overlap: return "overlap";
    case ErrorCode::incomplete_table: return "incomplete-table";
    case ErrorCode::overflow: return "overflow";
    case ErrorCode::lookup: return "lookup";
    case ErrorCode::invalid_schedule: return "invalid-schedule";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::geometry: return "geometry";
    case ErrorCode::spec: return "spec";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
    }
    return "unknown";
}

/// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace csma
