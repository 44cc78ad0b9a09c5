#pragma once

#include <stdexcept>
#include <string>

namespace scg {

enum class ErrorCode {
    FrameTooLarge,
    Incomplete,
    ParseError,
    ValidationError,
    DuplicateMessage,
    IoError,
    IntegrityError,
    UnknownMessage,
    ParamsTooWeak,
    KeyTooShort,
    AuthFailed,
    PolicyViolation,
    UntrustedChain,
    Expired,
    NoRoleAttribute,
    Infeasible,
    ConfigError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace scg
