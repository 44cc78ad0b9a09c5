#include "scg/errors.hpp"

namespace scg {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::FrameTooLarge: return "FrameTooLarge";
    case ErrorCode::Incomplete: return "Incomplete";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::DuplicateMessage: return "DuplicateMessage";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::IntegrityError: return "IntegrityError";
    case ErrorCode::UnknownMessage: return "UnknownMessage";
    case ErrorCode::ParamsTooWeak: return "ParamsTooWeak";
    case ErrorCode::KeyTooShort: return "KeyTooShort";
    case ErrorCode::AuthFailed: return "AuthFailed";
    case ErrorCode::PolicyViolation: return "PolicyViolation";
    case ErrorCode::UntrustedChain: return "UntrustedChain";
    case ErrorCode::Expired: return "Expired";
    case ErrorCode::NoRoleAttribute: return "NoRoleAttribute";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

} // namespace scg
