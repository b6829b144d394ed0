#pragma once

#include <stdexcept>
#include <string>

namespace convspect {

/// Precondition violation: bad sizes, mismatched channels, invalid
/// frequencies and the like. Thrown before any work is done.
struct ContractError : std::invalid_argument {
    explicit ContractError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Structured-file parse failure. `kind` distinguishes the failure modes
/// callers may want to branch on; `what()` carries the human context
/// (path, offset, field).
struct ParseError : std::runtime_error {
    enum class Kind {
        BadMagic,
        VersionMismatch,
        InvalidHeader,
        TruncatedPayload,
        TrailingData,
        MalformedField,
        IoFailure,
    };
    Kind kind;
    ParseError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

/// Base for oracle query failures. Layers that know more (image index,
/// frequency under test) prepend context before rethrowing; `throw;`
/// preserves the dynamic type, so callers can still distinguish
/// timeout / refused / malformed.
class OracleError : public std::exception {
  public:
    explicit OracleError(std::string msg) : msg_(std::move(msg)) {}
    const char* what() const noexcept override { return msg_.c_str(); }
    void add_context(const std::string& ctx) { msg_ = ctx + ": " + msg_; }

  private:
    std::string msg_;
};

struct ConnectionRefusedError : OracleError {
    using OracleError::OracleError;
};

struct TimeoutError : OracleError {
    using OracleError::OracleError;
};

struct MalformedResponseError : OracleError {
    using OracleError::OracleError;
};

} // namespace convspect
