#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace weylscat {

enum class ErrorCode {
    NotSquare,
    NotHermitian,
    NotPSD,
    NonFinite,
    RealAxisEvaluation,
    QuadratureFailure,
    NoConvergence,
    SupportNotCovered,
    SingularWeylValue,
    NotDissipative,
    SingularCoupledValue,
    CayleySingular,
    NotContractive,
    AdmissibilityFailed,
    UnknownModel,
    BadParameters,
    ConfigError,
    ModelError,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to a row status or exit code.
class NumericError : public std::runtime_error {
public:
    NumericError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace weylscat
