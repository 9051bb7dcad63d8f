#include "weylscat/errors.hpp"

namespace weylscat {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotSquare: return "NotSquare";
        case ErrorCode::NotHermitian: return "NotHermitian";
        case ErrorCode::NotPSD: return "NotPSD";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::RealAxisEvaluation: return "RealAxisEvaluation";
        case ErrorCode::QuadratureFailure: return "QuadratureFailure";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::SupportNotCovered: return "SupportNotCovered";
        case ErrorCode::SingularWeylValue: return "SingularWeylValue";
        case ErrorCode::NotDissipative: return "NotDissipative";
        case ErrorCode::SingularCoupledValue: return "SingularCoupledValue";
        case ErrorCode::CayleySingular: return "CayleySingular";
        case ErrorCode::NotContractive: return "NotContractive";
        case ErrorCode::AdmissibilityFailed: return "AdmissibilityFailed";
        case ErrorCode::UnknownModel: return "UnknownModel";
        case ErrorCode::BadParameters: return "BadParameters";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::ModelError: return "ModelError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace weylscat
