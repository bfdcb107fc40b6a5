#include <stdexcept>
#include <string>

#include "ceql/complex_ops.hpp"
#include "ceql/types.hpp"

namespace ceql {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::DegenerateModel: return "DegenerateModel";
    case ErrorCode::ImaginaryResidue: return "ImaginaryResidue";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::SamplingStarved: return "SamplingStarved";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

const char* to_string(Split split) {
    switch (split) {
    case Split::Train: return "train";
    case Split::Interp: return "interp";
    case Split::Extrap: return "extrap";
    }
    return "train";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "interp") return Split::Interp;
    if (s == "extrap") return Split::Extrap;
    throw Error(ErrorCode::InvalidConfig, "unknown split '" + s + "'");
}

const char* to_string(OperatorKind kind) {
    switch (kind) {
    case OperatorKind::Identity: return "id";
    case OperatorKind::Constant: return "const";
    case OperatorKind::Square: return "square";
    case OperatorKind::Multiply: return "mul";
    case OperatorKind::Divide: return "div";
    case OperatorKind::Log: return "log";
    case OperatorKind::Sqrt: return "sqrt";
    }
    return "id";
}

OperatorKind operator_from_string(const std::string& name) {
    if (name == "id") return OperatorKind::Identity;
    if (name == "const") return OperatorKind::Constant;
    if (name == "square") return OperatorKind::Square;
    if (name == "mul") return OperatorKind::Multiply;
    if (name == "div") return OperatorKind::Divide;
    if (name == "log") return OperatorKind::Log;
    if (name == "sqrt") return OperatorKind::Sqrt;
    throw Error(ErrorCode::InvalidConfig, "unknown operator '" + name + "'");
}

const char* to_string(OpStatus status) {
    switch (status) {
    case OpStatus::Ok: return "ok";
    case OpStatus::DivisionNearZero: return "DivisionNearZero";
    case OpStatus::LogOfZero: return "LogOfZero";
    case OpStatus::NonFinite: return "NonFinite";
    }
    return "ok";
}

}  // namespace ceql
