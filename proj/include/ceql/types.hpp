#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace ceql {

using Index = Eigen::Index;
using Complex = std::complex<double>;

using VectorXr = Eigen::VectorXd;
using MatrixXr = Eigen::MatrixXd;
using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;
using ArrayXb = Eigen::Array<bool, Eigen::Dynamic, 1>;

enum class ErrorCode {
    InvalidConfig,
    EmptyBatch,
    DegenerateModel,
    ImaginaryResidue,
    NonFiniteGradient,
    SamplingStarved,
    InvalidWindow,
    Io,
};

const char* to_string(ErrorCode code);

// Run-level failures. Per-sample operator guards never throw; they flag the
// sample instead (see OpStatus).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Real-valued samples: one row per sample, one column per input variable.
enum class Split { Train, Interp, Extrap };

const char* to_string(Split split);
Split split_from_string(const std::string& s);

struct Dataset {
    MatrixXr X;
    VectorXr y;
    Split split = Split::Train;

    Index rows() const { return X.rows(); }
    Index input_dim() const { return X.cols(); }
};

}  // namespace ceql
