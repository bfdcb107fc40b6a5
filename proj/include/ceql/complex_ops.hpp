#pragma once

// Surrogate operators of the complex equation learner.
//
// Signals and weights are complex; every operator except Log, Sqrt and the
// denominator of Divide discards imaginary parts of its inputs and emits a
// value on the real axis. Adjoints follow the "two real parameters" convention:
// for a real loss L and complex quantity z, adj(z) = dL/dRe(z) + i dL/dIm(z).
// For holomorphic u = f(z) this gives adj(z) = adj(u) * conj(f'(z)).

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace ceql {

enum class OperatorKind { Identity, Constant, Square, Multiply, Divide, Log, Sqrt };

constexpr int arity(OperatorKind kind) {
    return (kind == OperatorKind::Multiply || kind == OperatorKind::Divide) ? 2 : 1;
}

/// Operators whose output depends on the imaginary part of some input.
constexpr bool is_imaginary_sensitive(OperatorKind kind) {
    return kind == OperatorKind::Divide || kind == OperatorKind::Log || kind == OperatorKind::Sqrt;
}

/// Log and Sqrt live on a branch; their arguments are subject to the argument penalty.
constexpr bool is_branched(OperatorKind kind) {
    return kind == OperatorKind::Log || kind == OperatorKind::Sqrt;
}

const char* to_string(OperatorKind kind);
OperatorKind operator_from_string(const std::string& name);

enum class OpStatus { Ok, DivisionNearZero, LogOfZero, NonFinite };

const char* to_string(OpStatus status);

inline constexpr double kPoleEps = 1e-30;

template <typename T>
struct OpResult {
    std::complex<T> value;
    OpStatus status = OpStatus::Ok;

    bool ok() const { return status == OpStatus::Ok; }
};

namespace detail {

// Points on the negative real axis are mapped to the upper side of the cut so
// that arg lies in (-pi, pi] regardless of the sign of a zero imaginary part.
template <typename T>
std::complex<T> upper_side(std::complex<T> z) {
    if (z.imag() == T(0)) return {z.real(), T(0)};
    return z;
}

}  // namespace detail

/// Re(Re(x) / y), embedded with zero imaginary part.
template <typename T>
OpResult<T> surrogate_div(std::complex<T> x, std::complex<T> y) {
    if (std::abs(y) < T(kPoleEps)) return {std::complex<T>(0), OpStatus::DivisionNearZero};
    const std::complex<T> q = x.real() / y;
    if (!std::isfinite(q.real())) return {std::complex<T>(0), OpStatus::NonFinite};
    return {std::complex<T>(q.real(), T(0)), OpStatus::Ok};
}

/// ln|z| + i arg z with arg z in (-pi, pi].
template <typename T>
OpResult<T> principal_log(std::complex<T> z) {
    const T r = std::abs(z);
    if (r < T(kPoleEps)) return {std::complex<T>(0), OpStatus::LogOfZero};
    const std::complex<T> u = detail::upper_side(z);
    return {std::complex<T>(std::log(r), std::atan2(u.imag(), u.real())), OpStatus::Ok};
}

/// exp(log(z) / 2) on the principal branch; sqrt(0) = 0.
template <typename T>
OpResult<T> principal_sqrt(std::complex<T> z) {
    if (z == std::complex<T>(0)) return {std::complex<T>(0), OpStatus::Ok};
    if (std::abs(z) < T(kPoleEps)) return {std::complex<T>(0), OpStatus::LogOfZero};
    // std::sqrt realizes the same principal branch with correct rounding.
    return {std::sqrt(detail::upper_side(z)), OpStatus::Ok};
}

/// u(Re x) + 0i for the real-projected unary operators.
template <typename T>
std::complex<T> real_projected_unary(OperatorKind kind, std::complex<T> x) {
    const T r = x.real();
    switch (kind) {
    case OperatorKind::Identity: return {r, T(0)};
    case OperatorKind::Square: return {r * r, T(0)};
    default: throw std::invalid_argument("real_projected_unary: unsupported operator");
    }
}

/// b(Re x, Re y) + 0i for the real-projected binary operators.
template <typename T>
std::complex<T> real_projected_binary(OperatorKind kind, std::complex<T> x, std::complex<T> y) {
    if (kind != OperatorKind::Multiply)
        throw std::invalid_argument("real_projected_binary: unsupported operator");
    return {x.real() * y.real(), T(0)};
}

/// Applies a unary library operator. Constant is handled by the network
/// (it ignores its summation input), so it is rejected here.
template <typename T>
OpResult<T> apply_unary(OperatorKind kind, std::complex<T> z) {
    switch (kind) {
    case OperatorKind::Identity:
    case OperatorKind::Square: {
        const auto v = real_projected_unary(kind, z);
        if (!std::isfinite(v.real())) return {std::complex<T>(0), OpStatus::NonFinite};
        return {v, OpStatus::Ok};
    }
    case OperatorKind::Log: return principal_log(z);
    case OperatorKind::Sqrt: return principal_sqrt(z);
    default: throw std::invalid_argument("apply_unary: not a unary operator");
    }
}

template <typename T>
OpResult<T> apply_binary(OperatorKind kind, std::complex<T> x, std::complex<T> y) {
    switch (kind) {
    case OperatorKind::Multiply: {
        const auto v = real_projected_binary(kind, x, y);
        if (!std::isfinite(v.real())) return {std::complex<T>(0), OpStatus::NonFinite};
        return {v, OpStatus::Ok};
    }
    case OperatorKind::Divide: return surrogate_div(x, y);
    default: throw std::invalid_argument("apply_binary: not a binary operator");
    }
}

/// Adjoint of the unary operator input given the adjoint of its output.
/// On the cut the derivative is the limit from the upper half-plane; at the
/// sqrt singularity z = 0 the adjoint is taken as zero.
template <typename T>
std::complex<T> unary_adjoint(OperatorKind kind, std::complex<T> z, std::complex<T> adj_out) {
    switch (kind) {
    case OperatorKind::Identity: return {adj_out.real(), T(0)};
    case OperatorKind::Square: return {adj_out.real() * T(2) * z.real(), T(0)};
    case OperatorKind::Log: return adj_out * std::conj(T(1) / detail::upper_side(z));
    case OperatorKind::Sqrt: {
        if (z == std::complex<T>(0)) return std::complex<T>(0);
        const std::complex<T> root = std::sqrt(detail::upper_side(z));
        return adj_out * std::conj(T(1) / (T(2) * root));
    }
    default: throw std::invalid_argument("unary_adjoint: not a unary operator");
    }
}

/// Adjoints of (x, y) for the binary operators.
template <typename T>
std::pair<std::complex<T>, std::complex<T>> binary_adjoint(OperatorKind kind, std::complex<T> x,
                                                           std::complex<T> y,
                                                           std::complex<T> adj_out) {
    const T g = adj_out.real();
    if (kind == OperatorKind::Multiply) return {{g * y.real(), T(0)}, {g * x.real(), T(0)}};
    if (kind == OperatorKind::Divide) {
        // u = Re(x) * Re(q) with q = 1/y.
        const std::complex<T> q = T(1) / y;
        const std::complex<T> adj_x(g * q.real(), T(0));
        const std::complex<T> adj_q(g * x.real(), T(0));
        const std::complex<T> adj_y = adj_q * std::conj(-q * q);
        return {adj_x, adj_y};
    }
    throw std::invalid_argument("binary_adjoint: not a binary operator");
}

}  // namespace ceql
