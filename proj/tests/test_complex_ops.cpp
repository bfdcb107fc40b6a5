#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ceql/complex_ops.hpp"
#include "support.hpp"

using namespace ceql;
using C = std::complex<double>;

namespace {

// Division by hand: (a+bi)/(c+di) = ((ac+bd) + (bc-ad)i) / (c^2+d^2).
C long_division(C x, C y) {
    const long double a = x.real(), b = x.imag(), c = y.real(), d = y.imag();
    const long double den = c * c + d * d;
    return {static_cast<double>((a * c + b * d) / den), static_cast<double>((b * c - a * d) / den)};
}

}  // namespace

TEST_CASE("surrogate division") {
    auto r = surrogate_div(C(2, 3), C(1, 1));
    CHECK(r.ok());
    CHECK(r.value.real() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.value.imag() == 0.0);
    CHECK(r.value.real() == doctest::Approx(long_division(C(2, 0), C(1, 1)).real()));

    CHECK(surrogate_div(C(1, 0), C(2, 0)).value == C(0.5, 0));
    CHECK(surrogate_div(C(0, 5), C(3, 4)).value == C(0, 0));

    auto pole = surrogate_div(C(1, 0), C(1e-31, 0));
    CHECK(pole.status == OpStatus::DivisionNearZero);
    CHECK(pole.value == C(0, 0));
    CHECK(surrogate_div(C(1, 0), C(0, 2e-30)).ok());
}

TEST_CASE("principal log") {
    CHECK(principal_log(C(1, 0)).value == C(0, 0));
    auto m1 = principal_log(C(-1, 0));
    CHECK(m1.value.real() == doctest::Approx(0.0));
    CHECK(m1.value.imag() == doctest::Approx(std::numbers::pi));
    // A negative zero imaginary part still lands on the upper side of the cut.
    CHECK(principal_log(C(-1, -0.0)).value.imag() == doctest::Approx(std::numbers::pi));
    auto i = principal_log(C(0, 1));
    CHECK(i.value.real() == doctest::Approx(0.0));
    CHECK(i.value.imag() == doctest::Approx(std::numbers::pi / 2));
    CHECK(std::abs(i.value - std::log(C(0, 1))) < 1e-15);
    CHECK(principal_log(C(0, 0)).status == OpStatus::LogOfZero);
}

TEST_CASE("principal sqrt") {
    CHECK(principal_sqrt(C(4, 0)).value == C(2, 0));
    auto m1 = principal_sqrt(C(-1, 0)).value;
    CHECK(m1.real() == doctest::Approx(0.0));
    CHECK(m1.imag() == doctest::Approx(1.0));
    auto r = principal_sqrt(C(0, 2)).value;
    CHECK(std::abs(r - C(1, 1)) < 1e-15);
    CHECK(std::abs(r * r - C(0, 2)) < 1e-15);
    CHECK(principal_sqrt(C(0, 0)).value == C(0, 0));
    CHECK(principal_sqrt(C(1e-40, 0)).status == OpStatus::LogOfZero);
}

TEST_CASE("real-projected operators") {
    CHECK(apply_unary(OperatorKind::Square, C(3, 7)).value == C(9, 0));
    CHECK(apply_unary(OperatorKind::Identity, C(-2, 0.5)).value == C(-2, 0));
    CHECK(apply_unary(OperatorKind::Square, C(0, 4)).value == C(0, 0));
    CHECK(apply_binary(OperatorKind::Multiply, C(2, 9), C(3, -4)).value == C(6, 0));
    CHECK(apply_binary(OperatorKind::Multiply, C(0, 1), C(5, 0)).value == C(0, 0));
    CHECK(apply_binary(OperatorKind::Multiply, C(-1.5, 0), C(2, 0)).value == C(-3, 0));
    CHECK_THROWS_AS(apply_unary(OperatorKind::Constant, C(1, 0)), std::invalid_argument);
    CHECK_THROWS_AS(apply_binary(OperatorKind::Log, C(1, 0), C(1, 0)), std::invalid_argument);
}

TEST_CASE("operator names round trip") {
    for (auto k : {OperatorKind::Identity, OperatorKind::Constant, OperatorKind::Square, OperatorKind::Multiply,
                   OperatorKind::Divide, OperatorKind::Log, OperatorKind::Sqrt})
        CHECK(operator_from_string(to_string(k)) == k);
    CHECK_THROWS(operator_from_string("sin"));
}

TEST_CASE("property: projection ignores imaginary parts") {
    test::Gen g(11);
    for (int n = 0; n < 2000; ++n) {
        const C x = g.complex(10.0), y = g.complex(10.0);
        const double t = g.uniform(-1e3, 1e3);
        for (auto k : {OperatorKind::Identity, OperatorKind::Square})
            CHECK(apply_unary(k, x + C(0, t)).value == apply_unary(k, x).value);
        CHECK(apply_binary(OperatorKind::Multiply, x + C(0, t), y - C(0, t)).value ==
              apply_binary(OperatorKind::Multiply, x, y).value);
        // Only the denominator of the surrogate quotient sees imaginary parts.
        CHECK(surrogate_div(x + C(0, t), y).value == surrogate_div(x, y).value);
        CHECK(surrogate_div(x, y).value.imag() == 0.0);
    }
}

TEST_CASE("property: log and sqrt on the positive axis and under conjugation") {
    test::Gen g(12);
    for (int n = 0; n < 2000; ++n) {
        const double r = std::exp(g.uniform(-20.0, 20.0));
        const auto l = principal_log(C(r, 0)).value;
        const auto s = principal_sqrt(C(r, 0)).value;
        CHECK(l.imag() == 0.0);
        CHECK(s.imag() == 0.0);
        CHECK(std::abs(l.real() - std::log(r)) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(std::log(r)) + 1e-300);
        CHECK(std::abs(s.real() - std::sqrt(r)) <= 4 * std::numeric_limits<double>::epsilon() * std::sqrt(r));

        const C z(g.uniform(-5, 5), g.uniform(0.01, 5) * (g.uniform(0, 1) < 0.5 ? -1 : 1));
        const auto lz = principal_log(z).value;
        const auto lc = principal_log(std::conj(z)).value;
        CHECK(lc.real() == doctest::Approx(lz.real()));
        CHECK(lc.imag() == doctest::Approx(-lz.imag()));
        CHECK(lz.imag() > -std::numbers::pi);
        CHECK(lz.imag() <= std::numbers::pi);

        const C w = std::polar(std::exp(g.uniform(-13.8, 13.8)), g.uniform(-3.1, 3.1));
        CHECK(std::abs(std::exp(principal_log(w).value) - w) <= 1e-12 * std::abs(w));
    }
}

TEST_CASE("property: adjoints match finite differences") {
    // For L = Re(c * f(z)) the adjoint dL/dRe z + i dL/dIm z is checked by
    // central differences along both real coordinates.
    test::Gen g(13);
    const double h = 1e-6;
    for (int n = 0; n < 500; ++n) {
        const C c = g.complex(2.0);
        const C z(g.uniform(0.2, 3.0) * (g.uniform(0, 1) < 0.5 ? -1 : 1), g.uniform(0.2, 3.0));
        for (auto k : {OperatorKind::Log, OperatorKind::Sqrt, OperatorKind::Identity, OperatorKind::Square}) {
            auto L = [&](C v) { return (c * apply_unary(k, v).value).real(); };
            const C fd((L(z + C(h, 0)) - L(z - C(h, 0))) / (2 * h), (L(z + C(0, h)) - L(z - C(0, h))) / (2 * h));
            // adj_out for L = Re(c u) is conj(c).
            const C an = unary_adjoint(k, z, std::conj(c));
            CHECK(std::abs(an - fd) < 1e-7 * (1 + std::abs(fd)));
        }
        const C x = g.complex(2.0);
        for (auto k : {OperatorKind::Divide, OperatorKind::Multiply}) {
            auto L = [&](C a, C b) { return (c * apply_binary(k, a, b).value).real(); };
            const C fdx((L(x + C(h, 0), z) - L(x - C(h, 0), z)) / (2 * h),
                        (L(x + C(0, h), z) - L(x - C(0, h), z)) / (2 * h));
            const C fdy((L(x, z + C(h, 0)) - L(x, z - C(h, 0))) / (2 * h),
                        (L(x, z + C(0, h)) - L(x, z - C(0, h))) / (2 * h));
            const auto [ax, ay] = binary_adjoint(k, x, z, std::conj(c));
            CHECK(std::abs(ax - fdx) < 1e-7 * (1 + std::abs(fdx)));
            CHECK(std::abs(ay - fdy) < 1e-7 * (1 + std::abs(fdy)));
        }
    }
}
