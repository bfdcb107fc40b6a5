#include "ceql/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>

#include "ceql/prune.hpp"

namespace ceql {

// ---------------------------------------------------------------------------
// Construction

Expr Expr::constant(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("Expr::constant: non-finite value");
    return Expr(Kind::Const, value, 0, {});
}

Expr Expr::var(int index) {
    if (index < 1) throw std::invalid_argument("Expr::var: indices start at 1");
    return Expr(Kind::Var, 0.0, index, {});
}

namespace {

std::vector<Expr> flatten(Expr::Kind kind, std::vector<Expr> items) {
    std::vector<Expr> out;
    out.reserve(items.size());
    for (auto& it : items) {
        if (it.kind() == kind)
            out.insert(out.end(), it.children().begin(), it.children().end());
        else
            out.push_back(std::move(it));
    }
    return out;
}

}  // namespace

Expr Expr::sum(std::vector<Expr> terms) {
    auto flat = flatten(Kind::Sum, std::move(terms));
    if (flat.empty()) return constant(0.0);
    if (flat.size() == 1) return flat.front();
    return Expr(Kind::Sum, 0.0, 0, std::move(flat));
}

Expr Expr::product(std::vector<Expr> factors) {
    auto flat = flatten(Kind::Product, std::move(factors));
    if (flat.empty()) return constant(1.0);
    if (flat.size() == 1) return flat.front();
    return Expr(Kind::Product, 0.0, 0, std::move(flat));
}

Expr Expr::power(Expr base, Expr exponent) {
    return Expr(Kind::Power, 0.0, 0, {std::move(base), std::move(exponent)});
}

Expr Expr::log(Expr arg) { return Expr(Kind::Log, 0.0, 0, {std::move(arg)}); }
Expr Expr::sqrt(Expr arg) { return Expr(Kind::Sqrt, 0.0, 0, {std::move(arg)}); }

Expr Expr::divide(Expr numerator, Expr denominator) {
    return Expr(Kind::Divide, 0.0, 0, {std::move(numerator), std::move(denominator)});
}

bool Expr::operator==(const Expr& other) const { return compare(*this, other) == 0; }

const char* to_string(Expr::Kind kind) {
    switch (kind) {
    case Expr::Kind::Sum: return "Sum";
    case Expr::Kind::Product: return "Product";
    case Expr::Kind::Power: return "Power";
    case Expr::Kind::Log: return "Log";
    case Expr::Kind::Sqrt: return "Sqrt";
    case Expr::Kind::Divide: return "Divide";
    case Expr::Kind::Var: return "Var";
    case Expr::Kind::Const: return "Const";
    }
    return "Const";
}

namespace {

int kind_rank(Expr::Kind k) {
    switch (k) {
    case Expr::Kind::Const: return 0;
    case Expr::Kind::Var: return 1;
    case Expr::Kind::Power: return 2;
    case Expr::Kind::Log: return 3;
    case Expr::Kind::Sqrt: return 4;
    case Expr::Kind::Divide: return 5;
    case Expr::Kind::Product: return 6;
    case Expr::Kind::Sum: return 7;
    }
    return 0;
}

}  // namespace

int compare(const Expr& a, const Expr& b) {
    const int ra = kind_rank(a.kind());
    const int rb = kind_rank(b.kind());
    if (ra != rb) return ra < rb ? -1 : 1;
    if (a.kind() == Expr::Kind::Const) {
        if (a.value() == b.value()) return 0;
        return a.value() < b.value() ? -1 : 1;
    }
    if (a.kind() == Expr::Kind::Var) {
        if (a.index() == b.index()) return 0;
        return a.index() < b.index() ? -1 : 1;
    }
    const auto& ca = a.children();
    const auto& cb = b.children();
    const std::size_t n = std::min(ca.size(), cb.size());
    for (std::size_t i = 0; i < n; ++i)
        if (const int c = compare(ca[i], cb[i]); c != 0) return c;
    if (ca.size() == cb.size()) return 0;
    return ca.size() < cb.size() ? -1 : 1;
}

Index node_count(const Expr& e) {
    Index n = 1;
    for (const auto& c : e.children()) n += node_count(c);
    return n;
}

// ---------------------------------------------------------------------------
// Evaluation

const char* to_string(EvalStatus status) {
    switch (status) {
    case EvalStatus::Ok: return "ok";
    case EvalStatus::LogDomain: return "log of non-positive argument";
    case EvalStatus::SqrtDomain: return "sqrt of non-positive argument";
    case EvalStatus::DivisionByZero: return "division by zero";
    case EvalStatus::NonFinite: return "non-finite value";
    }
    return "ok";
}

EvalResult eval_expr(const Expr& e, std::span<const double> x) {
    using K = Expr::Kind;
    auto finite = [](double v) -> EvalResult {
        if (!std::isfinite(v)) return {0.0, EvalStatus::NonFinite};
        return {v, EvalStatus::Ok};
    };
    switch (e.kind()) {
    case K::Const: return {e.value(), EvalStatus::Ok};
    case K::Var: {
        const auto i = static_cast<std::size_t>(e.index() - 1);
        if (i >= x.size()) throw Error(ErrorCode::InvalidConfig, "variable x" + std::to_string(e.index()) + " out of range");
        return {x[i], EvalStatus::Ok};
    }
    case K::Sum:
    case K::Product: {
        double acc = e.kind() == K::Sum ? 0.0 : 1.0;
        for (const auto& c : e.children()) {
            const auto r = eval_expr(c, x);
            if (!r.ok()) return r;
            acc = e.kind() == K::Sum ? acc + r.value : acc * r.value;
        }
        return finite(acc);
    }
    case K::Power: {
        const auto b = eval_expr(e.child(0), x);
        if (!b.ok()) return b;
        const auto p = eval_expr(e.child(1), x);
        if (!p.ok()) return p;
        return finite(std::pow(b.value, p.value));
    }
    case K::Log: {
        const auto a = eval_expr(e.child(0), x);
        if (!a.ok()) return a;
        if (a.value <= 0.0) return {0.0, EvalStatus::LogDomain};
        return finite(std::log(a.value));
    }
    case K::Sqrt: {
        const auto a = eval_expr(e.child(0), x);
        if (!a.ok()) return a;
        if (a.value <= 0.0) return {0.0, EvalStatus::SqrtDomain};
        return finite(std::sqrt(a.value));
    }
    case K::Divide: {
        const auto n = eval_expr(e.child(0), x);
        if (!n.ok()) return n;
        const auto d = eval_expr(e.child(1), x);
        if (!d.ok()) return d;
        if (std::abs(d.value) < 1e-12) return {0.0, EvalStatus::DivisionByZero};
        return finite(n.value / d.value);
    }
    }
    return {0.0, EvalStatus::NonFinite};
}

// ---------------------------------------------------------------------------
// Canonical polynomial form
//
// A canonical expression is a sum of monomials c * prod(atom^k). Atoms are
// variables or opaque canonical subtrees: Log(a), Sqrt(a), non-integer
// powers, and reciprocals Divide(1, d).

namespace {

struct Factor {
    Expr atom;
    int exp;
};

using Monomial = std::vector<Factor>;

int compare_mono(const Monomial& a, const Monomial& b) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (const int c = compare(a[i].atom, b[i].atom); c != 0) return c;
        if (a[i].exp != b[i].exp) return a[i].exp < b[i].exp ? -1 : 1;
    }
    if (a.size() == b.size()) return 0;
    return a.size() < b.size() ? -1 : 1;
}

struct MonoLess {
    bool operator()(const Monomial& a, const Monomial& b) const { return compare_mono(a, b) < 0; }
};

using Poly = std::map<Monomial, double, MonoLess>;

Poly poly_const(double c) {
    Poly p;
    if (c != 0.0) p[{}] = c;
    return p;
}

Poly poly_atom(Expr atom) {
    Poly p;
    p[{Factor{std::move(atom), 1}}] = 1.0;
    return p;
}

void poly_add_into(Poly& acc, const Poly& b, double scale = 1.0) {
    for (const auto& [m, c] : b) {
        auto it = acc.find(m);
        if (it == acc.end()) {
            acc.emplace(m, c * scale);
        } else {
            it->second += c * scale;
            if (it->second == 0.0) acc.erase(it);
        }
    }
}

Monomial mono_mul(const Monomial& a, const Monomial& b) {
    Monomial out;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && compare(a[i].atom, b[j].atom) < 0)) {
            out.push_back(a[i++]);
        } else if (i == a.size() || compare(b[j].atom, a[i].atom) < 0) {
            out.push_back(b[j++]);
        } else {
            out.push_back({a[i].atom, a[i].exp + b[j].exp});
            ++i;
            ++j;
        }
    }
    return out;
}

// a / b when every factor of b appears in a with at least its exponent.
std::optional<Monomial> mono_div(const Monomial& a, const Monomial& b) {
    Monomial out;
    std::size_t j = 0;
    for (const auto& f : a) {
        if (j < b.size() && compare(f.atom, b[j].atom) == 0) {
            if (f.exp < b[j].exp) return std::nullopt;
            if (f.exp > b[j].exp) out.push_back({f.atom, f.exp - b[j].exp});
            ++j;
        } else {
            out.push_back(f);
        }
    }
    if (j != b.size()) return std::nullopt;
    return out;
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) poly_add_into(out, Poly{{mono_mul(ma, mb), ca * cb}});
    return out;
}

bool is_reciprocal(const Expr& e) {
    return e.kind() == Expr::Kind::Divide && e.child(0).is_const() && e.child(0).value() == 1.0;
}

std::optional<double> const_value(const Poly& p) {
    if (p.empty()) return 0.0;
    if (p.size() == 1 && p.begin()->first.empty()) return p.begin()->second;
    return std::nullopt;
}

bool small_integer(double k, int limit) {
    return k == std::floor(k) && k >= 0.0 && k <= limit;
}

Poly to_poly(const Expr& e, const SimplifyOptions& opt);
Expr from_poly(const Poly& p, const SimplifyOptions& opt);

Poly to_poly(const Expr& e, const SimplifyOptions& opt) {
    using K = Expr::Kind;
    switch (e.kind()) {
    case K::Const: return poly_const(e.value());
    case K::Var: return poly_atom(e);
    case K::Sum: {
        Poly acc;
        for (const auto& c : e.children()) poly_add_into(acc, to_poly(c, opt));
        return acc;
    }
    case K::Product: {
        Poly acc = poly_const(1.0);
        for (const auto& c : e.children()) acc = poly_mul(acc, to_poly(c, opt));
        return acc;
    }
    case K::Power: {
        const Poly ex = to_poly(e.child(1), opt);
        const auto k = const_value(ex);
        if (k && small_integer(*k, 16)) {
            const Poly base = to_poly(e.child(0), opt);
            Poly acc = poly_const(1.0);
            for (int i = 0; i < static_cast<int>(*k); ++i) acc = poly_mul(acc, base);
            return acc;
        }
        const Poly bp = to_poly(e.child(0), opt);
        const auto bc = const_value(bp);
        if (k && bc) {
            const double v = std::pow(*bc, *k);
            if (std::isfinite(v)) return poly_const(v);
        }
        Expr base = from_poly(bp, opt);
        if (k && base.kind() == K::Power && base.child(1).is_const()) {
            // (b^p)^q -> b^(p q)
            return to_poly(Expr::power(base.child(0), base.child(1).value() * *k), opt);
        }
        return poly_atom(Expr::power(std::move(base), from_poly(ex, opt)));
    }
    case K::Log: {
        const Poly ap = to_poly(e.child(0), opt);
        if (const auto c = const_value(ap); c && *c != 0.0) {
            // The network keeps only the real part of a complex log: ln|c|.
            return poly_const(std::log(std::abs(*c)));
        }
        return poly_atom(Expr::log(from_poly(ap, opt)));
    }
    case K::Sqrt: {
        const Poly ap = to_poly(e.child(0), opt);
        if (const auto c = const_value(ap)) {
            // Real part of the principal root: 0 for negative constants.
            return poly_const(*c > 0.0 ? std::sqrt(*c) : 0.0);
        }
        if (ap.size() == 1 && ap.begin()->second > 0.0 && ap.begin()->second != 1.0) {
            // sqrt(c m) = sqrt(c) sqrt(m) for c > 0
            Poly unit{{ap.begin()->first, 1.0}};
            Poly out;
            poly_add_into(out, poly_atom(Expr::sqrt(from_poly(unit, opt))), std::sqrt(ap.begin()->second));
            return out;
        }
        return poly_atom(Expr::sqrt(from_poly(ap, opt)));
    }
    case K::Divide: {
        const Poly num = to_poly(e.child(0), opt);
        const Poly den = to_poly(e.child(1), opt);
        if (const auto c = const_value(den); c && *c != 0.0) {
            Poly out;
            poly_add_into(out, num, 1.0 / *c);
            return out;
        }
        if (den.size() == 1 && !num.empty()) {
            // Cancel a monomial denominator that divides every numerator term.
            const auto& [dm, dc] = *den.begin();
            Poly out;
            bool divides = true;
            for (const auto& [m, c] : num) {
                const auto q = mono_div(m, dm);
                if (!q) {
                    divides = false;
                    break;
                }
                poly_add_into(out, Poly{{*q, c / dc}});
            }
            if (divides) return out;
        }
        return poly_mul(num, poly_atom(Expr::divide(Expr::constant(1.0), from_poly(den, opt))));
    }
    }
    return {};
}

Expr factor_expr(const Factor& f) {
    if (f.exp == 1) return f.atom;
    return Expr::power(f.atom, static_cast<double>(f.exp));
}

Expr term_expr(double c, const Monomial& mono) {
    std::vector<Expr> factors;
    for (const auto& f : mono) factors.push_back(factor_expr(f));
    if (factors.empty()) return Expr::constant(c);
    if (c == 1.0) return Expr::product(std::move(factors));
    factors.insert(factors.begin(), Expr::constant(c));
    return Expr::product(std::move(factors));
}

struct SortedTerm {
    int category = 0;            // 0 variable monomial, 1 other, 2 constant
    std::vector<int> exponents;  // by variable index, for category 0
    Expr expr = Expr::constant(0.0);
};

bool term_less(const SortedTerm& a, const SortedTerm& b) {
    if (a.category != b.category) return a.category < b.category;
    if (a.category == 0) {
        const std::size_t n = std::max(a.exponents.size(), b.exponents.size());
        for (std::size_t i = 0; i < n; ++i) {
            const int ea = i < a.exponents.size() ? a.exponents[i] : 0;
            const int eb = i < b.exponents.size() ? b.exponents[i] : 0;
            if (ea != eb) return ea > eb;
        }
    }
    return compare(a.expr, b.expr) < 0;
}

Expr from_poly(const Poly& p, const SimplifyOptions& opt) {
    std::vector<SortedTerm> terms;
    std::vector<std::pair<Expr, Poly>> quotients;  // denominator -> numerator

    for (const auto& [mono, c] : p) {
        if (std::abs(c) < opt.coeff_drop) continue;

        // c * vars * Divide(1, d) joins the numerator over d.
        int recips = 0;
        bool only_vars = true;
        for (const auto& f : mono) {
            if (is_reciprocal(f.atom) && f.exp == 1)
                ++recips;
            else if (f.atom.kind() != Expr::Kind::Var)
                only_vars = false;
        }
        if (recips == 1 && only_vars) {
            Monomial rest;
            Expr den = Expr::constant(0.0);
            for (const auto& f : mono) {
                if (is_reciprocal(f.atom) && f.exp == 1)
                    den = f.atom.child(1);
                else
                    rest.push_back(f);
            }
            auto it = std::find_if(quotients.begin(), quotients.end(),
                                   [&](const auto& q) { return compare(q.first, den) == 0; });
            if (it == quotients.end()) {
                quotients.emplace_back(den, Poly{});
                it = quotients.end() - 1;
            }
            poly_add_into(it->second, Poly{{rest, c}});
            continue;
        }

        SortedTerm t;
        t.expr = term_expr(c, mono);
        if (mono.empty()) {
            t.category = 2;
        } else {
            bool vars = true;
            for (const auto& f : mono) vars = vars && f.atom.kind() == Expr::Kind::Var;
            t.category = vars ? 0 : 1;
            if (vars)
                for (const auto& f : mono) {
                    const auto i = static_cast<std::size_t>(f.atom.index());
                    if (t.exponents.size() <= i) t.exponents.resize(i + 1, 0);
                    t.exponents[i] = f.exp;
                }
        }
        terms.push_back(std::move(t));
    }

    for (auto& [den, num] : quotients) {
        Expr n = from_poly(num, opt);
        if (n.is_const() && n.value() == 0.0) continue;
        SortedTerm t;
        t.category = 1;
        t.expr = Expr::divide(std::move(n), den);
        terms.push_back(std::move(t));
    }

    std::sort(terms.begin(), terms.end(), term_less);
    std::vector<Expr> out;
    out.reserve(terms.size());
    for (auto& t : terms) out.push_back(std::move(t.expr));
    return Expr::sum(std::move(out));
}

}  // namespace

Expr simplify(const Expr& e, const SimplifyOptions& options) {
    return from_poly(to_poly(e, options), options);
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string format_number(double v, int precision) {
    if (v == 0.0) return "0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (!s.empty() && s.back() == '0') s.pop_back();
        if (!s.empty() && s.back() == '.') s.push_back('0');
    }
    if (s == "-0.0") s = "0.0";
    return s;
}

std::string format_exponent(double v, int precision) {
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        std::ostringstream os;
        os << static_cast<long long>(v);
        return os.str();
    }
    return format_number(v, precision);
}

bool is_negative_term(const Expr& e) {
    if (e.is_const()) return e.value() < 0.0;
    if (e.kind() == Expr::Kind::Product) return e.child(0).is_const() && e.child(0).value() < 0.0;
    return false;
}

Expr negate_leading(const Expr& e) {
    if (e.is_const()) return Expr::constant(-e.value());
    std::vector<Expr> f = e.children();
    f[0] = Expr::constant(-f[0].value());
    // Keep an explicit unit coefficient so that "-1.0*x1" round-trips as "1.0*x1".
    return Expr::product(std::move(f));
}

std::string render_impl(const Expr& e, int precision);

std::string wrap(const Expr& e, int precision, bool need) {
    const std::string s = render_impl(e, precision);
    return need ? "(" + s + ")" : s;
}

bool atomic(const Expr& e) {
    return e.kind() == Expr::Kind::Var || (e.is_const() && e.value() >= 0.0) ||
           e.kind() == Expr::Kind::Log || e.kind() == Expr::Kind::Sqrt;
}

std::string render_impl(const Expr& e, int precision) {
    using K = Expr::Kind;
    switch (e.kind()) {
    case K::Const: return format_number(e.value(), precision);
    case K::Var: return "x" + std::to_string(e.index());
    case K::Sum: {
        std::string s;
        bool first = true;
        for (const auto& c : e.children()) {
            if (first) {
                s = render_impl(c, precision);
                first = false;
            } else if (is_negative_term(c)) {
                s += " - " + render_impl(negate_leading(c), precision);
            } else {
                s += " + " + render_impl(c, precision);
            }
        }
        return s;
    }
    case K::Product: {
        std::string s;
        for (std::size_t i = 0; i < e.children().size(); ++i) {
            const auto& c = e.child(i);
            const bool need = c.kind() == K::Sum || c.kind() == K::Divide || (i > 0 && c.is_const() && c.value() < 0.0);
            if (i) s += "*";
            s += wrap(c, precision, need);
        }
        return s;
    }
    case K::Power: {
        const auto& ex = e.child(1);
        const std::string exs = ex.is_const() ? format_exponent(ex.value(), precision) : "(" + render_impl(ex, precision) + ")";
        return wrap(e.child(0), precision, !atomic(e.child(0))) + "^" + exs;
    }
    case K::Log: return "log(" + render_impl(e.child(0), precision) + ")";
    case K::Sqrt: return "sqrt(" + render_impl(e.child(0), precision) + ")";
    case K::Divide: {
        const auto& n = e.child(0);
        const auto& d = e.child(1);
        const bool wn = n.kind() == K::Sum || n.kind() == K::Divide;
        return wrap(n, precision, wn) + "/" + wrap(d, precision, !atomic(d));
    }
    }
    return "";
}

}  // namespace

std::string render(const Expr& e, int precision) { return render_impl(e, precision); }

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const Expr& e) {
    nlohmann::json j;
    j["node"] = to_string(e.kind());
    if (e.is_const()) {
        j["value"] = e.value();
    } else if (e.kind() == Expr::Kind::Var) {
        j["index"] = e.index();
    } else {
        j["children"] = nlohmann::json::array();
        for (const auto& c : e.children()) j["children"].push_back(to_json(c));
    }
    return j;
}

Expr expr_from_json(const nlohmann::json& j) {
    const std::string node = j.at("node").get<std::string>();
    if (node == "Const") return Expr::constant(j.at("value").get<double>());
    if (node == "Var") return Expr::var(j.at("index").get<int>());
    std::vector<Expr> ch;
    for (const auto& c : j.at("children")) ch.push_back(expr_from_json(c));
    auto need = [&](std::size_t n) {
        if (ch.size() != n) throw Error(ErrorCode::Io, node + " expects " + std::to_string(n) + " children");
    };
    if (node == "Sum") return Expr::sum(std::move(ch));
    if (node == "Product") return Expr::product(std::move(ch));
    if (node == "Power") { need(2); return Expr::power(ch[0], ch[1]); }
    if (node == "Log") { need(1); return Expr::log(ch[0]); }
    if (node == "Sqrt") { need(1); return Expr::sqrt(ch[0]); }
    if (node == "Divide") { need(2); return Expr::divide(ch[0], ch[1]); }
    throw Error(ErrorCode::Io, "unknown expression node '" + node + "'");
}

// ---------------------------------------------------------------------------
// Polynomial queries

namespace {

// Coefficients c[k] of x_var^k, or nullopt if e is not univariate polynomial in x_var.
std::optional<std::vector<double>> univariate_coefficients(const Expr& e, int var) {
    const Poly p = to_poly(e, SimplifyOptions{0.0});
    std::vector<double> c;
    for (const auto& [mono, coef] : p) {
        int k = 0;
        for (const auto& f : mono) {
            if (f.atom.kind() != Expr::Kind::Var || f.atom.index() != var) return std::nullopt;
            k = f.exp;
        }
        if (static_cast<int>(c.size()) <= k) c.resize(static_cast<std::size_t>(k) + 1, 0.0);
        c[static_cast<std::size_t>(k)] += coef;
    }
    return c;
}

}  // namespace

int polynomial_degree(const Expr& e, int var) {
    const Poly p = to_poly(e, SimplifyOptions{0.0});
    int degree = 0;
    for (const auto& [mono, coef] : p) {
        int k = 0;
        for (const auto& f : mono) {
            if (f.atom.kind() != Expr::Kind::Var) return -1;
            if (f.atom.index() == var) k = f.exp;
        }
        degree = std::max(degree, k);
    }
    return degree;
}

std::vector<double> real_roots(const Expr& e, int var) {
    const auto c = univariate_coefficients(e, var);
    if (!c) return {};
    auto coef = [&](std::size_t k) { return k < c->size() ? (*c)[k] : 0.0; };
    if (c->size() > 3) return {};
    const double a = coef(2), b = coef(1), k0 = coef(0);
    if (a == 0.0) {
        if (b == 0.0) return {};
        return {-k0 / b};
    }
    const double disc = b * b - 4.0 * a * k0;
    if (disc < 0.0) return {};
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    std::vector<double> roots{q / a};
    if (q != 0.0) roots.push_back(k0 / q);
    std::sort(roots.begin(), roots.end());
    return roots;
}

std::vector<Expr> find_divides(const Expr& e) {
    std::vector<Expr> out;
    if (e.kind() == Expr::Kind::Divide) out.push_back(e);
    for (const auto& c : e.children()) {
        auto sub = find_divides(c);
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reported form

namespace {

Expr round_all(const Expr& e, double scale) {
    using K = Expr::Kind;
    switch (e.kind()) {
    case K::Const: return Expr::constant(std::round(e.value() * scale) / scale);
    case K::Var: return e;
    case K::Power: return Expr::power(round_all(e.child(0), scale), e.child(1));
    case K::Log: return Expr::log(round_all(e.child(0), scale));
    case K::Sqrt: return Expr::sqrt(round_all(e.child(0), scale));
    case K::Divide: return Expr::divide(round_all(e.child(0), scale), round_all(e.child(1), scale));
    case K::Sum:
    case K::Product: {
        std::vector<Expr> ch;
        for (const auto& c : e.children()) ch.push_back(round_all(c, scale));
        return e.kind() == K::Sum ? Expr::sum(std::move(ch)) : Expr::product(std::move(ch));
    }
    }
    return e;
}

}  // namespace

Expr round_coefficients(const Expr& e, int decimals) {
    const double scale = std::pow(10.0, decimals);
    // Simplify first so that factors pulled out of roots are rounded as
    // coefficients, then once more to fold what rounding zeroed.
    return simplify(round_all(simplify(e), scale));
}

// ---------------------------------------------------------------------------
// Extraction

Expr extract(const Network& net, const ExtractOptions& options) {
    std::string residue;
    for (Index e = 0; e < net.parameter_count(); ++e) {
        if (!net.active()[e] || std::abs(net.weight(e).imag()) <= options.im_tolerance) continue;
        const EdgeInfo info = net.edge_info(e);
        residue += " edge " + std::to_string(e) + " (layer " + std::to_string(info.layer) + ", " +
                   std::to_string(info.source) + "->" + std::to_string(info.target) +
                   ", Im=" + std::to_string(net.weight(e).imag()) + ")";
    }
    if (!residue.empty()) throw Error(ErrorCode::ImaginaryResidue, "imaginary weight residue:" + residue);
    if (net.active_edge_count() == 0 || !has_output_path(net))
        throw Error(ErrorCode::DegenerateModel, "no active path to the output");

    const SimplifyOptions sopt{options.coeff_drop};
    std::vector<Expr> raw;
    for (Index i = 0; i < net.input_dim(); ++i) raw.push_back(Expr::var(static_cast<int>(i) + 1));

    auto weighted_sum = [&](const std::vector<Expr>& sources, auto edge_of) {
        std::vector<Expr> terms;
        for (std::size_t i = 0; i < sources.size(); ++i) {
            const Index e = edge_of(static_cast<Index>(i));
            if (!net.active()[e]) continue;
            terms.push_back(Expr::product({Expr::constant(net.weight(e).real()), sources[i]}));
        }
        return simplify(Expr::sum(std::move(terms)), sopt);
    };

    std::vector<Expr> prev;
    for (Index l = 0; l < net.layer_count(); ++l) {
        const LayerSpec& spec = net.layer(l);
        std::vector<Expr> sources = prev;
        if (l == 0)
            sources = raw;
        else if (net.skip_inputs())
            sources.insert(sources.end(), raw.begin(), raw.end());

        std::vector<Expr> sums;
        for (Index j = 0; j < spec.summation_count(); ++j) {
            if (spec.is_constant(j)) {
                const Index b = net.bias_edge(l, j);
                sums.push_back(Expr::constant(net.active()[b] ? net.weight(b).real() : 0.0));
                continue;
            }
            sums.push_back(weighted_sum(sources, [&](Index i) { return net.summation_edge(l, i, j); }));
        }

        // Sign of a branched argument over the probe domain: +1 all positive,
        // -1 all negative, 0 mixed or unknown.
        auto domain_sign = [&](const Expr& z) {
            if (options.domain.rows() == 0 || options.domain.cols() != net.input_dim()) return 0;
            bool pos = false, neg = false;
            std::vector<double> row(static_cast<std::size_t>(net.input_dim()));
            for (Index i = 0; i < options.domain.rows(); ++i) {
                for (Index j = 0; j < net.input_dim(); ++j) row[static_cast<std::size_t>(j)] = options.domain(i, j);
                const EvalResult r = eval_expr(z, row);
                if (!r.ok()) continue;
                if (r.value > 0.0) pos = true;
                if (r.value < 0.0) neg = true;
            }
            if (pos == neg) return 0;
            return pos ? 1 : -1;
        };
        const ArrayXb used = net.activation_used(l);

        std::vector<Expr> acts;
        const Index m = spec.unary_count();
        for (Index j = 0; j < m; ++j) {
            const Expr& z = sums[static_cast<std::size_t>(j)];
            switch (spec.unary_ops[static_cast<std::size_t>(j)]) {
            case OperatorKind::Identity:
            case OperatorKind::Constant: acts.push_back(z); break;
            case OperatorKind::Square: acts.push_back(simplify(Expr::power(z, 2.0), sopt)); break;
            case OperatorKind::Log:
                if (used[j] && domain_sign(z) < 0)
                    acts.push_back(simplify(Expr::log(Expr::product({Expr::constant(-1.0), z})), sopt));
                else
                    acts.push_back(simplify(Expr::log(z), sopt));
                break;
            case OperatorKind::Sqrt:
                if (used[j] && domain_sign(z) < 0)
                    acts.push_back(Expr::constant(0.0));
                else
                    acts.push_back(simplify(Expr::sqrt(z), sopt));
                break;
            default: throw Error(ErrorCode::InvalidConfig, "binary operator in unary slot");
            }
        }
        for (Index k = 0; k < spec.binary_count(); ++k) {
            const Expr& x = sums[static_cast<std::size_t>(m + 2 * k)];
            const Expr& y = sums[static_cast<std::size_t>(m + 2 * k + 1)];
            if (spec.binary_ops[static_cast<std::size_t>(k)] == OperatorKind::Multiply)
                acts.push_back(simplify(Expr::product({x, y}), sopt));
            else
                acts.push_back(simplify(Expr::divide(x, y), sopt));
        }
        prev = std::move(acts);
    }

    std::vector<Expr> sources = prev;
    if (net.skip_inputs()) sources.insert(sources.end(), raw.begin(), raw.end());
    return weighted_sum(sources, [&](Index i) { return net.output_edge(i); });
}

}  // namespace ceql
