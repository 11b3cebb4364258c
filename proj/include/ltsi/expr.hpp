#pragma once

// Named coefficient expressions (t,x) -> real for SDELT spec files.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ltsi/error.hpp"
#include "ltsi/measure.hpp"

namespace ltsi {

/// A coefficient with its time derivative. `time_dependent` is false only
/// when f_t vanishes identically.
struct Expr {
    TimeSpaceFn f;
    TimeSpaceFn f_t;
    bool time_dependent = false;
    bool zero = false;
    nlohmann::json source;

    double operator()(double t, double x) const { return f(t, x); }
    [[nodiscard]] double dt(double t, double x) const { return f_t ? f_t(t, x) : 0.0; }
};

namespace expr {

inline Expr constant(double c) {
    return {[c](double, double) { return c; }, [](double, double) { return 0.0; }, false, c == 0.0,
            {{"kind", "const"}, {"value", c}}};
}

/// Σ c_k x^k.
inline Expr poly_x(std::vector<double> c) {
    nlohmann::json src{{"kind", "poly_x"}, {"coeffs", c}};
    bool zero = std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; });
    return {[c](double, double x) {
                double s = 0.0;
                for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
                return s;
            },
            [](double, double) { return 0.0; }, false, zero, std::move(src)};
}

/// scale · exp(rate · t).
inline Expr exp_t(double scale, double rate) {
    return {[=](double t, double) { return scale * std::exp(rate * t); },
            [=](double t, double) { return scale * rate * std::exp(rate * t); }, rate != 0.0, scale == 0.0,
            {{"kind", "exp_t"}, {"scale", scale}, {"rate", rate}}};
}

/// offset + amp · sin(freq · x).
inline Expr sin_x(double amp, double freq, double offset = 0.0) {
    return {[=](double, double x) { return offset + amp * std::sin(freq * x); }, [](double, double) { return 0.0; },
            false, amp == 0.0 && offset == 0.0,
            {{"kind", "sin_x"}, {"amp", amp}, {"freq", freq}, {"offset", offset}}};
}

/// offset + amp · cos(freq · x).
inline Expr cos_x(double amp, double freq, double offset = 0.0) {
    return {[=](double, double x) { return offset + amp * std::cos(freq * x); }, [](double, double) { return 0.0; },
            false, amp == 0.0 && offset == 0.0,
            {{"kind", "cos_x"}, {"amp", amp}, {"freq", freq}, {"offset", offset}}};
}

/// offset + amp · tanh(k · x).
inline Expr tanh_x(double amp, double k, double offset = 0.0) {
    return {[=](double, double x) { return offset + amp * std::tanh(k * x); }, [](double, double) { return 0.0; },
            false, amp == 0.0 && offset == 0.0,
            {{"kind", "tanh_x"}, {"amp", amp}, {"k", k}, {"offset", offset}}};
}

inline Expr product(const Expr& a, const Expr& b) {
    return {[a, b](double t, double x) { return a(t, x) * b(t, x); },
            [a, b](double t, double x) { return a.dt(t, x) * b(t, x) + a(t, x) * b.dt(t, x); },
            a.time_dependent || b.time_dependent, a.zero || b.zero,
            {{"kind", "product"}, {"factors", {a.source, b.source}}}};
}

inline Expr sum(const Expr& a, const Expr& b) {
    return {[a, b](double t, double x) { return a(t, x) + b(t, x); },
            [a, b](double t, double x) { return a.dt(t, x) + b.dt(t, x); },
            a.time_dependent || b.time_dependent, a.zero && b.zero,
            {{"kind", "sum"}, {"terms", {a.source, b.source}}}};
}

/// Arbitrary callable with a hand-supplied time derivative; not
/// serializable beyond its label.
inline Expr custom(std::string label, TimeSpaceFn f, TimeSpaceFn f_t = {}) {
    const bool td = static_cast<bool>(f_t);
    if (!f_t) f_t = [](double, double) { return 0.0; };
    return {std::move(f), std::move(f_t), td, false, {{"kind", "custom"}, {"label", std::move(label)}}};
}

/// Builds a catalog expression from JSON: a bare number is a constant,
/// otherwise {"kind": ..., parameters}.
inline Expr from_json(const nlohmann::json& j) {
    if (j.is_number()) return constant(j.get<double>());
    if (!j.is_object() || !j.contains("kind")) throw ContractError("expression must be a number or an object with \"kind\"");
    const auto kind = j.at("kind").get<std::string>();
    auto num = [&](const char* key, double dflt) { return j.contains(key) ? j.at(key).get<double>() : dflt; };
    if (kind == "const") return constant(num("value", 0.0));
    if (kind == "poly_x") return poly_x(j.at("coeffs").get<std::vector<double>>());
    if (kind == "exp_t") return exp_t(num("scale", 1.0), num("rate", -1.0));
    if (kind == "sin_x") return sin_x(num("amp", 1.0), num("freq", 1.0), num("offset", 0.0));
    if (kind == "cos_x") return cos_x(num("amp", 1.0), num("freq", 1.0), num("offset", 0.0));
    if (kind == "tanh_x") return tanh_x(num("amp", 1.0), num("k", 1.0), num("offset", 0.0));
    if (kind == "product" || kind == "sum") {
        const auto& parts = j.at(kind == "product" ? "factors" : "terms");
        if (!parts.is_array() || parts.size() < 2) throw ContractError(kind + " needs at least two operands");
        Expr acc = from_json(parts[0]);
        for (std::size_t i = 1; i < parts.size(); ++i) {
            acc = kind == "product" ? product(acc, from_json(parts[i])) : sum(acc, from_json(parts[i]));
        }
        return acc;
    }
    throw ContractError("unknown expression kind: " + kind);
}

inline std::vector<std::string> catalog() {
    return {"const", "poly_x", "exp_t", "sin_x", "cos_x", "tanh_x", "product", "sum"};
}

}  // namespace expr
}  // namespace ltsi
