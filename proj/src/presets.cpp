#include "cloaksim/presets.hpp"

#include "cloaksim/errors.hpp"
#include "cloaksim/expr.hpp"
#include "cloaksim/homog.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cloaksim {

namespace {

double to_number(const std::string& s, const std::string& context) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used == 0 || used != s.size()) throw PreconditionError("bad number '" + s + "' in '" + context + "'");
    return v;
}

void expect_args(const PresetKey& k, std::size_t n) {
    if (k.args.size() != n) {
        std::ostringstream msg;
        msg << "preset " << k.name << " takes " << n << " argument(s), got " << k.args.size();
        throw PreconditionError(msg.str());
    }
}

CoefficientField expression_field(const std::string& text) {
    const Expression e = Expression::parse(text);
    if (e.uses("k")) throw PreconditionError("coefficient expression may not use k");
    auto scalar = [e](const Point& x, double t) {
        ExprVariables v;
        v.x = x(0);
        v.y = x(1);
        v.r = x.norm();
        v.theta = std::atan2(x(1), x(0));
        v.t = t;
        return e(v);
    };
    // Constants from a lattice over B₂ and t ∈ [−5, 5].
    double lo = INFINITY, hi = -INFINITY, lip = 0.0;
    const int n = 17;
    const double dt = 0.25;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Point x = make_point(-2.0 + 4.0 * i / (n - 1), -2.0 + 4.0 * j / (n - 1));
            if (x.norm() > 2.0) continue;
            double prev = scalar(x, -5.0);
            for (double t = -5.0; t <= 5.0 + 1e-12; t += dt) {
                const double s = scalar(x, t);
                if (!std::isfinite(s)) throw PreconditionError("expression '" + text + "' is not finite on B2");
                lo = std::min(lo, s);
                hi = std::max(hi, s);
                lip = std::max(lip, std::abs(s - prev) / dt);
                prev = s;
            }
        }
    if (!(lo > 0.0)) throw PreconditionError("expression '" + text + "' is not positive on B2");
    return isotropic_field(2, scalar, {lo, hi, lip}, "expr:" + text, e.uses("t"));
}

CoefficientField sin_field(double c) {
    std::ostringstream name;
    if (c == 1.0) name << "isotropic-sin";
    else name << "sin" << c;
    return isotropic_field(
        2, [c](const Point&, double t) { return c * (2.0 + std::sin(t)); }, {c, 3.0 * c, c}, name.str());
}

}  // namespace

PresetKey PresetKey::parse(const std::string& text) {
    PresetKey k;
    const auto open = text.find('(');
    if (open == std::string::npos) {
        k.name = text;
        if (k.name.empty()) throw PreconditionError("empty preset key");
        return k;
    }
    if (text.back() != ')') throw PreconditionError("preset key '" + text + "': missing ')'");
    k.name = text.substr(0, open);
    const std::string inner = text.substr(open + 1, text.size() - open - 2);
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) k.args.push_back(to_number(item, text));
    return k;
}

CoefficientField make_inclusion(const std::string& key) {
    if (key == "identity") return identity_field(2);
    if (key == "isotropic-sin") return sin_field(1.0);
    if (key.rfind("expr:", 0) == 0) return expression_field(key.substr(5));
    if (key.size() > 3 && key.rfind("sin", 0) == 0) {
        const double c = to_number(key.substr(3), key);
        if (!(c > 0.0)) throw PreconditionError("inclusion scale must be positive: " + key);
        return sin_field(c);
    }
    if (key.size() > 1 && key.back() == 'I') {
        const double c = to_number(key.substr(0, key.size() - 1), key);
        if (!(c > 0.0)) throw PreconditionError("inclusion scale must be positive: " + key);
        return constant_field(c * identity_tensor(2), key);
    }
    throw PreconditionError("unknown inclusion '" + key + "'");
}

CoefficientField make_preset(const std::string& key, const std::string& inclusion) {
    const PresetKey k = PresetKey::parse(key);
    if (k.name == "regular-cloak") {
        expect_args(k, 1);
        const double r = k.args[0];
        auto shell = pushforward(identity_field(2), regular_blowup(r, 2));
        auto f = piecewise_field(make_inclusion(inclusion), shell, ball_region(1.0));
        f.name = key;
        return f;
    }
    if (k.name == "truncated-singular-cloak") {
        expect_args(k, 1);
        auto f = piecewise_field(make_inclusion(inclusion), truncated_singular_cloak(k.args[0], 2),
                                 ball_region(1.0));
        f.name = key;
        return f;
    }
    if (k.name == "homogenized-radial" || k.name == "isotropic-cloak") {
        expect_args(k, k.name == "homogenized-radial" ? 2 : 3);
        RadialCloakSpec s;
        s.big_r = k.args[0];
        s.eta = k.args[1];
        if (k.args.size() == 3) s.eps = k.args[2];
        IsotropicCloak cloak(s);
        std::optional<CoefficientField> inc;
        if (inclusion != "identity") inc = make_inclusion(inclusion);
        auto f = k.name == "homogenized-radial" ? cloak.target(inc) : cloak.field(inc);
        f.name = key;
        return f;
    }
    if (k.name == "laminate") {
        expect_args(k, 3);
        const double a = k.args[0], b = k.args[1], eps = k.args[2];
        if (!(a > 0.0) || !(b > 0.0) || !(eps > 0.0))
            throw PreconditionError("laminate values and period must be positive");
        auto f = isotropic_field(
            2,
            [a, b, eps](const Point& x, double) {
                const double s = x(0) / eps - std::floor(x(0) / eps);
                return s < 0.5 ? a : b;
            },
            {std::min(a, b), std::max(a, b), 0.0}, key, false);
        return f;
    }
    if (!k.args.empty()) throw PreconditionError("unknown preset '" + key + "'");
    return make_inclusion(key);
}

std::vector<std::string> preset_names() {
    return {"identity",
            "isotropic-sin",
            "regular-cloak(r)",
            "truncated-singular-cloak(rho)",
            "homogenized-radial(R,eta)",
            "isotropic-cloak(R,eta,eps)",
            "laminate(a,b,eps)",
            "<c>I",
            "sin<c>",
            "expr:<scalar>"};
}

DiffMap make_map(const std::string& key) {
    const auto colon = key.find(':');
    const std::string name = key.substr(0, colon);
    const bool has_arg = colon != std::string::npos;
    if (name == "identity" && !has_arg) return identity_map(2);
    if (name == "singular" && !has_arg) return singular_map(2);
    if (name == "regular" && has_arg) return regular_blowup(to_number(key.substr(colon + 1), key), 2);
    if (name == "dilation" && has_arg) return dilation_map(2, to_number(key.substr(colon + 1), key));
    throw PreconditionError("unknown map '" + key + "'");
}

}  // namespace cloaksim
