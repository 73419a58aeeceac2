#pragma once

// JSON serialization: factored coefficients (the DSL's structural
// alternative), spiral catalogs, verification reports, problem specs.

#include <json.hpp>

#include "qdiff/coefficient.hpp"
#include "qdiff/inhomogeneous.hpp"
#include "qdiff/operators.hpp"
#include "qdiff/parser.hpp"
#include "qdiff/solution.hpp"
#include "qdiff/verify.hpp"

namespace qdiff {

using json = nlohmann::json;

inline json to_json(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

inline cplx cplx_from_json(const json& j) {
    if (j.is_number()) return cplx(j.get<double>(), 0.0);
    return cplx(j.value("re", 0.0), j.value("im", 0.0));
}

inline json to_json(const ZeroFamily& fam) {
    json pts = json::array();
    for (const auto& p : fam.points)
        pts.push_back({{"re", p.location.real()}, {"im", p.location.imag()}, {"mult", p.multiplicity}});
    json out{{"points", pts}};
    if (!fam.builtins.empty()) {
        json bs = json::array();
        for (const auto& b : fam.builtins)
            bs.push_back({{"name", b.name()},
                          {"scale", b.scale},
                          {"genus", b.genus()},
                          {"power", b.power},
                          {"truncation", b.truncation_count}});
        out["builtins"] = bs;
    }
    return out;
}

inline ZeroFamily family_from_json(const json& j) {
    ZeroFamily fam;
    for (const auto& p : j.value("points", json::array()))
        fam.points.push_back({cplx_from_json(p), p.value("mult", 1)});
    for (const auto& b : j.value("builtins", json::array())) {
        const std::string name = b.at("name").get<std::string>();
        BuiltinKind kind;
        if (name == "sin") kind = BuiltinKind::Sin;
        else if (name == "cos") kind = BuiltinKind::Cos;
        else if (name == "gamma_poles") kind = BuiltinKind::GammaPoles;
        else throw InvalidInput("unknown builtin family: " + name);
        fam.builtins.push_back(
            {kind, b.value("scale", 1.0), b.value("power", 1), b.value("truncation", 200)});
    }
    return fam;
}

inline json to_json(const FactoredForm& f) {
    json out{{"alpha", to_json(f.alpha)}, {"mu0", f.mu0}};
    out["zeros"] = to_json(f.zeros);
    out["poles"] = to_json(f.poles);
    if (!f.exp_part.is_zero()) {
        json g = json::array();
        for (const auto& c : f.exp_part.coeffs) g.push_back(to_json(c));
        out["exp"] = g;
    }
    return out;
}

inline FactoredForm factored_from_json(const json& j) {
    FactoredForm f;
    f.alpha = cplx_from_json(j.at("alpha"));
    f.mu0 = j.value("mu0", 0);
    if (j.contains("zeros")) f.zeros = family_from_json(j.at("zeros"));
    if (j.contains("poles")) f.poles = family_from_json(j.at("poles"));
    if (j.contains("exp")) {
        for (const auto& c : j.at("exp")) f.exp_part.coeffs.push_back(cplx_from_json(c));
    }
    f.validate();
    return f;
}

// accepts either a DSL string or the structural JSON form
inline Coefficient coefficient_from_json(const json& j) {
    if (j.is_string()) return parse_coefficient(j.get<std::string>());
    if (j.contains("v") || j.contains("outer") || j.contains("inner")) {
        LaurentFactoredForm lf;
        lf.alpha = cplx_from_json(j.at("alpha"));
        lf.v = j.value("v", 0);
        if (j.contains("outer")) lf.outer = factored_from_json(j.at("outer"));
        if (j.contains("inner")) lf.inner = factored_from_json(j.at("inner"));
        lf.validate();
        return lf;
    }
    return factored_from_json(j);
}

inline json to_json(const Coefficient& c) {
    if (std::holds_alternative<FactoredForm>(c)) return to_json(std::get<FactoredForm>(c));
    const auto& lf = std::get<LaurentFactoredForm>(c);
    return json{{"alpha", to_json(lf.alpha)},
                {"v", lf.v},
                {"outer", to_json(lf.outer)},
                {"inner", to_json(lf.inner)}};
}

inline json to_json(const SpiralCatalog& cat) {
    json arr = json::array();
    for (const auto& s : cat.spirals)
        arr.push_back({{"base", to_json(s.base)},
                       {"direction", direction_name(s.direction)},
                       {"order", s.order}});
    return arr;
}

inline json to_json(const ResidualReport& r) {
    return json{{"max_rel_residual", r.max_rel_residual},
                {"worst_point", to_json(r.worst_point)},
                {"points_tested", r.points_tested},
                {"points_skipped", r.points_skipped}};
}

inline json to_json(const WindingResult& w) {
    return json{{"center", to_json(w.center)},
                {"radius", w.radius},
                {"raw_integral", to_json(w.raw_integral)},
                {"rounded_count", w.rounded_count},
                {"distance_to_integer", w.distance_to_integer}};
}

inline json to_json(const CatalogCheckReport& rep) {
    auto point_list = [](const std::vector<CatalogPointCheck>& v) {
        json arr = json::array();
        for (const auto& c : v)
            arr.push_back({{"point", to_json(c.point)},
                           {"expected", c.expected},
                           {"counted", c.counted},
                           {"pass", c.pass},
                           {"distance_to_integer", c.distance_to_integer}});
        return arr;
    };
    return json{{"all_pass", rep.all_pass},
                {"spiral_points", point_list(rep.spiral_points)},
                {"probes", point_list(rep.probes)}};
}

inline RationalFunction rational_from_json(const json& j) {
    std::vector<cplx> num, den;
    for (const auto& c : j.at("num")) num.push_back(cplx_from_json(c));
    for (const auto& c : j.at("den")) den.push_back(cplx_from_json(c));
    return RationalFunction(Polynomial(std::move(num)), Polynomial(std::move(den)));
}

// Problem spec: q plus one of
//   {"m": <coefficient>}                                homogeneous
//   {"m": <coefficient>, "r": {num, den}, "rho": ...}   inhomogeneous
//   {"operator": {"coeffs": [...]}, "factors": [...]}   operator
struct ProblemSpec {
    cplx q{2.0, 0.0};
    enum class Kind { Homogeneous, Inhomogeneous, Operator } kind = Kind::Homogeneous;
    std::optional<Coefficient> m; // absent: m identically 0 (inhomogeneous only)
    RationalFunction r;
    RhoSet rhos;
    std::vector<OperatorCoefficient> op_coeffs;
    std::optional<std::vector<FirstOrderFactor>> factors;
    Annulus annulus{0.3, 3.0};
    int n_radial = 48;
    int n_angular = 48;
    TruncationPolicy tolerances{};
    unsigned seed = 42;
};

inline ProblemSpec problem_from_json(const json& j) {
    ProblemSpec p;
    p.q = cplx_from_json(j.at("q"));
    if (j.contains("annulus")) {
        p.annulus.r_min = j["annulus"].at("r_min").get<double>();
        p.annulus.r_max = j["annulus"].at("r_max").get<double>();
        if (!(p.annulus.r_min > 0.0) || !(p.annulus.r_max > p.annulus.r_min))
            throw InvalidInput("annulus requires 0 < r_min < r_max");
    }
    if (j.contains("grid")) {
        p.n_radial = j["grid"].value("n_radial", 48);
        p.n_angular = j["grid"].value("n_angular", 48);
        if (p.n_radial < 1 || p.n_angular < 1) throw InvalidInput("grid dimensions must be >= 1");
    }
    if (j.contains("tolerances"))
        p.tolerances = TruncationPolicy(j["tolerances"].value("abs_tol", 1e-14),
                                        j["tolerances"].value("max_terms", 10000));
    p.rhos.rho = j.value("rho", 0.05);
    p.rhos.rho_prime = j.value("rho_prime", 1.0);
    p.rhos.rho_second = j.value("rho_second", 1.0);
    p.seed = j.value("seed", 42u);

    if (j.contains("operator")) {
        p.kind = ProblemSpec::Kind::Operator;
        for (const auto& c : j["operator"].at("coeffs")) {
            if (c.is_object() && c.contains("num")) p.op_coeffs.push_back(rational_from_json(c));
            else {
                Coefficient parsed = coefficient_from_json(c);
                if (!std::holds_alternative<FactoredForm>(parsed))
                    throw InvalidInput("operator coefficients must be meromorphic on C");
                p.op_coeffs.push_back(std::get<FactoredForm>(parsed));
            }
        }
        if (j.contains("factors")) {
            std::vector<FirstOrderFactor> fs;
            for (const auto& f : j["factors"]) {
                FirstOrderFactor factor;
                factor.k = f.value("k", 0);
                factor.alpha = cplx_from_json(f.at("alpha"));
                if (f.contains("cofactor")) {
                    Coefficient cof = coefficient_from_json(f.at("cofactor"));
                    if (!std::holds_alternative<FactoredForm>(cof))
                        throw InvalidInput("factor cofactors must be meromorphic on C");
                    factor.cofactor = std::get<FactoredForm>(cof);
                }
                fs.push_back(std::move(factor));
            }
            p.factors = std::move(fs);
        }
        return p;
    }
    if (j.contains("r")) {
        p.kind = ProblemSpec::Kind::Inhomogeneous;
        p.r = rational_from_json(j.at("r"));
        if (j.contains("m") && !(j["m"].is_string() && j["m"].get<std::string>() == "0"))
            p.m = coefficient_from_json(j.at("m"));
        return p;
    }
    p.kind = ProblemSpec::Kind::Homogeneous;
    p.m = coefficient_from_json(j.at("m"));
    return p;
}

} // namespace qdiff
