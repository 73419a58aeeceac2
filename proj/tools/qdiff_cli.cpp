// qdiff: construct explicit meromorphic solutions of linear q-difference
// equations, predict their zero/pole spirals, and verify both numerically.
//
//   qdiff solve    --problem spec.json [--out catalog.json]
//   qdiff verify   --problem spec.json [--out report.json] [--tol 1e-6]
//   qdiff polygon  --problem spec.json
//   qdiff grid     --problem spec.json --out grid.csv
//   qdiff selftest
//
// Exit codes: 0 pass, 1 verification failure, 2 usage/spec error.

#include <CLI11.hpp>

#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include "qdiff/io.hpp"
#include "qdiff/qdiff.hpp"

using namespace qdiff;

namespace {

json load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open problem file: " + path);
    json j;
    in >> j;
    return j;
}

void write_or_print(const json& out, const std::string& path) {
    if (path.empty()) {
        std::cout << out.dump(2) << "\n";
        return;
    }
    std::ofstream os(path);
    os << out.dump(2) << "\n";
}

struct Solved {
    SolutionExpr expr;
    SpiralCatalog catalog;
    double captured_r_min = 0.0;
    double captured_r_max = std::numeric_limits<double>::infinity();
    std::optional<QDifferenceOperator> op; // operator problems
};

Solved run_solver(const ProblemSpec& p, const QParameter& q) {
    switch (p.kind) {
        case ProblemSpec::Kind::Homogeneous: {
            auto s = solve_homogeneous(q, *p.m, p.rhos.rho_prime, p.rhos.rho_second);
            return {s.expr, s.catalog, 0.0, std::numeric_limits<double>::infinity(), {}};
        }
        case ProblemSpec::Kind::Inhomogeneous: {
            InhomogeneousResult s = p.m ? solve_inhomogeneous(q, *p.m, p.r, p.rhos)
                                        : solve_inhomogeneous_null_m(q, p.r);
            return {s.expr, s.catalog, s.captured_r_min, s.captured_r_max, {}};
        }
        default: {
            QDifferenceOperator op{p.op_coeffs};
            op.validate();
            std::vector<FirstOrderFactor> factors;
            cplx leading = 1.0;
            if (p.factors) {
                factors = *p.factors;
            } else {
                auto af = auto_factor_constant(op);
                factors = af.factors;
                leading = af.leading;
            }
            auto rep = verify_factorization(op, factors, q, default_probe_grid(p.seed), leading);
            if (!rep.pass)
                throw InvalidInput(
                    "supplied factorization does not reproduce the operator (max rel discrepancy " +
                    std::to_string(rep.max_rel_discrepancy) + ")");
            auto cas = cascade_solve(factors, q, p.rhos);
            return {cas.expr, cas.catalog, cas.captured_r_min, cas.captured_r_max, op};
        }
    }
}

GuardSet guards_for(const ProblemSpec& p, const QParameter& q, const Solved& sol) {
    GuardSet g;
    g.catalog = merge_spirals(sol.catalog, q);
    if (p.m)
        g.extra_points = coefficient_singular_points(
            *p.m, p.annulus.r_min / (2.0 * q.abs_q()), p.annulus.r_max * 2.0 * q.abs_q());
    return g;
}

int cmd_solve(const std::string& problem_path, const std::string& out_path) {
    const json pj = load_problem(problem_path);
    const ProblemSpec p = problem_from_json(pj);
    const QParameter q(p.q);
    const Solved sol = run_solver(p, q);
    const SpiralCatalog merged = merge_spirals(sol.catalog, q);

    json out;
    out["catalog"] = to_json(sol.catalog);
    out["catalog_merged"] = to_json(merged);
    out["summary"] = {{"q", to_json(q.q())},
                      {"spirals_unmerged", sol.catalog.spirals.size()},
                      {"spirals_merged", merged.spirals.size()},
                      {"expression", sol.expr.to_string().substr(0, 400)}};
    write_or_print(out, out_path);
    std::cerr << "solved: " << sol.catalog.spirals.size() << " spirals ("
              << merged.spirals.size() << " merged)\n";
    return 0;
}

int cmd_verify(const std::string& problem_path, const std::string& out_path, double tol,
               unsigned seed) {
    const json pj = load_problem(problem_path);
    const ProblemSpec p = problem_from_json(pj);
    const QParameter q(p.q);
    const Solved sol = run_solver(p, q);
    const GuardSet guards = guards_for(p, q, sol);

    json out;
    bool pass = true;

    if (p.kind == ProblemSpec::Kind::Operator) {
        auto rep =
            operator_residual(*sol.op, q, sol.expr, p.annulus, 100, guards, p.tolerances, seed);
        out["operator_residual"] = to_json(rep);
        pass &= rep.max_rel_residual <= tol;
    } else {
        PointFn mfn = p.m ? coefficient_fn(*p.m) : PointFn([](cplx) { return cplx(0.0); });
        PointFn rfn = p.kind == ProblemSpec::Kind::Inhomogeneous
                          ? PointFn([&p](cplx x) { return p.r.eval(x); })
                          : PointFn();
        if (p.annulus.r_min <= sol.captured_r_min ||
            p.annulus.r_max * q.abs_q() >= sol.captured_r_max)
            throw AnnulusTooSmall("verification annulus exceeds the captured decomposition ring");
        auto rep =
            residual_report(q, sol.expr, mfn, rfn, p.annulus, 100, guards, p.tolerances, seed);
        out["residual"] = to_json(rep);
        pass &= rep.max_rel_residual <= tol;

        if (p.kind == ProblemSpec::Kind::Homogeneous) {
            auto cat = check_catalog(q, sol.expr, guards.catalog, p.annulus, 512, 20, seed,
                                     p.tolerances, guards.extra_points);
            out["catalog_check"] = to_json(cat);
            pass &= cat.all_pass;
        }
    }
    out["pass"] = pass;
    write_or_print(out, out_path);
    std::cerr << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

int cmd_polygon(const std::string& problem_path, const std::string& out_path) {
    const json pj = load_problem(problem_path);
    const ProblemSpec p = problem_from_json(pj);
    if (p.kind != ProblemSpec::Kind::Operator)
        throw InvalidInput("polygon requires an operator problem");
    QDifferenceOperator op{p.op_coeffs};
    auto np = newton_polygon(op);
    json out;
    out["support"] = json::array();
    for (const auto& [j, v] : np.support) out["support"].push_back({j, v});
    out["hull"] = json::array();
    for (const auto& [j, v] : np.hull_vertices) out["hull"].push_back({j, v});
    out["slopes"] = json::array();
    for (const auto& [s, mult] : np.slopes)
        out["slopes"].push_back(
            {{"num", s.num}, {"den", s.den}, {"multiplicity", mult}, {"integer", s.is_integer()}});
    write_or_print(out, out_path);
    return 0;
}

// FNV-1a over the canonical problem dump, recorded in the CSV header.
std::uint64_t spec_hash(const json& j) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

int cmd_grid(const std::string& problem_path, const std::string& out_path, unsigned seed) {
    const json pj = load_problem(problem_path);
    const ProblemSpec p = problem_from_json(pj);
    const QParameter q(p.q);
    const Solved sol = run_solver(p, q);
    const SpiralCatalog merged = merge_spirals(sol.catalog, q);
    // flag cells within half a cell of a predicted pole (or where evaluation fails)
    SpiralCatalog poles;
    for (const auto& s : merged.spirals)
        if (s.order < 0) poles.spirals.push_back(s);
    const double dlr = p.n_radial > 1 ? (std::log(p.annulus.r_max) - std::log(p.annulus.r_min)) /
                                            double(p.n_radial - 1)
                                      : 0.1;
    const double cell_rel =
        0.5 * std::hypot(dlr, 2.0 * std::numbers::pi / double(p.n_angular));

    std::ofstream os(out_path);
    if (!os) throw InvalidInput("cannot open output file: " + out_path);
    char buf[192];
    std::snprintf(buf, sizeof buf, "# qdiff grid spec_hash=%016llx seed=%u\n",
                  static_cast<unsigned long long>(spec_hash(pj)), seed);
    os << buf << "re,im,abs_y,arg_y,near_singularity\n";

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uoff(0.0, 1.0);
    for (int i = 0; i < p.n_radial; ++i) {
        const double t = p.n_radial == 1 ? 0.5 : double(i) / double(p.n_radial - 1);
        const double radius =
            std::exp(std::log(p.annulus.r_min) +
                     t * (std::log(p.annulus.r_max) - std::log(p.annulus.r_min)));
        const double offset = uoff(rng);
        for (int k = 0; k < p.n_angular; ++k) {
            const double th = 2.0 * std::numbers::pi * (double(k) + offset) / double(p.n_angular);
            const cplx x = std::polar(radius, th);
            bool near = poles.distance_to_support(q, x) <= cell_rel * std::abs(x);
            double ay = 0.0, argy = 0.0;
            if (!near) {
                try {
                    const cplx y = sol.expr.eval(q, x, p.tolerances);
                    ay = std::abs(y);
                    argy = std::arg(y);
                } catch (const Error&) {
                    near = true;
                }
            }
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d\n", x.real(), x.imag(), ay,
                          argy, near ? 1 : 0);
            os << buf;
        }
    }
    std::cerr << "wrote " << p.n_radial * p.n_angular << " grid cells\n";
    return 0;
}

int cmd_selftest() {
    int failures = 0;
    const auto report = [&](const char* name, bool ok, double worst) {
        std::printf("%-34s %s (worst %.3e)\n", name, ok ? "PASS" : "FAIL", worst);
        failures += ok ? 0 : 1;
    };

    const std::vector<cplx> qvals{cplx(2.0), cplx(3.0), cplx(1.5, 0.5)};

    // theta functional relation and triple-product agreement
    double worst_rel = 0.0, worst_prod = 0.0;
    for (cplx qv : qvals) {
        QParameter q(qv);
        std::mt19937 rng(42);
        std::uniform_real_distribution<double> ur(std::log(0.1), std::log(5.0));
        std::uniform_real_distribution<double> ua(0.0, 2.0 * std::numbers::pi);
        for (int i = 0; i < 200; ++i) {
            const cplx x = std::polar(std::exp(ur(rng)), ua(rng));
            const cplx tx = theta_eval(q, x);
            const cplx tqx = theta_eval(q, qv * x);
            worst_rel = std::max(worst_rel, std::abs(tqx + qv * x * tx) /
                                                (1.0 + std::abs(tx) * std::abs(qv * x)));
            const cplx tp = theta_product_eval(q, x);
            worst_prod = std::max(worst_prod, std::abs(tx - tp) / (1.0 + std::abs(tp)));
        }
    }
    report("theta functional relation", worst_rel <= 1e-10, worst_rel);
    report("theta series vs triple product", worst_prod <= 1e-12, worst_prod);

    // q-Pochhammer sum identity
    double worst_l4 = 0.0;
    for (cplx qv : qvals) {
        QParameter q(qv);
        for (int n = 0; n <= 30; ++n) worst_l4 = std::max(worst_l4, pochhammer_sum_identity_residual(q, n));
    }
    report("q-Pochhammer sum identity", worst_l4 <= 1e-10, worst_l4);

    // elementary factor bound with the explicit constants
    QParameter q2(2.0);
    const auto [c1, c2] = elementary_bound_constants(q2);
    int violations = 0;
    double worst_ratio = 0.0;
    for (int m = 1; m <= 10; ++m)
        for (int i = 1; i <= 50; ++i)
            for (int k = 0; k < 50; ++k) {
                const cplx x = std::polar(i / 50.0, 2.0 * std::numbers::pi * k / 50.0);
                const double lhs = std::abs(1.0 - modified_elementary_factor(q2, m, x));
                const double rhs = c1 * std::pow(c2 * std::abs(x), m + 1);
                worst_ratio = std::max(worst_ratio, lhs / rhs);
                if (lhs > rhs * (1.0 + 1e-12)) ++violations;
            }
    report("elementary factor tail bound", violations == 0, worst_ratio);

    std::printf("selftest: %s\n", failures == 0 ? "all checks passed" : "FAILURES present");
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"explicit meromorphic solutions of linear q-difference equations"};
    app.require_subcommand(1);

    std::string problem_path, out_path;
    double tol = 1e-6;
    unsigned seed = 42;

    auto* solve = app.add_subcommand("solve", "solve and emit the spiral catalog");
    solve->add_option("--problem", problem_path, "problem spec JSON")->required();
    solve->add_option("--out", out_path, "output JSON path (default stdout)");

    auto* verify = app.add_subcommand("verify", "solve, then verify residuals and catalog");
    verify->add_option("--problem", problem_path, "problem spec JSON")->required();
    verify->add_option("--out", out_path, "report JSON path (default stdout)");
    verify->add_option("--tol", tol, "residual PASS threshold (default 1e-6)");
    verify->add_option("--seed", seed, "RNG seed for sample angles and probes");

    auto* polygon = app.add_subcommand("polygon", "Newton polygon of an operator problem");
    polygon->add_option("--problem", problem_path, "problem spec JSON")->required();
    polygon->add_option("--out", out_path, "output JSON path (default stdout)");

    auto* grid = app.add_subcommand("grid", "evaluate the solution on a polar grid, CSV out");
    grid->add_option("--problem", problem_path, "problem spec JSON")->required();
    grid->add_option("--out", out_path, "output CSV path")->required();
    grid->add_option("--seed", seed, "RNG seed for the angular offsets");

    auto* selftest = app.add_subcommand("selftest", "run the built-in identity suites");

    try {
        app.parse(argc, argv);
        if (solve->parsed()) return cmd_solve(problem_path, out_path);
        if (verify->parsed()) return cmd_verify(problem_path, out_path, tol, seed);
        if (polygon->parsed()) return cmd_polygon(problem_path, out_path);
        if (grid->parsed()) return cmd_grid(problem_path, out_path, seed);
        if (selftest->parsed()) return cmd_selftest();
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
