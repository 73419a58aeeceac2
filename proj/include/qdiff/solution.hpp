#pragma once

// Solution expressions: immutable composition trees over the fundamental
// solution primitives (theta powers, f_a factors, exp(G_g), tail series, ...),
// evaluable anywhere off their singular set and closed under differentiation.
// Spiral catalogs describe the predicted q-spirals of zeros and poles.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "qdiff/coefficient.hpp"
#include "qdiff/errors.hpp"
#include "qdiff/numerics.hpp"
#include "qdiff/rational.hpp"

namespace qdiff {

enum class SpiralDirection { FullZ, PosNStar, NegN, NegNStar };

inline std::string direction_name(SpiralDirection d) {
    switch (d) {
        case SpiralDirection::FullZ: return "Z";
        case SpiralDirection::PosNStar: return "N*";
        case SpiralDirection::NegN: return "-N";
        default: return "-N*";
    }
}

// One discrete q-spiral {base * q^n} over the direction's index set, carrying
// a signed order: positive for zeros, negative for poles.
struct Spiral {
    cplx base;
    SpiralDirection direction;
    int order;
};

namespace detail {

// Is ratio an exact power of q, within rel_tol? Returns the exponent.
inline std::optional<int> q_power_of(const QParameter& q, cplx ratio, double rel_tol = 1e-9) {
    const double ar = std::abs(ratio);
    if (!(ar > 0.0)) return std::nullopt;
    const double k = std::log(ar) / std::log(q.abs_q());
    const long long kr = std::llround(k);
    if (std::abs(k - double(kr)) > 0.45) return std::nullopt;
    const cplx rq = ratio / std::pow(q.q(), cplx(double(kr), 0.0));
    if (std::abs(rq - 1.0) <= rel_tol) return int(kr);
    return std::nullopt;
}

} // namespace detail

struct SpiralCatalog {
    std::vector<Spiral> spirals;
    bool merged = false;
    // pairs of merged-catalog indices whose supports overlap in a finite set
    std::vector<std::pair<std::size_t, std::size_t>> overlap_warnings;

    // NegNStar is stored canonically as NegN with the base shifted one step.
    void add(const QParameter& q, cplx base, SpiralDirection dir, int order) {
        if (order == 0) return;
        if (base == 0.0) throw InvalidInput("spiral base must be nonzero");
        if (dir == SpiralDirection::NegNStar) {
            base *= q.p();
            dir = SpiralDirection::NegN;
        }
        spirals.push_back({base, dir, order});
    }

    void extend(const SpiralCatalog& other) {
        spirals.insert(spirals.end(), other.spirals.begin(), other.spirals.end());
    }

    SpiralCatalog negated() const {
        SpiralCatalog c = *this;
        for (auto& s : c.spirals) s.order = -s.order;
        return c;
    }

    // Support transformed under x -> q/x: full spirals stay full, half spirals
    // about infinity become half spirals about 0 and vice versa.
    SpiralCatalog arg_inverted(const QParameter& q) const {
        SpiralCatalog c;
        c.merged = merged;
        for (const auto& s : spirals) {
            switch (s.direction) {
                case SpiralDirection::FullZ:
                    c.spirals.push_back({q.q() / s.base, SpiralDirection::FullZ, s.order});
                    break;
                case SpiralDirection::PosNStar:
                    // {q/(b q^n); n >= 1} = (1/b) q^{-N}
                    c.spirals.push_back({1.0 / s.base, SpiralDirection::NegN, s.order});
                    break;
                case SpiralDirection::NegN:
                    // {q/(b q^n); n <= 0} = (q/b) q^{N} = (1/b) q^{N*}
                    c.spirals.push_back({1.0 / s.base, SpiralDirection::PosNStar, s.order});
                    break;
                default:
                    throw InvalidInput("catalog not canonical");
            }
        }
        return c;
    }

    // Support shifted under x -> x/q (spirals of F(qx) given those of F).
    SpiralCatalog dilated_down(const QParameter& q) const {
        SpiralCatalog c;
        c.merged = merged;
        for (const auto& s : spirals) c.spirals.push_back({s.base * q.p(), s.direction, s.order});
        return c;
    }

    // All support points with modulus in [r_min, r_max].
    std::vector<cplx> support_points_in(const QParameter& q, double r_min, double r_max) const {
        std::vector<cplx> pts;
        const double lq = std::log(q.abs_q());
        for (const auto& s : spirals) {
            const double ab = std::abs(s.base);
            int lo = int(std::ceil(std::log(r_min / ab) / lq - 1e-12));
            int hi = int(std::floor(std::log(r_max / ab) / lq + 1e-12));
            if (s.direction == SpiralDirection::PosNStar) lo = std::max(lo, 1);
            if (s.direction == SpiralDirection::NegN) hi = std::min(hi, 0);
            for (int n = lo; n <= hi; ++n)
                pts.push_back(s.base * std::pow(q.q(), cplx(double(n), 0.0)));
        }
        return pts;
    }

    // Signed order predicted at a point: sum over spirals whose support
    // contains it (within rel_tol on the base ratio).
    int order_at(const QParameter& q, cplx x, double rel_tol = 1e-9) const {
        int total = 0;
        for (const auto& s : spirals) {
            const auto k = detail::q_power_of(q, x / s.base, rel_tol);
            if (!k) continue;
            if (s.direction == SpiralDirection::PosNStar && *k < 1) continue;
            if (s.direction == SpiralDirection::NegN && *k > 0) continue;
            total += s.order;
        }
        return total;
    }

    bool contains_direction(SpiralDirection d) const {
        return std::any_of(spirals.begin(), spirals.end(),
                           [&](const Spiral& s) { return s.direction == d; });
    }

    double distance_to_support(const QParameter& q, cplx x) const {
        double best = std::numeric_limits<double>::infinity();
        const double ax = std::abs(x);
        if (!(ax > 0.0)) return best; // 0 is never a support point
        for (const auto& p : support_points_in(q, ax / (q.abs_q() * 2.0), ax * q.abs_q() * 2.0))
            best = std::min(best, std::abs(x - p));
        return best;
    }
};

// Spirals with coinciding support are combined: full spirals whose bases
// differ by a factor in q^Z, and half spirals on the same base and direction.
// Orders are summed; zero totals drop out. Pairs whose supports overlap in a
// proper subset (half vs half shifted, half living inside a full spiral) are
// flagged, never merged: their per-point orders are not constant along the
// union, and order_at already sums memberships pointwise.
inline SpiralCatalog merge_spirals(const SpiralCatalog& catalog, const QParameter& q) {
    SpiralCatalog out;
    std::vector<Spiral> full, half;
    for (const auto& s : catalog.spirals)
        (s.direction == SpiralDirection::FullZ ? full : half).push_back(s);

    std::vector<bool> used(full.size(), false);
    std::vector<Spiral> merged_full;
    for (std::size_t i = 0; i < full.size(); ++i) {
        if (used[i]) continue;
        Spiral acc = full[i];
        used[i] = true;
        for (std::size_t j = i + 1; j < full.size(); ++j) {
            if (used[j]) continue;
            if (detail::q_power_of(q, full[j].base / acc.base)) {
                acc.order += full[j].order;
                used[j] = true;
            }
        }
        merged_full.push_back(acc);
    }

    std::vector<bool> husd(half.size(), false);
    std::vector<Spiral> merged_half;
    for (std::size_t i = 0; i < half.size(); ++i) {
        if (husd[i]) continue;
        Spiral acc = half[i];
        husd[i] = true;
        for (std::size_t j = i + 1; j < half.size(); ++j) {
            if (husd[j] || half[j].direction != acc.direction) continue;
            if (std::abs(half[j].base / acc.base - 1.0) <= 1e-9) {
                acc.order += half[j].order;
                husd[j] = true;
            }
        }
        merged_half.push_back(acc);
    }

    for (const auto& s : merged_full)
        if (s.order != 0) out.spirals.push_back(s);
    for (const auto& s : merged_half)
        if (s.order != 0) out.spirals.push_back(s);

    for (std::size_t i = 0; i < out.spirals.size(); ++i)
        for (std::size_t j = i + 1; j < out.spirals.size(); ++j) {
            const auto &a = out.spirals[i], &b = out.spirals[j];
            if (!detail::q_power_of(q, b.base / a.base)) continue;
            const bool both_half = a.direction != SpiralDirection::FullZ &&
                                   b.direction != SpiralDirection::FullZ;
            const bool one_full = (a.direction == SpiralDirection::FullZ) !=
                                  (b.direction == SpiralDirection::FullZ);
            if ((both_half && a.direction == b.direction &&
                 std::abs(b.base / a.base - 1.0) > 1e-9) ||
                one_full)
                out.overlap_warnings.emplace_back(i, j);
        }

    out.merged = true;
    return out;
}

class SolutionExpr {
  public:
    enum class Kind {
        Const,      // value c
        Monomial,   // c * x^e
        Theta,      // Theta_q^{(d)}(c * x)
        FA,         // f_c^{(d)}(x)
        SeriesVal,  // S(x)
        SeriesExp,  // exp(S(x))
        TailSum,    // sum_{n>=1} p^{n e} f(p^n x)
        RationalAt, // f(c * x)
        Power,      // child^e
        Product,
        Quotient,
        Sum,
        ArgInverse  // child(q / x)
    };

    SolutionExpr() : SolutionExpr(constant(1.0)) {}

    static SolutionExpr constant(cplx c) {
        Node n(Kind::Const);
        n.c = c;
        return wrap(std::move(n));
    }
    static SolutionExpr monomial(cplx coeff, int exp) {
        if (exp == 0) return constant(coeff);
        Node n(Kind::Monomial);
        n.c = coeff;
        n.e = exp;
        return wrap(std::move(n));
    }
    static SolutionExpr theta(cplx scale, int deriv = 0) {
        Node n(Kind::Theta);
        n.c = scale;
        n.e = deriv;
        return wrap(std::move(n));
    }
    static SolutionExpr fa(cplx a, int deriv = 0) {
        Node n(Kind::FA);
        n.c = a;
        n.e = deriv;
        return wrap(std::move(n));
    }
    static SolutionExpr series_val(PowerSeries s) {
        Node n(Kind::SeriesVal);
        n.series = std::move(s);
        return wrap(std::move(n));
    }
    static SolutionExpr series_exp(PowerSeries s) {
        if (s.is_zero()) return constant(1.0);
        Node n(Kind::SeriesExp);
        n.series = std::move(s);
        return wrap(std::move(n));
    }
    // known_poles: pole locations of f when the caller has them exactly
    // (multiple roots are ill-conditioned to recover numerically).
    static SolutionExpr tail_sum(RationalFunction f, int weight = 0,
                                 std::vector<cplx> known_poles = {}) {
        Node n(Kind::TailSum);
        n.rat = std::move(f);
        n.e = weight;
        // A weight-0 tail needs f(0) = 0 or the series diverges; the constant
        // numerator term is snapped to exact zero so that roundoff left by a
        // P - P(0) subtraction cannot stall the term decay.
        if (weight == 0 && !n.rat.is_zero()) {
            if (n.rat.den().valuation() != 0)
                throw InvalidInput("tail_sum: f must be analytic at 0");
            std::vector<cplx> nc = n.rat.num().coeffs();
            if (!nc.empty()) {
                if (std::abs(nc[0]) > 1e-9 * (1.0 + n.rat.num().max_abs_coeff()))
                    throw InvalidInput("tail_sum: f(0) must vanish");
                nc[0] = 0.0;
                n.rat = RationalFunction(Polynomial(std::move(nc)), n.rat.den());
            }
        }
        n.aux = std::numeric_limits<double>::infinity();
        if (known_poles.empty() && n.rat.den().degree() >= 1)
            for (const auto& r : polynomial_roots(n.rat.den())) known_poles.push_back(r.location);
        for (const auto& b : known_poles) {
            if (!finite(b)) throw InvalidInput("tail_sum: non-finite pole location");
            n.aux = std::min(n.aux, std::abs(b));
            n.aux_points.push_back(b);
        }
        return wrap(std::move(n));
    }
    static SolutionExpr rational_at(RationalFunction f, cplx scale = 1.0) {
        Node n(Kind::RationalAt);
        n.rat = std::move(f);
        n.c = scale;
        return wrap(std::move(n));
    }
    static SolutionExpr arg_inverse(SolutionExpr child) {
        Node n(Kind::ArgInverse);
        n.kids.push_back(child.root_);
        return wrap(std::move(n));
    }

    // alpha * x * Theta'(x) / Theta(x), the solution of y(qx) = y(x) + alpha.
    static SolutionExpr theta_log_deriv(cplx alpha) {
        return monomial(alpha, 1) * (theta(1.0, 1) / theta(1.0, 0));
    }

    // Etilde_p(x/a) = f_a(x) exp(sum_{k=1..p} x^k / (k (q^k - 1) a^k)).
    static SolutionExpr modified_elementary(const QParameter& q, cplx a, int genus) {
        SolutionExpr f = fa(a);
        if (genus == 0) return f;
        PowerSeries w;
        w.coeffs.assign(std::size_t(genus) + 1, 0.0);
        cplx qk = 1.0, ak = 1.0;
        for (int k = 1; k <= genus; ++k) {
            qk *= q.q();
            ak *= a;
            w.coeffs[std::size_t(k)] = 1.0 / (double(k) * (qk - 1.0) * ak);
        }
        return f * series_exp(std::move(w));
    }

    SolutionExpr pow(int n) const {
        if (n == 1) return *this;
        if (n == 0) return constant(1.0);
        Node nn(Kind::Power);
        nn.e = n;
        nn.kids.push_back(root_);
        return wrap(std::move(nn));
    }

    friend SolutionExpr operator*(const SolutionExpr& a, const SolutionExpr& b) {
        Node n(Kind::Product);
        a.flatten_into(n.kids, Kind::Product);
        b.flatten_into(n.kids, Kind::Product);
        return wrap(std::move(n));
    }
    friend SolutionExpr operator+(const SolutionExpr& a, const SolutionExpr& b) {
        Node n(Kind::Sum);
        a.flatten_into(n.kids, Kind::Sum);
        b.flatten_into(n.kids, Kind::Sum);
        return wrap(std::move(n));
    }
    friend SolutionExpr operator/(const SolutionExpr& a, const SolutionExpr& b) {
        Node n(Kind::Quotient);
        n.kids.push_back(a.root_);
        n.kids.push_back(b.root_);
        return wrap(std::move(n));
    }

    Kind kind() const { return root_->kind; }

    cplx eval(const QParameter& q, cplx x, const TruncationPolicy& pol = {}) const {
        const cplx v = eval_node(*root_, q, x, pol);
        if (!finite(v)) throw AtSingularity("solution expression not finite at this point");
        return v;
    }

    // Exact derivative tree with respect to the truncated primitives.
    SolutionExpr derivative(const QParameter& q) const { return wrap_ptr(diff_node(*root_, q)); }

    // F'(x)/F(x), distributing over products, powers and quotients so that
    // long Weierstrass products stay linear-time (the product-rule tree of a
    // 400-factor product is quadratic and unusable on contours).
    cplx log_derivative_eval(const QParameter& q, cplx x, const TruncationPolicy& pol = {}) const {
        return log_deriv_node(root_, q, x, pol);
    }

    std::string to_string() const { return node_str(*root_); }

  private:
    struct Node {
        explicit Node(Kind k) : kind(k) {}
        Kind kind;
        cplx c = 0.0;
        int e = 0;
        double aux = 0.0;             // TailSum: cached smallest pole modulus of rat
        std::vector<cplx> aux_points; // TailSum: cached pole locations of rat
        PowerSeries series;
        RationalFunction rat;
        std::vector<std::shared_ptr<const Node>> kids;
    };
    using NodePtr = std::shared_ptr<const Node>;

    NodePtr root_;

    explicit SolutionExpr(NodePtr n) : root_(std::move(n)) {}
    static SolutionExpr wrap(Node&& n) { return SolutionExpr(std::make_shared<const Node>(std::move(n))); }
    static SolutionExpr wrap_ptr(NodePtr p) { return SolutionExpr(std::move(p)); }

    void flatten_into(std::vector<NodePtr>& kids, Kind k) const {
        if (root_->kind == k)
            kids.insert(kids.end(), root_->kids.begin(), root_->kids.end());
        else
            kids.push_back(root_);
    }

    static cplx int_pow(cplx v, int n) {
        if (n < 0) return 1.0 / int_pow(v, -n);
        cplx r = 1.0, b = v;
        for (int m = n; m > 0; m >>= 1) {
            if (m & 1) r *= b;
            b *= b;
        }
        return r;
    }

    static cplx eval_node(const Node& n, const QParameter& q, cplx x,
                          const TruncationPolicy& pol) {
        switch (n.kind) {
            case Kind::Const: return n.c;
            case Kind::Monomial:
                if (x == 0.0 && n.e < 0) throw AtSingularity("negative power at 0");
                return n.c * int_pow(x, n.e);
            case Kind::Theta: return theta_eval_deriv(q, n.c * x, n.e, pol);
            case Kind::FA: return f_a_eval_deriv(q, n.c, x, n.e, pol);
            case Kind::SeriesVal:
                if (std::abs(x) >= n.series.declared_radius)
                    throw NonConvergence("series evaluated outside its radius");
                return n.series.eval(x);
            case Kind::SeriesExp:
                if (std::abs(x) >= n.series.declared_radius)
                    throw NonConvergence("series evaluated outside its radius");
                return std::exp(n.series.eval(x));
            case Kind::TailSum: return eval_tail(n, q, x, pol);
            case Kind::RationalAt: return n.rat.eval(n.c * x);
            case Kind::Power: return int_pow(eval_node(*n.kids[0], q, x, pol), n.e);
            case Kind::Product: {
                cplx v = 1.0;
                for (const auto& k : n.kids) v *= eval_node(*k, q, x, pol);
                return v;
            }
            case Kind::Quotient: {
                const cplx den = eval_node(*n.kids[1], q, x, pol);
                if (den == 0.0) throw AtSingularity("quotient denominator vanishes");
                return eval_node(*n.kids[0], q, x, pol) / den;
            }
            case Kind::Sum: {
                cplx v = 0.0;
                for (const auto& k : n.kids) v += eval_node(*k, q, x, pol);
                return v;
            }
            case Kind::ArgInverse:
                if (x == 0.0) throw AtSingularity("argument inversion at 0");
                return eval_node(*n.kids[0], q, q.q() / x, pol);
        }
        throw Error("unreachable");
    }

    // sum_{n>=1} p^{n w} f(p^n x): normally convergent off the pole spirals
    // a q^{N*}; |f(y)| <= C |y| near 0 gives the geometric stop bound.
    static cplx eval_tail(const Node& n, const QParameter& q, cplx x,
                          const TruncationPolicy& pol) {
        if (n.rat.is_zero()) return 0.0;
        const double safe = std::min(1.0, 0.5 * n.aux);
        const double ap = std::abs(q.p());
        cplx sum = 0.0;
        cplx y = x;
        cplx pw = 1.0;
        const cplx pwstep = int_pow(q.p(), n.e);
        int quiet = 0;
        for (int k = 1;; ++k) {
            y *= q.p();
            pw *= pwstep;
            for (const auto& b : n.aux_points)
                if (std::abs(y - b) < 1e-9 * (1.0 + std::abs(b)))
                    throw AtPole("tail series hits a pole spiral");
            const cplx term = pw * n.rat.num().eval(y) / n.rat.den().eval(y);
            sum += term;
            if (std::abs(y) < safe && std::abs(term) * ap / (1.0 - ap) < pol.abs_tol) {
                if (++quiet >= 2) break;
            } else {
                quiet = 0;
            }
            if (k >= pol.max_terms)
                throw NonConvergence("tail series did not converge (deg " +
                                     std::to_string(n.rat.num().degree()) + "/" +
                                     std::to_string(n.rat.den().degree()) + ", scale " +
                                     std::to_string(n.rat.num().max_abs_coeff()) + ", last " +
                                     std::to_string(std::abs(term)) + ")");
        }
        return sum;
    }

    static NodePtr diff_node(const Node& n, const QParameter& q);

    static cplx log_deriv_node(const NodePtr& n, const QParameter& q, cplx x,
                               const TruncationPolicy& pol) {
        switch (n->kind) {
            case Kind::Const: return 0.0;
            case Kind::Monomial: return cplx(double(n->e), 0.0) / x;
            case Kind::Power:
                return cplx(double(n->e), 0.0) * log_deriv_node(n->kids[0], q, x, pol);
            case Kind::Product: {
                cplx s = 0.0;
                for (const auto& k : n->kids) s += log_deriv_node(k, q, x, pol);
                return s;
            }
            case Kind::Quotient:
                return log_deriv_node(n->kids[0], q, x, pol) -
                       log_deriv_node(n->kids[1], q, x, pol);
            case Kind::ArgInverse: {
                if (x == 0.0) throw AtSingularity("argument inversion at 0");
                const cplx w = q.q() / x;
                return log_deriv_node(n->kids[0], q, w, pol) * (-q.q() / (x * x));
            }
            case Kind::SeriesExp:
                if (std::abs(x) >= n->series.declared_radius)
                    throw NonConvergence("series evaluated outside its radius");
                return n->series.derivative().eval(x);
            default: {
                const NodePtr d = diff_node(*n, q);
                const cplx f = eval_node(*n, q, x, pol);
                if (f == 0.0) throw AtSingularity("log derivative at a zero");
                return eval_node(*d, q, x, pol) / f;
            }
        }
    }

    static std::string cplx_str(cplx z) {
        std::string s = "(" + std::to_string(z.real());
        if (z.imag() != 0.0) s += (z.imag() > 0 ? "+" : "") + std::to_string(z.imag()) + "i";
        return s + ")";
    }

    static std::string node_str(const Node& n) {
        switch (n.kind) {
            case Kind::Const: return cplx_str(n.c);
            case Kind::Monomial: return cplx_str(n.c) + "*x^" + std::to_string(n.e);
            case Kind::Theta:
                return "Theta" + std::string(std::size_t(n.e), '\'') + "(" + cplx_str(n.c) + "x)";
            case Kind::FA:
                return "f[" + cplx_str(n.c) + "]" + std::string(std::size_t(n.e), '\'') + "(x)";
            case Kind::SeriesVal: return "S(x)";
            case Kind::SeriesExp: return "exp(S(x))";
            case Kind::TailSum: return "tail[w=" + std::to_string(n.e) + "](x)";
            case Kind::RationalAt: return "R(" + cplx_str(n.c) + "x)";
            case Kind::Power: return "(" + node_str(*n.kids[0]) + ")^" + std::to_string(n.e);
            case Kind::Product: {
                std::string s;
                for (const auto& k : n.kids) s += (s.empty() ? "" : " * ") + node_str(*k);
                return s;
            }
            case Kind::Quotient:
                return "(" + node_str(*n.kids[0]) + ") / (" + node_str(*n.kids[1]) + ")";
            case Kind::Sum: {
                std::string s;
                for (const auto& k : n.kids) s += (s.empty() ? "" : " + ") + node_str(*k);
                return "(" + s + ")";
            }
            case Kind::ArgInverse: return "[" + node_str(*n.kids[0]) + "](q/x)";
        }
        return "?";
    }
};

inline SolutionExpr::NodePtr SolutionExpr::diff_node(const Node& n, const QParameter& q) {
    const auto lift = [](SolutionExpr e) { return e.root_; };
    const auto child = [&](std::size_t i) { return SolutionExpr(n.kids[i]); };
    switch (n.kind) {
        case Kind::Const: return lift(constant(0.0));
        case Kind::Monomial:
            if (n.e == 0) return lift(constant(0.0));
            return lift(monomial(n.c * double(n.e), n.e - 1));
        case Kind::Theta: return lift(constant(n.c) * theta(n.c, n.e + 1));
        case Kind::FA: return lift(fa(n.c, n.e + 1));
        case Kind::SeriesVal: return lift(series_val(n.series.derivative()));
        case Kind::SeriesExp:
            return lift(series_val(n.series.derivative()) * series_exp(n.series));
        case Kind::TailSum: return lift(tail_sum(n.rat.derivative(), n.e + 1, n.aux_points));
        case Kind::RationalAt:
            return lift(constant(n.c) * rational_at(n.rat.derivative(), n.c));
        case Kind::Power: {
            SolutionExpr u = child(0);
            return lift(constant(double(n.e)) * u.pow(n.e - 1) * u.derivative(q));
        }
        case Kind::Product: {
            SolutionExpr total = constant(0.0);
            for (std::size_t i = 0; i < n.kids.size(); ++i) {
                SolutionExpr term = child(i).derivative(q);
                for (std::size_t j = 0; j < n.kids.size(); ++j)
                    if (j != i) term = term * child(j);
                total = total + term;
            }
            return lift(total);
        }
        case Kind::Quotient: {
            SolutionExpr u = child(0), v = child(1);
            return lift((u.derivative(q) * v + constant(-1.0) * u * v.derivative(q)) /
                        v.pow(2));
        }
        case Kind::Sum: {
            SolutionExpr total = constant(0.0);
            for (std::size_t i = 0; i < n.kids.size(); ++i) total = total + child(i).derivative(q);
            return lift(total);
        }
        case Kind::ArgInverse:
            return lift(monomial(-q.q(), -2) * arg_inverse(child(0).derivative(q)));
    }
    throw Error("unreachable");
}

inline cplx evaluate_solution(const SolutionExpr& s, const QParameter& q, cplx x,
                              const TruncationPolicy& pol = {}) {
    return s.eval(q, x, pol);
}

inline SolutionExpr differentiate_solution(const SolutionExpr& s, const QParameter& q) {
    return s.derivative(q);
}

} // namespace qdiff
