#pragma once

// Special functions underlying every fundamental solution of the first order
// q-difference equations: the Jacobi theta function Theta_q, the entire series
// f_a, the series transform G_g, and the Weierstrass-type elementary factors,
// all for a fixed base q with |q| > 1. Every routine sums with an explicit
// truncation policy and an a-priori tail bound.

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "qdiff/errors.hpp"

namespace qdiff {

using cplx = std::complex<double>;

inline bool finite(cplx z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

struct TruncationPolicy {
    double abs_tol = 1e-14;
    int max_terms = 10000;

    TruncationPolicy() = default;
    TruncationPolicy(double tol, int terms) : abs_tol(tol), max_terms(terms) {
        if (!(abs_tol > 0.0)) throw InvalidInput("TruncationPolicy: abs_tol must be positive");
        if (max_terms < 1) throw InvalidInput("TruncationPolicy: max_terms must be >= 1");
    }
};

// Taylor coefficients at 0, ascending degree. Used for the exponent g(x) of
// coefficient functions and for its transform G_g.
struct PowerSeries {
    std::vector<cplx> coeffs;
    double declared_radius = std::numeric_limits<double>::infinity();

    PowerSeries() = default;
    explicit PowerSeries(std::vector<cplx> c,
                         double radius = std::numeric_limits<double>::infinity())
        : coeffs(std::move(c)), declared_radius(radius) {
        if (!(declared_radius > 0.0)) throw InvalidInput("PowerSeries: radius must be positive");
    }

    bool is_zero() const {
        for (const auto& c : coeffs)
            if (c != 0.0) return false;
        return true;
    }

    cplx eval(cplx x) const {
        cplx s = 0.0;
        for (std::size_t n = coeffs.size(); n-- > 0;) s = s * x + coeffs[n];
        return s;
    }

    PowerSeries derivative() const {
        PowerSeries d;
        d.declared_radius = declared_radius;
        if (coeffs.size() > 1) {
            d.coeffs.resize(coeffs.size() - 1);
            for (std::size_t n = 1; n < coeffs.size(); ++n)
                d.coeffs[n - 1] = coeffs[n] * double(n);
        }
        return d;
    }
};

// The base q, |q| > 1, with its inverse p = 1/q cached and the q-Pochhammer
// table (q;q)_n precomputed eagerly so concurrent readers never race.
class QParameter {
  public:
    explicit QParameter(cplx q) : q_(q), p_(1.0 / q) {
        if (!(std::abs(q) > 1.0)) throw InvalidInput("QParameter: |q| must exceed 1");
        poch_.reserve(kTableSize);
        poch_.push_back(1.0); // (q;q)_0
        cplx qk = q_;
        for (int k = 1; k < kTableSize; ++k) {
            cplx next = poch_.back() * (1.0 - qk);
            poch_.push_back(next);
            qk *= q_;
            if (!finite(next)) break; // genuinely overflows double range
        }
    }

    cplx q() const { return q_; }
    cplx p() const { return p_; }
    double abs_q() const { return std::abs(q_); }

    cplx qpow(int k) const { return std::pow(q_, cplx(double(k), 0.0)); }

    // (q;q)_n = prod_{k=1..n} (1 - q^k), empty product = 1.
    cplx pochhammer(int n) const {
        if (n < 0) throw InvalidInput("pochhammer: n must be nonnegative");
        if (n < int(poch_.size())) return poch_[std::size_t(n)];
        cplx acc = poch_.back();
        cplx qk = std::pow(q_, cplx(double(poch_.size()), 0.0));
        for (int k = int(poch_.size()); k <= n; ++k) {
            acc *= (1.0 - qk);
            qk *= q_;
        }
        return acc;
    }

  private:
    static constexpr int kTableSize = 128;
    cplx q_;
    cplx p_;
    std::vector<cplx> poch_;
};

inline cplx qpochhammer(const QParameter& q, int n) { return q.pochhammer(n); }

namespace detail {

// Falling factorial n(n-1)...(n-k+1) as a double; valid for negative n too.
inline double falling(long long n, int k) {
    double f = 1.0;
    for (int j = 0; j < k; ++j) f *= double(n - j);
    return f;
}

} // namespace detail

// d-th derivative of the bilateral theta series
//   Theta_q(x) = sum_{n in Z} (-1)^n q^{-n(n-1)/2} x^n,
// summed symmetrically n = -N..N. Terms decay like |q|^{-n(n-1)/2} in both
// directions, so the sum is stopped once the last appended term on each side
// falls below abs_tol (falling-factorial weights included for d >= 1).
inline cplx theta_eval_deriv(const QParameter& q, cplx x, int d,
                             const TruncationPolicy& pol = {}) {
    if (x == 0.0) throw InvalidInput("theta: x must be nonzero");
    if (d < 0) throw InvalidInput("theta: derivative order must be nonnegative");
    const cplx p = q.p();
    cplx sum = (d == 0) ? cplx(1.0) : cplx(0.0); // n = 0 term
    cplx up = 1.0, down = 1.0;                   // t_n and t_{-n}
    cplx pn = 1.0;                               // p^{n-1} for the up recursion
    cplx pm = p;                                 // p^m for the down recursion
    for (int n = 1;; ++n) {
        up *= -x * pn;   // t_n = t_{n-1} * (-x p^{n-1})
        pn *= p;
        down *= -pm / x; // t_{-n} = t_{-(n-1)} * (-p^n / x)
        pm *= p;
        const cplx wu = up * detail::falling(n, d);
        const cplx wd = down * detail::falling(-n, d);
        sum += wu + wd;
        if (std::abs(wu) < pol.abs_tol && std::abs(wd) < pol.abs_tol) break;
        if (2 * n + 1 >= pol.max_terms)
            throw NonConvergence("theta series did not reach abs_tol within max_terms");
    }
    if (d == 0) return sum;
    return sum / std::pow(x, cplx(double(d), 0.0));
}

inline cplx theta_eval(const QParameter& q, cplx x, const TruncationPolicy& pol = {}) {
    return theta_eval_deriv(q, x, 0, pol);
}

// Jacobi triple product
//   Theta_q(x) = prod_{k>=0} (1 - p^{k+1})(1 - x p^k)(1 - x^{-1} p^{k+1}),
// truncated once the geometric tail (ratio |p|) is below abs_tol. Serves as
// the independent oracle for theta_eval.
inline cplx theta_product_eval(const QParameter& q, cplx x, const TruncationPolicy& pol = {}) {
    if (x == 0.0) throw InvalidInput("theta: x must be nonzero");
    const cplx p = q.p();
    const double ap = std::abs(p);
    const double scale = 1.0 + std::abs(x) + 1.0 / std::abs(x);
    cplx prod = 1.0;
    cplx pk = 1.0; // p^k
    for (int k = 0;; ++k) {
        prod *= (1.0 - p * pk) * (1.0 - x * pk) * (1.0 - (p * pk) / x);
        const double tail = std::pow(ap, double(k + 1)) * scale / (1.0 - ap);
        pk *= p;
        if (tail < pol.abs_tol) break;
        if (k + 1 >= pol.max_terms)
            throw NonConvergence("theta product did not reach abs_tol within max_terms");
    }
    return prod;
}

// Relative guard distance from x to the theta zero set q^Z.
inline double distance_to_q_spiral(const QParameter& q, cplx x) {
    const double ax = std::abs(x);
    if (!(ax > 0.0)) return 1.0;
    const double k0 = std::log(ax) / std::log(q.abs_q());
    double best = std::numeric_limits<double>::infinity();
    const long long kc = std::llround(k0);
    for (long long k = kc - 2; k <= kc + 2; ++k)
        best = std::min(best, std::abs(x / std::pow(q.q(), cplx(double(k), 0.0)) - 1.0));
    return best;
}

inline constexpr double kPoleGuard = 1e-6;

// L(x) = x Theta_q'(x) / Theta_q(x). Simple poles exactly on q^Z; the quotient
// loses all digits near a zero of Theta, so a guard neighborhood is rejected.
// Satisfies L(qx) = L(x) + 1.
inline cplx theta_log_derivative(const QParameter& q, cplx x, const TruncationPolicy& pol = {}) {
    if (x == 0.0) throw InvalidInput("theta_log_derivative: x must be nonzero");
    if (distance_to_q_spiral(q, x) < kPoleGuard)
        throw NearPole("theta_log_derivative: x within guard distance of q^Z");
    return x * theta_eval_deriv(q, x, 1, pol) / theta_eval_deriv(q, x, 0, pol);
}

// d-th derivative of f_a(x) = sum_{n>=0} (x/a)^n / (q;q)_n, the entire
// solution of y(qx) = (1 - x/a) y(x). f_a(x) = f_1(x/a).
inline cplx f_a_eval_deriv(const QParameter& q, cplx a, cplx x, int d,
                           const TruncationPolicy& pol = {}) {
    if (a == 0.0) throw InvalidInput("f_a: a must be nonzero");
    if (d < 0) throw InvalidInput("f_a: derivative order must be nonnegative");
    const cplx u = x / a;
    const double aq = q.abs_q();
    // t_n = x^{n-d} / (a^n (q;q)_n); the summand is falling(n,d) * t_n.
    cplx t = std::pow(a, cplx(-double(d), 0.0)) / q.pochhammer(d);
    cplx sum = t * detail::falling(d, d);
    cplx qn = std::pow(q.q(), cplx(double(d + 1), 0.0));
    for (int n = d + 1;; ++n) {
        t *= u / (1.0 - qn);
        qn *= q.q();
        const cplx w = t * detail::falling(n, d);
        sum += w;
        const double ratio = std::abs(u) / (std::pow(aq, double(n + 1)) - 1.0);
        if (std::abs(w) < pol.abs_tol && ratio < 0.5) break;
        if (n >= pol.max_terms)
            throw NonConvergence("f_a series did not reach abs_tol within max_terms");
    }
    return sum;
}

inline cplx f_a_eval(const QParameter& q, cplx a, cplx x, const TruncationPolicy& pol = {}) {
    return f_a_eval_deriv(q, a, x, 0, pol);
}

// Coefficient-wise transform g_n -> g_n / (q^n - 1), so that exp(G_g) solves
// y(qx) = e^{g(x)} y(x). The radius of convergence is multiplied by |q|.
inline PowerSeries g_transform(const QParameter& q, const PowerSeries& g) {
    if (!g.coeffs.empty() && g.coeffs[0] != 0.0)
        throw InvalidInput("g_transform: g(0) must be 0");
    PowerSeries out;
    out.coeffs.resize(g.coeffs.size());
    cplx qn = 1.0;
    for (std::size_t n = 0; n < g.coeffs.size(); ++n) {
        out.coeffs[n] = (n == 0) ? cplx(0.0) : g.coeffs[n] / (qn - 1.0);
        qn *= q.q();
    }
    out.declared_radius = g.declared_radius * q.abs_q();
    return out;
}

// Weierstrass elementary factor, with the convention E_0 = 1 used throughout
// this construction (genus-0 members enter as plain f_a factors).
inline cplx elementary_factor(int m, cplx x) {
    if (m < 0) throw InvalidInput("elementary_factor: m must be nonnegative");
    if (m == 0) return 1.0;
    cplx s = 0.0, xk = 1.0;
    for (int k = 1; k <= m; ++k) {
        xk *= x;
        s += xk / double(k);
    }
    return (1.0 - x) * std::exp(s);
}

// q-analog: Etilde_m(x) = f_1(x) exp(sum_{k=1..m} x^k / (k (q^k - 1))),
// satisfying Etilde_m(qx) = E_m(x) Etilde_m(x).
inline cplx modified_elementary_factor(const QParameter& q, int m, cplx x,
                                       const TruncationPolicy& pol = {}) {
    if (m < 0) throw InvalidInput("modified_elementary_factor: m must be nonnegative");
    if (m == 0) return 1.0;
    cplx s = 0.0, xk = 1.0, qk = 1.0;
    for (int k = 1; k <= m; ++k) {
        xk *= x;
        qk *= q.q();
        s += xk / (double(k) * (qk - 1.0));
    }
    return f_a_eval(q, 1.0, x, pol) * std::exp(s);
}

struct TailBoundConstants {
    double c1;
    double c2;
};

// Explicit constants of the estimate |1 - Etilde_m(x)| <= C1 (C2 |x|)^{m+1}
// on |x| <= 1, built from (q;q)'_n = prod (|q|^k - 1).
inline TailBoundConstants elementary_bound_constants(const QParameter& q) {
    const double aq = q.abs_q();
    double poch = 1.0;   // (q;q)'_n
    double qn = aq;      // |q|^{n+1} while filling
    double s1 = 0.0;     // sum (n+1)/(q;q)'_{n+1}
    double s2 = 0.0;     // sum_{n>=1} 1/(q;q)'_n
    for (int n = 0; n < 512; ++n) {
        poch *= (qn - 1.0); // now (q;q)'_{n+1}
        qn *= aq;
        const double t1 = double(n + 1) / poch;
        const double t2 = 1.0 / poch;
        s1 += t1;
        s2 += t2;
        if (t1 < 1e-18 && t2 < 1e-18) break;
    }
    const double e = std::exp(aq / (aq - 1.0));
    return {(s1 + s2 / (aq - 1.0)) / e, e};
}

// Residual of the identity (n+1)/(q;q)_{n+1} = -sum_{k=0..n} 1/((q^{k+1}-1)(q;q)_{n-k}).
inline double pochhammer_sum_identity_residual(const QParameter& q, int n) {
    const cplx lhs = double(n + 1) / q.pochhammer(n + 1);
    cplx rhs = 0.0;
    cplx qk1 = q.q(); // q^{k+1}
    for (int k = 0; k <= n; ++k) {
        rhs += 1.0 / ((qk1 - 1.0) * q.pochhammer(n - k));
        qk1 *= q.q();
    }
    return std::abs(lhs + rhs);
}

} // namespace qdiff
