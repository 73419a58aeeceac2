#pragma once

// Dense complex polynomials and rational functions: evaluation, arithmetic,
// root finding (Durand-Kerner with Newton polish), and the exact
// partial-fraction machinery behind the additive decomposition.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "qdiff/errors.hpp"
#include "qdiff/numerics.hpp"

namespace qdiff {

class Polynomial {
  public:
    Polynomial() = default;
    Polynomial(std::initializer_list<cplx> c) : c_(c) { trim(); }
    explicit Polynomial(std::vector<cplx> c) : c_(std::move(c)) { trim(); }

    static Polynomial monomial(cplx coeff, int deg) {
        std::vector<cplx> c(std::size_t(deg) + 1, 0.0);
        c.back() = coeff;
        return Polynomial(std::move(c));
    }

    const std::vector<cplx>& coeffs() const { return c_; }
    bool is_zero() const { return c_.empty(); }
    int degree() const { return int(c_.size()) - 1; } // -1 for the zero polynomial

    cplx coeff(int k) const {
        return (k >= 0 && k < int(c_.size())) ? c_[std::size_t(k)] : cplx(0.0);
    }

    // Order of vanishing at 0 (index of the lowest nonzero coefficient).
    int valuation() const {
        for (std::size_t k = 0; k < c_.size(); ++k)
            if (c_[k] != 0.0) return int(k);
        throw InvalidInput("valuation of the zero polynomial");
    }

    cplx eval(cplx x) const {
        cplx s = 0.0;
        for (std::size_t n = c_.size(); n-- > 0;) s = s * x + c_[n];
        return s;
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return {};
        std::vector<cplx> d(c_.size() - 1);
        for (std::size_t n = 1; n < c_.size(); ++n) d[n - 1] = c_[n] * double(n);
        return Polynomial(std::move(d));
    }

    Polynomial operator+(const Polynomial& o) const {
        std::vector<cplx> r(std::max(c_.size(), o.c_.size()), 0.0);
        for (std::size_t k = 0; k < c_.size(); ++k) r[k] += c_[k];
        for (std::size_t k = 0; k < o.c_.size(); ++k) r[k] += o.c_[k];
        return Polynomial(std::move(r));
    }

    Polynomial operator-(const Polynomial& o) const { return *this + (o * cplx(-1.0)); }

    Polynomial operator*(const Polynomial& o) const {
        if (is_zero() || o.is_zero()) return {};
        std::vector<cplx> r(c_.size() + o.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i)
            for (std::size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
        return Polynomial(std::move(r));
    }

    Polynomial operator*(cplx s) const {
        std::vector<cplx> r = c_;
        for (auto& v : r) v *= s;
        return Polynomial(std::move(r));
    }

    // Quotient and remainder of the Euclidean division by d.
    std::pair<Polynomial, Polynomial> divmod(const Polynomial& d) const {
        if (d.is_zero()) throw InvalidInput("polynomial division by zero");
        std::vector<cplx> rem = c_;
        const int dd = d.degree();
        if (degree() < dd) return {Polynomial{}, *this};
        std::vector<cplx> quo(std::size_t(degree() - dd) + 1, 0.0);
        const cplx lead = d.c_.back();
        for (int k = degree(); k >= dd; --k) {
            const cplx f = rem[std::size_t(k)] / lead;
            quo[std::size_t(k - dd)] = f;
            for (int j = 0; j <= dd; ++j) rem[std::size_t(k - dd + j)] -= f * d.c_[std::size_t(j)];
        }
        rem.resize(std::size_t(dd));
        return {Polynomial(std::move(quo)), Polynomial(std::move(rem))};
    }

    // Synthetic division by (x - a) using the known root a; the remainder,
    // which should be ~0, is discarded.
    Polynomial deflate(cplx a) const {
        if (c_.size() <= 1) return {};
        std::vector<cplx> r(c_.size() - 1);
        cplx carry = c_.back();
        for (std::size_t k = c_.size() - 1; k-- > 0;) {
            r[k] = carry;
            carry = c_[k] + carry * a;
        }
        return Polynomial(std::move(r));
    }

    // Coefficients of the same polynomial in powers of (x - a).
    std::vector<cplx> taylor_at(cplx a) const {
        std::vector<cplx> work = c_;
        std::vector<cplx> out(c_.size(), 0.0);
        for (std::size_t i = 0; i < out.size(); ++i) {
            // Horner pass leaves the remainder of division by (x - a) in out[i].
            cplx carry = 0.0;
            for (std::size_t k = work.size(); k-- > 0;) {
                const cplx t = work[k] + carry * a;
                work[k] = carry;
                carry = t;
            }
            out[i] = carry;
            work.pop_back();
            if (work.empty()) break;
        }
        return out;
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& v : c_) m = std::max(m, std::abs(v));
        return m;
    }

  private:
    void trim() {
        while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
    }
    std::vector<cplx> c_;
};

struct RootWithMultiplicity {
    cplx location;
    int multiplicity;
};

namespace detail {

// Durand-Kerner simultaneous iteration, then a few Newton steps per root.
inline std::vector<cplx> simple_roots(const Polynomial& poly) {
    const int n = poly.degree();
    if (n <= 0) return {};
    std::vector<cplx> a(poly.coeffs());
    const cplx lead = a.back();
    for (auto& v : a) v /= lead;
    if (n == 1) return {-a[0]};

    double scale = 0.0;
    for (int k = 0; k < n; ++k) scale = std::max(scale, std::pow(std::abs(a[std::size_t(k)]), 1.0 / (n - k)));
    scale = std::max(scale, 0.5);
    std::vector<cplx> z(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        z[std::size_t(k)] = scale * std::polar(1.0 + 0.09 * k, 0.6180339887 * 2.0 * 3.14159265358979 * k + 0.4);

    Polynomial monic(a);
    for (int iter = 0; iter < 600; ++iter) {
        double moved = 0.0;
        for (int i = 0; i < n; ++i) {
            cplx denom = 1.0;
            for (int j = 0; j < n; ++j)
                if (j != i) denom *= (z[std::size_t(i)] - z[std::size_t(j)]);
            const cplx step = monic.eval(z[std::size_t(i)]) / denom;
            z[std::size_t(i)] -= step;
            moved = std::max(moved, std::abs(step));
        }
        if (moved < 1e-14 * (1.0 + scale)) break;
    }
    const Polynomial dp = monic.derivative();
    for (auto& r : z)
        for (int it = 0; it < 8; ++it) {
            const cplx d = dp.eval(r);
            if (std::abs(d) < 1e-300) break;
            const cplx step = monic.eval(r) / d;
            r -= step;
            if (std::abs(step) < 1e-16 * (1.0 + std::abs(r))) break;
        }
    return z;
}

} // namespace detail

// All roots, clustered into multiplicities within a relative tolerance.
inline std::vector<RootWithMultiplicity> polynomial_roots(const Polynomial& poly,
                                                          double cluster_tol = 1e-7) {
    std::vector<cplx> raw = detail::simple_roots(poly);
    std::vector<RootWithMultiplicity> out;
    std::vector<bool> used(raw.size(), false);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (used[i]) continue;
        cplx sum = raw[i];
        int count = 1;
        used[i] = true;
        const double tol = cluster_tol * (1.0 + std::abs(raw[i]));
        for (std::size_t j = i + 1; j < raw.size(); ++j) {
            if (!used[j] && std::abs(raw[j] - raw[i]) < tol) {
                sum += raw[j];
                ++count;
                used[j] = true;
            }
        }
        out.push_back({sum / double(count), count});
    }
    return out;
}

// Principal part at one pole: coefficients of 1/(x-a)^j, j = 1..order.
struct PrincipalPart {
    cplx pole;
    std::vector<cplx> coeffs; // coeffs[j-1] multiplies 1/(x-a)^j

    int order() const { return int(coeffs.size()); }

    cplx eval(cplx x) const {
        const cplx w = 1.0 / (x - pole);
        cplx s = 0.0, wj = 1.0;
        for (const auto& c : coeffs) {
            wj *= w;
            s += c * wj;
        }
        return s;
    }

    // Value of the principal part at x = 0 (finite since pole != 0).
    cplx eval_at_zero() const {
        if (pole == 0.0) throw InvalidInput("principal part at 0 has no finite value at 0");
        return eval(0.0);
    }
};

class RationalFunction {
  public:
    RationalFunction() : num_{}, den_{cplx(1.0)} {}
    RationalFunction(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
        if (den_.is_zero()) throw InvalidInput("rational function with zero denominator");
    }
    static RationalFunction from_poly(Polynomial p) { return {std::move(p), Polynomial{cplx(1.0)}}; }

    const Polynomial& num() const { return num_; }
    const Polynomial& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }

    cplx eval(cplx x) const { return num_.eval(x) / den_.eval(x); }

    // Order of vanishing (negative: pole order) at 0.
    int valuation() const {
        if (num_.is_zero()) throw InvalidInput("valuation of the zero rational function");
        return num_.valuation() - den_.valuation();
    }

    RationalFunction derivative() const {
        return {num_.derivative() * den_ - num_ * den_.derivative(), den_ * den_};
    }

    RationalFunction operator+(const RationalFunction& o) const {
        return {num_ * o.den_ + o.num_ * den_, den_ * o.den_};
    }
    RationalFunction operator-(const RationalFunction& o) const {
        return {num_ * o.den_ - o.num_ * den_, den_ * o.den_};
    }
    RationalFunction operator*(const RationalFunction& o) const {
        return {num_ * o.num_, den_ * o.den_};
    }
    RationalFunction operator*(cplx s) const { return {num_ * s, den_}; }

    // Remove factors shared by numerator and denominator (roots coinciding
    // within 1e-10 relative).
    RationalFunction reduced() const {
        if (num_.is_zero()) return *this;
        Polynomial n = num_, d = den_;
        for (const auto& r : polynomial_roots(d)) {
            for (int j = 0; j < r.multiplicity; ++j) {
                const double scale = n.max_abs_coeff() * (1.0 + std::pow(std::abs(r.location), std::max(0, n.degree())));
                if (n.degree() >= 1 && std::abs(n.eval(r.location)) < 1e-10 * (scale + 1.0)) {
                    n = n.deflate(r.location);
                    d = d.deflate(r.location);
                } else {
                    break;
                }
            }
        }
        return {std::move(n), std::move(d)};
    }

  private:
    Polynomial num_;
    Polynomial den_;
};

struct PartialFractions {
    Polynomial poly_part;
    std::vector<PrincipalPart> parts;

    cplx eval(cplx x) const {
        cplx s = poly_part.eval(x);
        for (const auto& p : parts) s += p.eval(x);
        return s;
    }
};

namespace detail {

// Reciprocal of a Taylor series (b0 != 0) to the requested number of terms.
inline std::vector<cplx> series_inverse(const std::vector<cplx>& b, int order) {
    std::vector<cplx> inv(std::size_t(order), 0.0);
    inv[0] = 1.0 / b[0];
    for (int k = 1; k < order; ++k) {
        cplx s = 0.0;
        for (int j = 1; j <= k; ++j)
            s += (j < int(b.size()) ? b[std::size_t(j)] : cplx(0.0)) * inv[std::size_t(k - j)];
        inv[std::size_t(k)] = -s / b[0];
    }
    return inv;
}

} // namespace detail

// Exact partial-fraction expansion of num/den. Pole locations may be supplied
// (with multiplicities) when known; otherwise they are recovered from den.
inline PartialFractions partial_fractions(const RationalFunction& R,
                                          const std::vector<RootWithMultiplicity>* known_poles = nullptr) {
    PartialFractions out;
    if (R.is_zero()) return out;
    auto [quo, rem] = R.num().divmod(R.den());
    out.poly_part = quo;
    if (rem.is_zero()) return out;

    std::vector<RootWithMultiplicity> poles =
        known_poles ? *known_poles : polynomial_roots(R.den());

    for (const auto& pole : poles) {
        // den = (x-a)^m * d2; the local expansion of rem/d2 at a gives the
        // principal coefficients: coeff of 1/(x-a)^j is h_{m-j}.
        Polynomial d2 = R.den();
        for (int j = 0; j < pole.multiplicity; ++j) d2 = d2.deflate(pole.location);
        std::vector<cplx> num_taylor = rem.taylor_at(pole.location);
        std::vector<cplx> den_taylor = d2.taylor_at(pole.location);
        if (den_taylor.empty() || std::abs(den_taylor[0]) == 0.0)
            throw InvalidInput("partial_fractions: repeated pole not fully separated");
        const int m = pole.multiplicity;
        std::vector<cplx> inv = detail::series_inverse(den_taylor, m);
        PrincipalPart pp;
        pp.pole = pole.location;
        pp.coeffs.resize(std::size_t(m));
        for (int j = 1; j <= m; ++j) {
            cplx h = 0.0; // h_{m-j} of rem/d2 at a
            const int idx = m - j;
            for (int i = 0; i <= idx; ++i)
                h += (i < int(num_taylor.size()) ? num_taylor[std::size_t(i)] : cplx(0.0)) *
                     inv[std::size_t(idx - i)];
            pp.coeffs[std::size_t(j - 1)] = h;
        }
        out.parts.push_back(std::move(pp));
    }
    return out;
}

} // namespace qdiff
