#pragma once

// Memory-kernel representations and their reduction data. Exp-polynomial
// kernels M(t) = e^{at} (a_0 + a_1 t + ... + a_K t^K) close under
// differentiation, so they satisfy a constant-coefficient linear ODE of
// order K+1 (the companion system). Analytic kernels enter as explicit
// Taylor coefficient lists and are truncated to a polynomial before any
// cascade is built.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "memheat/errors.hpp"

namespace memheat {

struct Kernel {
    enum class Variant { Zero, ExpPoly, Taylor };

    Variant variant = Variant::Zero;
    double rate = 0.0;            // ExpPoly: a
    std::vector<double> coeffs;   // ExpPoly: a_0..a_K; Taylor: c_0..c_J
    double radius = 0.0;          // Taylor: validity radius R

    static Kernel zero() { return Kernel{}; }

    // Trailing zero coefficients are trimmed so the leading one is nonzero
    // unless the kernel is a constant.
    static Kernel exp_poly(double a, std::vector<double> c) {
        if (c.empty()) throw config_error("kernel.coeffs must be nonempty");
        while (c.size() > 1 && c.back() == 0.0) c.pop_back();
        Kernel k;
        k.variant = Variant::ExpPoly;
        k.rate = a;
        k.coeffs = std::move(c);
        return k;
    }

    static Kernel taylor(std::vector<double> c, double validity_radius) {
        if (c.empty()) throw config_error("kernel.coeffs must be nonempty");
        if (!(validity_radius > 0.0))
            throw config_error("kernel.radius must be positive, got " +
                               std::to_string(validity_radius));
        Kernel k;
        k.variant = Variant::Taylor;
        k.coeffs = std::move(c);
        k.radius = validity_radius;
        return k;
    }

    // Polynomial degree K (ExpPoly) or highest stored Taylor index J.
    [[nodiscard]] int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

// Constant-coefficient linear ODE satisfied by the kernel:
//   M^(m) = sum_{j<m} recurrence[j] * M^(j),  seeds[k] = M^(k)(0).
struct CompanionSystem {
    int order = 1;                   // m
    std::vector<double> recurrence;  // c_0..c_{m-1}
    std::vector<double> seeds;       // s_0..s_{m-1}
};

namespace detail {

// Horner evaluation of sum_j c_j t^j.
inline double eval_poly(const std::vector<double>& c, double t) {
    double v = 0.0;
    for (std::size_t j = c.size(); j-- > 0;) v = v * t + c[j];
    return v;
}

// Coefficients of d/dt [e^{at} p(t)] = e^{at} (a p + p'), polynomial part only.
inline std::vector<double> exp_poly_derivative(double a, const std::vector<double>& p) {
    std::vector<double> q(p.size(), 0.0);
    for (std::size_t j = 0; j < p.size(); ++j) {
        q[j] += a * p[j];
        if (j + 1 < p.size()) q[j] += (static_cast<double>(j) + 1.0) * p[j + 1];
    }
    while (q.size() > 1 && q.back() == 0.0) q.pop_back();
    return q;
}

}  // namespace detail

// Exact value of M^(r)(t). ExpPoly derivatives come from the closed-form
// product rule; Taylor kernels are differentiated termwise.
inline double eval_kernel(const Kernel& k, double t, int derivative_order = 0) {
    if (derivative_order < 0) throw usage_error("eval_kernel: derivative order must be >= 0");
    if (t < 0.0) throw usage_error("eval_kernel: t must be >= 0");
    switch (k.variant) {
        case Kernel::Variant::Zero:
            return 0.0;
        case Kernel::Variant::ExpPoly: {
            std::vector<double> p = k.coeffs;
            for (int r = 0; r < derivative_order; ++r)
                p = detail::exp_poly_derivative(k.rate, p);
            return std::exp(k.rate * t) * detail::eval_poly(p, t);
        }
        case Kernel::Variant::Taylor: {
            if (!(t < k.radius))
                throw usage_error("eval_kernel: t=" + std::to_string(t) +
                                  " outside validity radius R=" + std::to_string(k.radius));
            const int J = k.degree();
            const int r = derivative_order;
            if (r > J) return 0.0;
            std::vector<double> d(static_cast<std::size_t>(J - r) + 1);
            for (int j = r; j <= J; ++j) {
                double f = 1.0;  // j! / (j-r)!
                for (int q = j - r + 1; q <= j; ++q) f *= q;
                d[static_cast<std::size_t>(j - r)] = k.coeffs[static_cast<std::size_t>(j)] * f;
            }
            return detail::eval_poly(d, t);
        }
    }
    return 0.0;
}

// Minimal closure for exp-polynomial kernels: the characteristic polynomial
// is (lambda - a)^{K+1}, expanded with binomial coefficients, so
//   c_j = -binom(m, j) (-a)^{m-j},  m = K+1.
// The Zero kernel degenerates to the order-1 system M' = 0 with zero seed.
inline CompanionSystem companion(const Kernel& k) {
    if (k.variant == Kernel::Variant::Taylor)
        throw usage_error("companion: Taylor kernels must be truncated first");
    if (k.variant == Kernel::Variant::Zero) return CompanionSystem{1, {0.0}, {0.0}};

    const int m = k.degree() + 1;
    std::vector<double> rec(static_cast<std::size_t>(m));
    double binom = 1.0;  // binom(m, 0)
    double apow = 1.0;   // builds (-a)^{m-j} downward from exponent m
    for (int q = 0; q < m; ++q) apow *= -k.rate;
    for (int j = 0; j < m; ++j) {
        rec[static_cast<std::size_t>(j)] = -binom * apow;
        binom *= static_cast<double>(m - j) / (static_cast<double>(j) + 1.0);
        apow = (k.rate == 0.0) ? ((m - j - 1 == 0) ? 1.0 : 0.0) : apow / (-k.rate);
    }
    std::vector<double> seeds(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) seeds[static_cast<std::size_t>(r)] = eval_kernel(k, 0.0, r);
    return CompanionSystem{m, std::move(rec), std::move(seeds)};
}

// Plain Taylor polynomial of degree <= K as an ExpPoly with a = 0.
inline Kernel truncate(const Kernel& k, int K) {
    if (k.variant != Kernel::Variant::Taylor)
        throw usage_error("truncate: kernel is not a Taylor representation");
    if (K < 0) throw usage_error("truncate: K must be >= 0");
    if (K > k.degree())
        throw config_error("kernel.truncation K=" + std::to_string(K) +
                           " exceeds available Taylor coefficients J=" +
                           std::to_string(k.degree()));
    std::vector<double> c(k.coeffs.begin(), k.coeffs.begin() + K + 1);
    return Kernel::exp_poly(0.0, std::move(c));
}

// Sup-norm bound on [0, T] for the truncation remainder, from the stored
// coefficients: sum_{j>K} |c_j| T^j.
inline double truncation_tail_bound(const Kernel& k, int K, double T) {
    if (k.variant != Kernel::Variant::Taylor)
        throw usage_error("truncation_tail_bound: kernel is not a Taylor representation");
    double s = 0.0;
    for (int j = k.degree(); j > K; --j)
        s += std::abs(k.coeffs[static_cast<std::size_t>(j)]) * std::pow(T, j);
    return s;
}

}  // namespace memheat
