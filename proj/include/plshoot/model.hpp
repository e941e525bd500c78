#pragma once

// Problem family for the exterior p-Laplacian shooting solver:
// parameter validation, the t-domain weight h, the canonical singular
// nonlinearity, and the derived constants used throughout.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "plshoot/quadrature.hpp"

#include <boost/math/tools/toms748_solve.hpp>

namespace plshoot {

// Odd power map |x|^{p-2} x and its inverse |y|^{1/(p-1)} sign(y).
inline double phi_p(double x, double p) {
    if (x == 0.0) return 0.0;
    return std::pow(std::fabs(x), p - 2.0) * x;
}

inline double phi_inv(double y, double p) {
    if (y == 0.0) return 0.0;
    return std::pow(std::fabs(y), 1.0 / (p - 1.0)) * (y > 0.0 ? 1.0 : -1.0);
}

struct ProblemParams {
    double p = 3.0;
    int N = 5;
    double m = 0.5;
    double l = 3.0;
    double R = 1.0;
    double K0 = 1.0;
    double K1 = 1.0;
    double alpha = 5.75;
    double alpha1 = 5.75;
};

struct ValidationReport {
    bool accepted = false;
    std::vector<std::string> violations;

    std::string summary() const {
        if (accepted) return "accept";
        std::string s = "reject:";
        for (const auto& v : violations) s += " [" + v + "]";
        return s;
    }
};

inline ValidationReport validate_params(const ProblemParams& pp) {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(pp.p) || !finite(pp.m) || !finite(pp.l) || !finite(pp.R) || !finite(pp.K0) ||
        !finite(pp.K1) || !finite(pp.alpha) || !finite(pp.alpha1))
        throw std::domain_error("validate_params: non-finite input");

    ValidationReport rep;
    auto need = [&](bool ok, const std::string& clause) {
        if (!ok) rep.violations.push_back(clause);
    };
    need(pp.N > 2, "N > 2");
    need(pp.p > 1.0, "p > 1");
    need(pp.p < double(pp.N), "p < N");
    need(pp.m > 0.0 && pp.m < 1.0, "0 < m < 1");
    need(pp.l > pp.p - 1.0, "l > p - 1");
    need(pp.R > 0.0, "R > 0");
    need(pp.K0 > 0.0 && pp.K1 > 0.0, "K0 > 0, K1 > 0");
    const double Nd = double(pp.N);
    need(Nd + pp.m * (Nd - pp.p) / (pp.p - 1.0) < pp.alpha1,
         "N + m(N-p)/(p-1) < alpha1");
    need(pp.alpha1 <= pp.alpha, "alpha1 <= alpha");
    need(pp.alpha < 2.0 * (Nd - 1.0), "alpha < 2(N-1)");
    // Pure-power weight form of the (H4) derivative clause; also forces
    // alpha_tilde > 0 and h' < 0.
    need(pp.alpha < pp.p * (Nd - 1.0) / (pp.p - 1.0), "rK'/K > -(N-1)p/(p-1)");
    rep.accepted = rep.violations.empty();
    return rep;
}

// f(u) with the singular/small-u and superlinear/large-u decompositions
// declared explicitly. g2 is the locally Lipschitz remainder of the small-u
// split f(u) = -u/|u|^{m+1} + g2(u), valid for |u| <= u_small.
class Nonlinearity {
public:
    virtual ~Nonlinearity() = default;
    virtual double f(double u) const = 0;
    virtual double F(double u) const = 0;
    virtual double g2(double u) const = 0;
    virtual double u_small() const = 0;
    virtual bool canonical() const { return false; }
    virtual double beta() const = 0;
    virtual double gamma() const = 0;
};

// The closed-form family f(u) = |u|^{l-1}u - u/|u|^{m+1}. The decomposition
// thresholds are infinite: both splits hold globally.
class CanonicalNonlinearity final : public Nonlinearity {
public:
    CanonicalNonlinearity(double m, double l) : m_(m), l_(l) {}

    double f(double u) const override {
        if (u == 0.0) throw std::domain_error("f(0) is undefined (singular point)");
        const double au = std::fabs(u);
        const double s = u > 0.0 ? 1.0 : -1.0;
        return s * (std::pow(au, l_) - std::pow(au, -m_));
    }

    double F(double u) const override {
        if (u == 0.0) return 0.0;
        const double au = std::fabs(u);
        return std::pow(au, l_ + 1.0) / (l_ + 1.0) - std::pow(au, 1.0 - m_) / (1.0 - m_);
    }

    double g2(double u) const override {
        if (u == 0.0) return 0.0;
        return std::pow(std::fabs(u), l_ - 1.0) * u;
    }

    double u_small() const override { return std::numeric_limits<double>::infinity(); }
    bool canonical() const override { return true; }

    double beta() const override { return 1.0; }
    double gamma() const override {
        return std::pow((l_ + 1.0) / (1.0 - m_), 1.0 / (l_ + m_));
    }

private:
    double m_, l_;
};

// Weight in the transformed coordinate t = r^{(p-N)/(p-1)}.
class Weight {
public:
    virtual ~Weight() = default;
    virtual double h(double t) const = 0;
    virtual double hprime(double t) const = 0;
};

// K(r) = K0 r^{-alpha}  =>  h(t) = K0 ((p-1)/(N-p))^p t^{-alpha_tilde}.
class PurePowerWeight final : public Weight {
public:
    PurePowerWeight(const ProblemParams& pp) {
        const double Nd = double(pp.N);
        at_ = (pp.p * (Nd - 1.0) - pp.alpha * (pp.p - 1.0)) / (Nd - pp.p);
        c_ = pp.K0 * std::pow((pp.p - 1.0) / (Nd - pp.p), pp.p);
    }
    double h(double t) const override { return c_ * std::pow(t, -at_); }
    double hprime(double t) const override { return -at_ * c_ * std::pow(t, -at_ - 1.0); }

private:
    double at_, c_;
};

// h computed from a user-supplied K(r), K'(r) through the change of
// variables; used to cross-check the closed form and to support
// non-power weights programmatically.
class GeneralWeight final : public Weight {
public:
    GeneralWeight(const ProblemParams& pp, std::function<double(double)> K,
                  std::function<double(double)> Kprime)
        : K_(std::move(K)), Kp_(std::move(Kprime)) {
        const double Nd = double(pp.N);
        cp_ = std::pow((pp.p - 1.0) / (Nd - pp.p), pp.p);
        e_pref_ = pp.p * (Nd - 1.0) / (pp.p - Nd);   // exponent of t in the prefactor
        e_r_ = (pp.p - 1.0) / (pp.p - Nd);           // r = t^{e_r}
    }
    double h(double t) const override {
        return cp_ * std::pow(t, e_pref_) * K_(std::pow(t, e_r_));
    }
    double hprime(double t) const override {
        const double r = std::pow(t, e_r_);
        return cp_ * (e_pref_ * std::pow(t, e_pref_ - 1.0) * K_(r) +
                      std::pow(t, e_pref_) * Kp_(r) * e_r_ * std::pow(t, e_r_ - 1.0));
    }

private:
    std::function<double(double)> K_, Kp_;
    double cp_, e_pref_, e_r_;
};

struct DerivedConstants {
    double alpha_tilde = 0.0;
    double alpha_tilde1 = 0.0;
    double T_end = 0.0;
    double h0 = 0.0;
    double h1 = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double F0 = 0.0;   // F >= -F0
    double f0 = 0.0;   // |u|^{m-1} u f(u) >= -f0
};

inline DerivedConstants derived_constants(const ProblemParams& pp, const Nonlinearity& nl) {
    DerivedConstants d;
    const double Nd = double(pp.N);
    d.alpha_tilde = (pp.p * (Nd - 1.0) - pp.alpha * (pp.p - 1.0)) / (Nd - pp.p);
    d.alpha_tilde1 = (pp.p * (Nd - 1.0) - pp.alpha1 * (pp.p - 1.0)) / (Nd - pp.p);
    d.T_end = std::pow(pp.R, (pp.p - Nd) / (pp.p - 1.0));
    const double cp = std::pow((pp.p - 1.0) / (Nd - pp.p), pp.p);
    d.h0 = pp.K0 * cp;
    d.h1 = pp.K1 * cp;
    d.beta = nl.beta();
    d.gamma = nl.gamma();
    d.F0 = -nl.F(d.beta);  // minimum of F on (0, inf) is at beta
    if (nl.canonical()) {
        d.f0 = 1.0;  // |u|^{m+l} - 1 >= -1
    } else {
        // sample-based bound; user models assert (H3) themselves
        double worst = 0.0;
        for (int i = 1; i <= 400; ++i) {
            const double u = 1e-4 * std::pow(1e8, i / 400.0);
            worst = std::min(worst, std::pow(u, pp.m) * nl.f(u));
        }
        d.f0 = -worst;
    }
    return d;
}

// Immutable bundle handed to the numerical modules.
struct Problem {
    ProblemParams params;
    DerivedConstants consts;
    std::shared_ptr<const Nonlinearity> nonlinearity;
    std::shared_ptr<const Weight> weight;

    double T_end() const { return consts.T_end; }
    double f(double u) const { return nonlinearity->f(u); }
    double F(double u) const { return nonlinearity->F(u); }
    double h(double t) const {
        if (t <= 0.0 || t > consts.T_end * (1.0 + 1e-12))
            throw std::domain_error("weight_eval: t outside (0, T_end]");
        return weight->h(t);
    }
    double hprime(double t) const {
        if (t <= 0.0 || t > consts.T_end * (1.0 + 1e-12))
            throw std::domain_error("weight_eval: t outside (0, T_end]");
        return weight->hprime(t);
    }
};

inline Problem make_canonical_problem(const ProblemParams& pp) {
    const auto rep = validate_params(pp);
    if (!rep.accepted)
        throw std::invalid_argument("make_canonical_problem: params rejected: " + rep.summary());
    Problem prob;
    prob.params = pp;
    prob.nonlinearity = std::make_shared<CanonicalNonlinearity>(pp.m, pp.l);
    prob.weight = std::make_shared<PurePowerWeight>(pp);
    prob.consts = derived_constants(pp, *prob.nonlinearity);
    return prob;
}

}  // namespace plshoot
