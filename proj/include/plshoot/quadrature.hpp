#pragma once

// Thin quadrature helpers shared across modules. The heavy lifting is
// delegated to Boost.Math; the one domain-specific piece is the treatment
// of power-law endpoint singularities x^{-sigma} with 0 < sigma < 1, which
// are removed exactly by the substitution u = x^{1-sigma}.

#include <cmath>
#include <functional>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace plshoot {

inline double integrate_smooth(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-13) {
    if (a == b) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, tol);
}

// Adaptive scheme tolerant of endpoint derivative singularities.
inline double integrate_endpoint_singular(const std::function<double(double)>& f, double a,
                                          double b, double tol = 1e-13) {
    if (a == b) return 0.0;
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(f, a, b, tol);
}

// Integral of x^{-sigma} * phi(x) over [0, b], phi continuous at 0 and
// 0 < sigma < 1. Exact change of variables u = x^{1-sigma}:
//   I = 1/(1-sigma) * int_0^{b^{1-sigma}} phi(u^{1/(1-sigma)}) du.
inline double integrate_power_singular(const std::function<double(double)>& phi, double sigma,
                                       double b, double tol = 1e-13) {
    if (b <= 0.0) return 0.0;
    if (sigma <= 0.0) {
        return integrate_smooth([&](double x) { return std::pow(x, -sigma) * phi(x); }, 0.0, b,
                                tol);
    }
    if (sigma >= 1.0) throw std::domain_error("integrate_power_singular: sigma must be < 1");
    const double q = 1.0 - sigma;
    const double U = std::pow(b, q);
    auto g = [&](double u) { return phi(std::pow(u, 1.0 / q)); };
    return integrate_endpoint_singular(g, 0.0, U, tol) / q;
}

}  // namespace plshoot
