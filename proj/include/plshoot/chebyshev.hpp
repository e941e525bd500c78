#pragma once

// Chebyshev-Lobatto series on an interval [0, L]: node generation,
// value<->coefficient transforms, Clenshaw evaluation, antiderivative.
// Used by the startup module to represent functions that are smooth in
// the stretched variable y but not in t.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace plshoot {

class ChebSeries {
public:
    // Nodes y_j = L*(1 - cos(pi*j/n))/2, j = 0..n, ascending from 0 to L.
    static std::vector<double> nodes(std::size_t n, double length) {
        std::vector<double> y(n + 1);
        for (std::size_t j = 0; j <= n; ++j)
            y[j] = 0.5 * length * (1.0 - std::cos(M_PI * double(j) / double(n)));
        return y;
    }

    // Build from values at the ascending Lobatto nodes above.
    static ChebSeries from_values(const std::vector<double>& vals, double length) {
        const std::size_t n = vals.size() - 1;
        if (n < 1) throw std::invalid_argument("ChebSeries: need at least 2 nodes");
        ChebSeries s;
        s.length_ = length;
        s.coef_.assign(n + 1, 0.0);
        // Discrete cosine transform; node j maps to angle pi*(n-j)/n in the
        // standard descending ordering, handled by index reversal.
        for (std::size_t k = 0; k <= n; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j <= n; ++j) {
                const double w = (j == 0 || j == n) ? 0.5 : 1.0;
                acc += w * vals[n - j] * std::cos(M_PI * double(k) * double(j) / double(n));
            }
            s.coef_[k] = 2.0 * acc / double(n);
        }
        s.coef_[0] *= 0.5;
        s.coef_[n] *= 0.5;
        return s;
    }

    double length() const { return length_; }
    const std::vector<double>& coefficients() const { return coef_; }

    // Clenshaw evaluation at y in [0, L].
    double operator()(double y) const {
        const double x = 2.0 * y / length_ - 1.0;  // map to [-1, 1]
        double b1 = 0.0, b2 = 0.0;
        for (std::size_t k = coef_.size(); k-- > 1;) {
            const double b0 = 2.0 * x * b1 - b2 + coef_[k];
            b2 = b1;
            b1 = b0;
        }
        return x * b1 - b2 + coef_[0];
    }

    // Series of the antiderivative vanishing at y = 0.
    ChebSeries antiderivative() const {
        const std::size_t n = coef_.size() - 1;
        ChebSeries s;
        s.length_ = length_;
        s.coef_.assign(n + 2, 0.0);
        const double scale = length_ / 4.0;  // dy = (L/2) dx, and 1/2 from the recurrence
        auto c = [&](std::size_t k) { return k <= n ? coef_[k] : 0.0; };
        for (std::size_t k = 2; k <= n + 1; ++k)
            s.coef_[k] = scale * (c(k - 1) - c(k + 1)) / double(k);
        s.coef_[1] = scale * (2.0 * c(0) - c(2));
        // fix constant so that value at y=0 (x=-1) is zero
        double v0 = 0.0;
        for (std::size_t k = 0; k < s.coef_.size(); ++k)
            v0 += s.coef_[k] * ((k % 2 == 0) ? 1.0 : -1.0);
        s.coef_[0] -= v0;
        return s;
    }

    // Series of the derivative.
    ChebSeries derivative() const {
        const std::size_t n = coef_.size() - 1;
        ChebSeries s;
        s.length_ = length_;
        s.coef_.assign(n == 0 ? 1 : n, 0.0);
        if (n == 0) return s;
        std::vector<double> d(n + 2, 0.0);
        for (std::size_t k = n; k >= 1; --k)
            d[k - 1] = d[k + 1] + 2.0 * double(k) * coef_[k];
        d[0] *= 0.5;
        const double scale = 2.0 / length_;  // dx/dy
        for (std::size_t k = 0; k < n; ++k) s.coef_[k] = scale * d[k];
        return s;
    }

private:
    double length_ = 1.0;
    std::vector<double> coef_;
};

}  // namespace plshoot
