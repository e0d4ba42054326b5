#ifndef PPSTAT_GAF_POLYNOMIAL_HPP
#define PPSTAT_GAF_POLYNOMIAL_HPP

#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <vector>

#include "ppstat/core/error.hpp"

namespace ppstat::gaf {

using cplx = std::complex<double>;

struct HornerResult {
    cplx value;
    cplx derivative;
    /// sum |c_k| |z|^k, the scale of rounding error in `value`.
    double magnitude = 0.0;
};

/// p(z) = sum c_k z^k and p'(z) by Horner's rule.
inline HornerResult horner(std::span<const cplx> c, cplx z)
{
    HornerResult r{};
    if (c.empty()) {
        return r;
    }
    const double az = std::abs(z);
    cplx p = c.back();
    cplx dp = 0.0;
    double mag = std::abs(c.back());
    for (std::size_t k = c.size() - 1; k-- > 0;) {
        dp = dp * z + p;
        p = p * z + c[k];
        mag = mag * az + std::abs(c[k]);
    }
    r.value = p;
    r.derivative = dp;
    r.magnitude = mag;
    return r;
}

/// Newton correction p(z)/p'(z), evaluated through the reversed polynomial
/// when |z| > 1 so that z^N never overflows. `small` is set when |p(z)| is
/// within rounding error of zero.
struct NewtonStep {
    cplx correction;
    bool small = false;
};

inline NewtonStep newton_step(std::span<const cplx> c, cplx z)
{
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const std::size_t degree = c.size() - 1;
    NewtonStep s;
    if (std::abs(z) <= 1.0) {
        const auto h = horner(c, z);
        s.small = std::abs(h.value) <= 4.0 * eps * h.magnitude;
        s.correction = h.derivative == 0.0 ? cplx(0.0) : h.value / h.derivative;
        return s;
    }
    // q(w) = w^N p(1/w) has coefficients c reversed.
    const cplx w = 1.0 / z;
    const double aw = std::abs(w);
    cplx q = c.front();
    cplx dq = 0.0;
    double mag = std::abs(c.front());
    for (std::size_t k = 1; k <= degree; ++k) {
        dq = dq * w + q;
        q = q * w + c[k];
        mag = mag * aw + std::abs(c[k]);
    }
    s.small = std::abs(q) <= 4.0 * eps * mag;
    // p'/p = (N - w q'/q) / z  with  p(z) = z^N q(1/z).
    const cplx denom = static_cast<double>(degree) * q - w * dq;
    s.correction = denom == 0.0 ? cplx(0.0) : z * q / denom;
    return s;
}

/// Initial approximations on circles whose radii come from the upper convex
/// hull of (k, log|c_k|) (Newton polygon), as in Bini's MPSolve.
inline std::vector<cplx> newton_polygon_start(std::span<const cplx> c)
{
    const std::size_t n = c.size() - 1;
    std::vector<double> logs(c.size());
    for (std::size_t k = 0; k <= n; ++k) {
        const double a = std::abs(c[k]);
        logs[k] = a > 0.0 ? std::log(a) : -std::numeric_limits<double>::infinity();
    }
    std::vector<std::size_t> hull;
    for (std::size_t k = 0; k <= n; ++k) {
        if (!std::isfinite(logs[k])) {
            continue;
        }
        while (hull.size() >= 2) {
            const auto i = hull[hull.size() - 2];
            const auto j = hull.back();
            const double cross = (static_cast<double>(j) - static_cast<double>(i)) * (logs[k] - logs[i]) -
                                 (logs[j] - logs[i]) * (static_cast<double>(k) - static_cast<double>(i));
            if (cross >= 0.0) {
                hull.pop_back();
            } else {
                break;
            }
        }
        hull.push_back(k);
    }
    std::vector<cplx> z;
    z.reserve(n);
    constexpr double offset = 0.7;
    for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
        const auto i = hull[h];
        const auto j = hull[h + 1];
        const auto m = j - i;
        const double radius = std::exp((logs[i] - logs[j]) / static_cast<double>(m));
        for (std::size_t t = 0; t < m; ++t) {
            const double angle = 2.0 * M_PI * (static_cast<double>(t) / static_cast<double>(m) +
                                               static_cast<double>(h) / static_cast<double>(n)) +
                                 offset;
            z.push_back(std::polar(radius, angle));
        }
    }
    return z;
}

struct RootOptions {
    int max_iterations = 1000;
    double relative_tolerance = 1e-14;
};

struct Roots {
    std::vector<cplx> values;
    std::vector<bool> converged;
    int iterations = 0;
};

/// All roots of sum c_k z^k by Aberth-Ehrlich simultaneous iteration.
/// Zero low-order coefficients give exact roots at 0; trailing zero
/// high-order coefficients lower the degree.
inline Roots polynomial_roots(std::span<const cplx> coefficients, const RootOptions& options = {})
{
    std::size_t top = coefficients.size();
    while (top > 0 && coefficients[top - 1] == 0.0) {
        --top;
    }
    if (top == 0) {
        throw std::invalid_argument("polynomial_roots: zero polynomial");
    }
    std::size_t low = 0;
    while (coefficients[low] == 0.0) {
        ++low;
    }
    Roots out;
    out.values.assign(low, cplx(0.0));
    out.converged.assign(low, true);
    const std::span<const cplx> c = coefficients.subspan(low, top - low);
    const std::size_t n = c.size() - 1;
    if (n == 0) {
        return out;
    }
    if (n == 1) {
        out.values.push_back(-c[0] / c[1]);
        out.converged.push_back(true);
        return out;
    }
    std::vector<cplx> z = newton_polygon_start(c);
    std::vector<char> done(n, 0);
    std::size_t remaining = n;
    int it = 0;
    for (; it < options.max_iterations && remaining > 0; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            if (done[i]) {
                continue;
            }
            const NewtonStep step = newton_step(c, z[i]);
            if (step.small) {
                done[i] = 1;
                --remaining;
                continue;
            }
            cplx sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) {
                    sum += 1.0 / (z[i] - z[j]);
                }
            }
            const cplx correction = step.correction / (1.0 - step.correction * sum);
            z[i] -= correction;
            if (std::abs(correction) <= options.relative_tolerance * std::abs(z[i])) {
                done[i] = 1;
                --remaining;
            }
        }
    }
    out.iterations = it;
    for (std::size_t i = 0; i < n; ++i) {
        out.values.push_back(z[i]);
        out.converged.push_back(done[i] != 0);
    }
    return out;
}

} // namespace ppstat::gaf

#endif // PPSTAT_GAF_POLYNOMIAL_HPP
