#pragma once

// Kernels for symmetric tridiagonal pencils A u = lambda B u with B diagonal
// and positive: Sturm counts, bisection + inverse iteration for the lowest
// eigenpairs, deflated shifted solves and Richardson extrapolation.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"

namespace cmcslab {

/// Tolerances shared by the spectral kernels.
struct SpectralConfig {
    double eig_tol = 1e-10;      ///< bisection width, relative to 1 + |lambda|
    double residual_cap = 1e-8;  ///< ||Au - lambda Bu|| <= cap ||A|| ||u|| (infinity norms)
    int max_restarts = 5;        ///< inverse-iteration restarts before giving up
    int inverse_iterations = 4;
};

/// A (symmetric tridiagonal: diag, off) and B (positive diagonal: mass).
class TridiagonalPencil {
public:
    TridiagonalPencil() = default;

    TridiagonalPencil(std::vector<double> diag, std::vector<double> off, std::vector<double> mass)
        : diag_(std::move(diag)), off_(std::move(off)), mass_(std::move(mass))
    {
        if (diag_.empty()) {
            throw std::invalid_argument("TridiagonalPencil: empty matrix");
        }
        if (off_.size() + 1 != diag_.size() || mass_.size() != diag_.size()) {
            throw std::invalid_argument("TridiagonalPencil: inconsistent sizes");
        }
        for (double b : mass_) {
            if (!(b > 0.0) || !std::isfinite(b)) {
                throw std::invalid_argument("TridiagonalPencil: mass entries must be positive");
            }
        }
    }

    std::size_t size() const noexcept { return diag_.size(); }
    const std::vector<double>& diag() const noexcept { return diag_; }
    const std::vector<double>& off() const noexcept { return off_; }
    const std::vector<double>& mass() const noexcept { return mass_; }

    /// y = A x
    std::vector<double> apply(std::span<const double> x) const
    {
        const std::size_t n = size();
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double v = diag_[i] * x[i];
            if (i > 0) {
                v += off_[i - 1] * x[i - 1];
            }
            if (i + 1 < n) {
                v += off_[i] * x[i + 1];
            }
            y[i] = v;
        }
        return y;
    }

    double norm_inf() const noexcept
    {
        double best = 0.0;
        for (std::size_t i = 0; i < size(); ++i) {
            double row = std::abs(diag_[i]);
            if (i > 0) {
                row += std::abs(off_[i - 1]);
            }
            if (i < off_.size()) {
                row += std::abs(off_[i]);
            }
            best = std::max(best, row);
        }
        return best;
    }

    /// <x, y>_B
    double inner(std::span<const double> x, std::span<const double> y) const noexcept
    {
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) {
            s += mass_[i] * x[i] * y[i];
        }
        return s;
    }

private:
    std::vector<double> diag_;
    std::vector<double> off_;
    std::vector<double> mass_;
};

struct Eigenpair {
    double lambda = 0.0;
    std::vector<double> vector; ///< B-normalized
};

namespace detail {

inline double norm_inf(std::span<const double> x) noexcept
{
    double m = 0.0;
    for (double v : x) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

/// LU factorization with partial pivoting of a general tridiagonal matrix
/// (the dgttrf/dgtts2 scheme). Pivots smaller than `pivot_floor` are replaced
/// by +-pivot_floor and flagged.
class TridiagonalLU {
public:
    TridiagonalLU(std::vector<double> sub, std::vector<double> diag, std::vector<double> sup,
                  double pivot_floor)
        : dl_(std::move(sub)), d_(std::move(diag)), du_(std::move(sup))
    {
        const std::size_t n = d_.size();
        du2_.assign(n > 2 ? n - 2 : 0, 0.0);
        swapped_.assign(n > 1 ? n - 1 : 0, false);
        auto guard = [&](double& p) {
            if (std::abs(p) < pivot_floor) {
                p = p < 0.0 ? -pivot_floor : pivot_floor;
                guarded_ = true;
            }
        };
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (std::abs(d_[i]) >= std::abs(dl_[i])) {
                guard(d_[i]);
                const double fact = dl_[i] / d_[i];
                dl_[i] = fact;
                d_[i + 1] -= fact * du_[i];
            } else {
                const double fact = d_[i] / dl_[i];
                d_[i] = dl_[i];
                dl_[i] = fact;
                const double temp = du_[i];
                du_[i] = d_[i + 1];
                d_[i + 1] = temp - fact * d_[i + 1];
                if (i + 2 < n) {
                    du2_[i] = du_[i + 1];
                    du_[i + 1] = -fact * du_[i + 1];
                }
                swapped_[i] = true;
            }
        }
        guard(d_[n - 1]);
    }

    bool guarded() const noexcept { return guarded_; }

    void solve(std::span<double> b) const
    {
        const std::size_t n = d_.size();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (!swapped_[i]) {
                b[i + 1] -= dl_[i] * b[i];
            } else {
                const double temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - dl_[i] * b[i];
            }
        }
        b[n - 1] /= d_[n - 1];
        if (n > 1) {
            b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
        }
        for (std::size_t k = n < 2 ? 0 : n - 2; k-- > 0;) {
            b[k] = (b[k] - du_[k] * b[k + 1] - du2_[k] * b[k + 2]) / d_[k];
        }
    }

private:
    std::vector<double> dl_, d_, du_, du2_;
    std::vector<bool> swapped_;
    bool guarded_ = false;
};

/// Symmetric reduction C = B^{-1/2} A B^{-1/2}.
struct ScaledMatrix {
    std::vector<double> diag;
    std::vector<double> off;
    std::vector<double> inv_sqrt_mass;

    explicit ScaledMatrix(const TridiagonalPencil& p)
    {
        const std::size_t n = p.size();
        inv_sqrt_mass.resize(n);
        diag.resize(n);
        off.resize(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            inv_sqrt_mass[i] = 1.0 / std::sqrt(p.mass()[i]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            diag[i] = p.diag()[i] * inv_sqrt_mass[i] * inv_sqrt_mass[i];
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            off[i] = p.off()[i] * inv_sqrt_mass[i] * inv_sqrt_mass[i + 1];
        }
    }

    std::pair<double, double> gershgorin() const
    {
        double lo = std::numeric_limits<double>::max();
        double hi = std::numeric_limits<double>::lowest();
        for (std::size_t i = 0; i < diag.size(); ++i) {
            double r = 0.0;
            if (i > 0) {
                r += std::abs(off[i - 1]);
            }
            if (i < off.size()) {
                r += std::abs(off[i]);
            }
            lo = std::min(lo, diag[i] - r);
            hi = std::max(hi, diag[i] + r);
        }
        const double pad = 1e-10 * (hi - lo) + 1e-300 + 4 * std::numeric_limits<double>::epsilon() *
                                                           std::max(std::abs(lo), std::abs(hi));
        return {lo - pad, hi + pad};
    }

    double norm_inf() const noexcept
    {
        double best = 0.0;
        for (std::size_t i = 0; i < diag.size(); ++i) {
            double row = std::abs(diag[i]);
            if (i > 0) {
                row += std::abs(off[i - 1]);
            }
            if (i < off.size()) {
                row += std::abs(off[i]);
            }
            best = std::max(best, row);
        }
        return best;
    }
};

inline double start_component(std::size_t i, int seed) noexcept
{
    return 1.0 + 0.5 * std::sin(0.6180339887 * static_cast<double>(i + 1) + 1.7 * seed);
}

} // namespace detail

/// Number of eigenvalues of the pencil strictly below `shift` (Sylvester
/// inertia of the LDL^T factorization of A - shift B).
inline std::size_t sturm_count(const TridiagonalPencil& pencil, double shift)
{
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const auto& a = pencil.diag();
    const auto& e = pencil.off();
    const auto& b = pencil.mass();
    std::size_t count = 0;
    double q = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double base = a[i] - shift * b[i];
        q = i == 0 ? base : base - e[i - 1] * e[i - 1] / q;
        if (q == 0.0) {
            const double scale = std::abs(a[i]) + std::abs(shift * b[i]) + (i > 0 ? std::abs(e[i - 1]) : 0.0);
            q = -eps * std::max(scale, std::numeric_limits<double>::min());
        }
        if (q < 0.0) {
            ++count;
        }
    }
    return count;
}

/// The k smallest eigenpairs of A u = lambda B u, ascending. Eigenvalues come
/// from Sturm bisection, vectors from inverse iteration on the symmetric
/// reduction, orthogonalized against earlier vectors and B-normalized.
inline std::vector<Eigenpair> eig_lowest(const TridiagonalPencil& pencil, std::size_t k,
                                         const SpectralConfig& config = {})
{
    const std::size_t n = pencil.size();
    if (k > n) {
        throw std::domain_error("eig_lowest: k exceeds the pencil size");
    }
    if (!(config.eig_tol > 0.0)) {
        throw std::domain_error("eig_lowest: tolerance must be positive");
    }
    const detail::ScaledMatrix c(pencil);
    const auto [glo, ghi] = c.gershgorin();
    const double cnorm = c.norm_inf();
    const double anorm = pencil.norm_inf();
    constexpr double eps = std::numeric_limits<double>::epsilon();

    std::vector<Eigenpair> result;
    result.reserve(k);
    std::vector<std::vector<double>> basis; // scaled-space vectors, orthonormal
    double lower = glo;
    for (std::size_t idx = 0; idx < k; ++idx) {
        double lo = lower;
        double hi = ghi;
        for (int it = 0; it < 400; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (hi - lo <= config.eig_tol * (1.0 + std::abs(mid)) || mid == lo || mid == hi) {
                break;
            }
            if (sturm_count(pencil, mid) <= idx) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        const double lambda = 0.5 * (lo + hi);
        lower = lo;

        std::vector<double> sub(n - 1), sup(n - 1), dia(n);
        for (std::size_t i = 0; i < n; ++i) {
            dia[i] = c.diag[i] - lambda;
        }
        std::copy(c.off.begin(), c.off.end(), sub.begin());
        std::copy(c.off.begin(), c.off.end(), sup.begin());
        const detail::TridiagonalLU lu(sub, dia, sup, eps * std::max(cnorm, 1e-300));

        bool converged = false;
        double last_residual = 0.0;
        std::vector<double> x(n);
        std::vector<double> u(n);
        for (int attempt = 0; attempt <= config.max_restarts && !converged; ++attempt) {
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = detail::start_component(i, static_cast<int>(idx) + 7 * attempt);
            }
            for (int it = 0; it < config.inverse_iterations; ++it) {
                lu.solve(x);
                for (const auto& q : basis) {
                    double dot = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        dot += q[i] * x[i];
                    }
                    for (std::size_t i = 0; i < n; ++i) {
                        x[i] -= dot * q[i];
                    }
                }
                double nrm = 0.0;
                for (double v : x) {
                    nrm += v * v;
                }
                nrm = std::sqrt(nrm);
                if (!(nrm > 0.0) || !std::isfinite(nrm)) {
                    break;
                }
                for (double& v : x) {
                    v /= nrm;
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                u[i] = x[i] * c.inv_sqrt_mass[i];
            }
            const auto au = pencil.apply(u);
            double res = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                res = std::max(res, std::abs(au[i] - lambda * pencil.mass()[i] * u[i]));
            }
            last_residual = res;
            converged = std::isfinite(res) && res <= config.residual_cap * anorm * detail::norm_inf(u);
        }
        if (!converged) {
            std::ostringstream msg;
            msg << "eig_lowest: inverse iteration did not converge for eigenvalue #" << idx
                << " (lambda=" << lambda << ", residual=" << last_residual << ", ||A||=" << anorm
                << ", restarts=" << config.max_restarts << ")";
            throw solver_failure(msg.str());
        }
        // Deterministic sign: largest-magnitude component positive.
        std::size_t imax = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (std::abs(u[i]) > std::abs(u[imax])) {
                imax = i;
            }
        }
        if (u[imax] < 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                u[i] = -u[i];
                x[i] = -x[i];
            }
        }
        // The Rayleigh quotient is second-order accurate in the vector error;
        // clamping to the bisection bracket keeps Sturm counts consistent.
        const auto au = pencil.apply(u);
        double num = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num += u[i] * au[i];
        }
        const double rq = num / pencil.inner(u, u);
        const double refined = std::isfinite(rq) ? std::clamp(rq, lo, hi) : lambda;
        basis.push_back(x);
        result.push_back({refined, u});
    }
    return result;
}

/// Solves (A - shift B) u = B rhs on the B-orthogonal complement of the
/// deflation vectors: rhs and iterates are projected, the solution is refined
/// until the projected residual stalls. Throws solver_failure when the shifted
/// matrix is singular in a direction outside the deflation span.
inline std::vector<double> solve_deflated(const TridiagonalPencil& pencil, double shift,
                                          std::span<const double> rhs,
                                          std::span<const std::vector<double>> deflation = {})
{
    const std::size_t n = pencil.size();
    if (rhs.size() != n) {
        throw std::invalid_argument("solve_deflated: rhs size mismatch");
    }
    constexpr double eps = std::numeric_limits<double>::epsilon();

    std::vector<std::vector<double>> g;
    for (const auto& d : deflation) {
        if (d.size() != n) {
            throw std::invalid_argument("solve_deflated: deflation vector size mismatch");
        }
        std::vector<double> v = d;
        for (const auto& q : g) {
            const double dot = pencil.inner(q, v);
            for (std::size_t i = 0; i < n; ++i) {
                v[i] -= dot * q[i];
            }
        }
        const double nrm = std::sqrt(pencil.inner(v, v));
        if (nrm > 1e-12 * std::sqrt(pencil.inner(d, d))) {
            for (double& x : v) {
                x /= nrm;
            }
            g.push_back(std::move(v));
        }
    }
    auto project = [&](std::vector<double>& x) {
        for (const auto& q : g) {
            const double dot = pencil.inner(q, x);
            for (std::size_t i = 0; i < n; ++i) {
                x[i] -= dot * q[i];
            }
        }
    };
    auto project_dual = [&](std::vector<double>& r) {
        for (const auto& q : g) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                dot += q[i] * r[i];
            }
            for (std::size_t i = 0; i < n; ++i) {
                r[i] -= dot * pencil.mass()[i] * q[i];
            }
        }
    };

    std::vector<double> dia(n), sub(pencil.off()), sup(pencil.off());
    for (std::size_t i = 0; i < n; ++i) {
        dia[i] = pencil.diag()[i] - shift * pencil.mass()[i];
    }
    double mnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = std::abs(dia[i]);
        if (i > 0) {
            row += std::abs(sub[i - 1]);
        }
        if (i + 1 < n) {
            row += std::abs(sup[i]);
        }
        mnorm = std::max(mnorm, row);
    }
    const detail::TridiagonalLU lu(sub, dia, sup, 16 * eps * std::max(mnorm, 1e-300));

    if (lu.guarded()) {
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) {
            z[i] = detail::start_component(i, 3);
        }
        lu.solve(z);
        const double full = std::sqrt(pencil.inner(z, z));
        project(z);
        const double outside = std::sqrt(pencil.inner(z, z));
        if (!(outside <= 1e-6 * full)) {
            throw solver_failure("solve_deflated: shifted matrix is singular beyond the deflated subspace");
        }
    }

    std::vector<double> b(rhs.begin(), rhs.end());
    project(b);
    for (std::size_t i = 0; i < n; ++i) {
        b[i] *= pencil.mass()[i];
    }
    const double bnorm = detail::norm_inf(b);

    auto residual = [&](const std::vector<double>& u) {
        std::vector<double> r = pencil.apply(u);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = b[i] - (r[i] - shift * pencil.mass()[i] * u[i]);
        }
        project_dual(r);
        return r;
    };

    std::vector<double> u = b;
    lu.solve(u);
    project(u);
    for (int it = 0; it < 10; ++it) {
        auto r = residual(u);
        if (detail::norm_inf(r) <= 4 * eps * (mnorm * detail::norm_inf(u) + bnorm)) {
            break;
        }
        lu.solve(r);
        project(r);
        for (std::size_t i = 0; i < n; ++i) {
            u[i] += r[i];
        }
    }
    const double rnorm = detail::norm_inf(residual(u));
    if (!std::isfinite(rnorm) || rnorm > 1e-10 * (mnorm * detail::norm_inf(u) + bnorm)) {
        std::ostringstream msg;
        msg << "solve_deflated: projected residual " << rnorm << " exceeds tolerance";
        throw solver_failure(msg.str());
    }
    return u;
}

/// Solves L u = 1 for the pencil of -L (A u = -B 1) on the deflated complement.
inline std::vector<double> solve_jacobi_unit(const TridiagonalPencil& pencil,
                                             std::span<const std::vector<double>> deflation = {})
{
    const std::vector<double> minus_one(pencil.size(), -1.0);
    return solve_deflated(pencil, 0.0, minus_one, deflation);
}

/// Richardson extrapolation of a sequence computed on grids m, 2m, 4m, ...
struct Extrapolation {
    double value = 0.0;
    double error_estimate = 0.0;
    double observed_order = std::numeric_limits<double>::quiet_NaN();
    bool monotone = true;
    std::vector<int> grids;
    std::vector<double> values;
    std::string warning;
};

/// Order-2 Richardson on values from successively halved grids. Exactly
/// converged sequences (differences at roundoff level) return the finest value.
inline Extrapolation richardson(std::vector<double> values, std::vector<int> grids = {})
{
    if (values.size() < 3) {
        throw std::domain_error("richardson: need at least 3 levels");
    }
    Extrapolation ex;
    ex.values = std::move(values);
    ex.grids = std::move(grids);
    const auto& v = ex.values;
    const std::size_t last = v.size() - 1;

    double scale = 0.0;
    for (double x : v) {
        scale = std::max(scale, std::abs(x));
    }
    const double noise = 64 * std::numeric_limits<double>::epsilon() * std::max(scale, 1e-300);
    std::vector<double> d(last);
    int sign = 0;
    for (std::size_t i = 0; i < last; ++i) {
        d[i] = v[i] - v[i + 1];
        if (std::abs(d[i]) <= noise) {
            continue;
        }
        const int s = d[i] > 0 ? 1 : -1;
        if (sign != 0 && s != sign) {
            ex.monotone = false;
        }
        sign = s;
    }
    if (sign == 0) {
        ex.value = v[last];
        ex.error_estimate = 0.0;
        return ex;
    }
    const double d1 = d[last - 2];
    const double d2 = d[last - 1];
    if (std::abs(d2) > noise && std::abs(d1) > noise) {
        ex.observed_order = std::log2(d1 / d2);
    }
    if (!ex.monotone) {
        ex.warning = "non-monotone convergence; returning finest-grid value";
        ex.value = v[last];
        ex.error_estimate = std::abs(d2);
        return ex;
    }
    ex.value = v[last] - d2 / 3.0;
    const double previous = v[last - 1] - d1 / 3.0;
    ex.error_estimate = std::abs(ex.value - previous);
    return ex;
}

/// Evaluates `build(m)` on grids base_m * 2^i, i < levels, and extrapolates.
template <class Builder>
    requires std::invocable<Builder&, int>
Extrapolation refine_extrapolate(Builder&& build, int base_m, int levels)
{
    if (levels < 3) {
        throw std::domain_error("refine_extrapolate: levels must be >= 3");
    }
    if (base_m < 1) {
        throw std::domain_error("refine_extrapolate: base grid must be positive");
    }
    std::vector<double> values;
    std::vector<int> grids;
    int m = base_m;
    for (int i = 0; i < levels; ++i, m *= 2) {
        grids.push_back(m);
        values.push_back(static_cast<double>(build(m)));
    }
    return richardson(std::move(values), std::move(grids));
}

} // namespace cmcslab
