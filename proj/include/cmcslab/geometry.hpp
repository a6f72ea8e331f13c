#pragma once

// Model spaces M^n(kappa), geodesic spheres (tube bases) and slab boundaries.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "spectrum.hpp"

namespace cmcslab {

/// Simply connected space form: hyperbolic (kappa=-1), Euclidean (0) or round
/// sphere (+1) of dimension n >= 2. Other constant curvatures reduce to these
/// by rescaling lengths.
class SpaceForm {
public:
    SpaceForm(int kappa, int n) : kappa_(kappa), n_(n)
    {
        if (kappa < -1 || kappa > 1) {
            throw std::domain_error("SpaceForm: kappa must be -1, 0 or +1");
        }
        if (n < 2) {
            throw std::domain_error("SpaceForm: dimension n must be >= 2");
        }
    }

    int kappa() const noexcept { return kappa_; }
    int dim() const noexcept { return n_; }

    friend bool operator==(const SpaceForm&, const SpaceForm&) = default;

private:
    int kappa_;
    int n_;
};

struct SnCt {
    double sn; ///< radius of the geodesic sphere of radius r, as seen intrinsically
    double ct; ///< its principal curvature cn/sn
};

namespace detail {

inline void check_radius(const SpaceForm& m, double r, const char* who)
{
    if (!(r > 0.0)) {
        throw std::domain_error(std::string(who) + ": radius must be positive");
    }
    if (m.kappa() == 1 && !(r < std::numbers::pi)) {
        throw std::domain_error(std::string(who) + ": radius must be < pi on the sphere");
    }
}

inline bool is_equator(const SpaceForm& m, double r) noexcept
{
    return m.kappa() == 1 && r == std::numbers::pi / 2;
}

} // namespace detail

/// sn_kappa and ct_kappa = cn/sn. Throws std::domain_error outside the range.
inline SnCt sn_ct(const SpaceForm& m, double r)
{
    detail::check_radius(m, r, "sn_ct");
    switch (m.kappa()) {
    case -1:
        return {std::sinh(r), 1.0 / std::tanh(r)};
    case 0:
        return {r, 1.0 / r};
    default:
        if (detail::is_equator(m, r)) {
            return {1.0, 0.0};
        }
        return {std::sin(r), std::cos(r) / std::sin(r)};
    }
}

/// Orbit radius sn_kappa(r); unlike sn_ct it accepts r = 0 (the axis).
inline double sn(int kappa, double r) noexcept
{
    switch (kappa) {
    case -1:
        return std::sinh(r);
    case 0:
        return r;
    default:
        return std::sin(r);
    }
}

/// c_kappa(rho) = tanh^2, rho^2, tan^2. On the equator of the sphere this is
/// +infinity; callers that need the reciprocal should use inv_c_kappa.
inline double c_kappa(const SpaceForm& m, double rho)
{
    detail::check_radius(m, rho, "c_kappa");
    switch (m.kappa()) {
    case -1: {
        const double t = std::tanh(rho);
        return t * t;
    }
    case 0:
        return rho * rho;
    default: {
        if (detail::is_equator(m, rho)) {
            return std::numeric_limits<double>::infinity();
        }
        const double t = std::tan(rho);
        return t * t;
    }
    }
}

/// 1 / c_kappa(rho) = ct_kappa(rho)^2, exactly 0 on the equator.
inline double inv_c_kappa(const SpaceForm& m, double rho)
{
    const double ct = sn_ct(m, rho).ct;
    return ct * ct;
}

/// Geodesic sphere S^{n-1} of radius rho in M^n(kappa).
class GeodesicSphere {
public:
    GeodesicSphere(SpaceForm space, double rho) : space_(space), rho_(rho)
    {
        detail::check_radius(space_, rho_, "GeodesicSphere");
    }

    const SpaceForm& space() const noexcept { return space_; }
    double rho() const noexcept { return rho_; }
    /// Intrinsic radius of the sphere, sn_kappa(rho).
    double intrinsic_radius() const { return sn_ct(space_, rho_).sn; }

private:
    SpaceForm space_;
    double rho_;
};

/// |sigma|^2 + Ric(N) of the geodesic sphere: (n-1)(c_kappa(rho)^{-1} + kappa).
inline double sphere_potential(const GeodesicSphere& sphere)
{
    const auto& m = sphere.space();
    return (m.dim() - 1) * (inv_c_kappa(m, sphere.rho()) + m.kappa());
}

namespace detail {

inline double binomial(int top, int bottom)
{
    if (bottom < 0 || top < bottom) {
        return 0.0;
    }
    double b = 1.0;
    for (int i = 1; i <= bottom; ++i) {
        b = b * (top - bottom + i) / i;
    }
    return std::round(b);
}

} // namespace detail

/// Dimension of degree-j spherical harmonics on the unit sphere S^d.
/// d = 0 is the two-point sphere: even (j=0) and odd (j=1) functions only.
inline int harmonic_multiplicity(int d, int j)
{
    if (d < 0 || j < 0) {
        throw std::domain_error("harmonic_multiplicity: negative argument");
    }
    if (j == 0) {
        return 1;
    }
    switch (d) {
    case 0:
        return j == 1 ? 1 : 0;
    case 1:
        return 2;
    case 2:
        return 2 * j + 1;
    default:
        return static_cast<int>(detail::binomial(j + d, d) - detail::binomial(j + d - 2, d));
    }
}

/// Eigenvalue j(j+d-1) of -Delta on the unit sphere S^d.
inline double harmonic_eigenvalue(int d, int j) noexcept
{
    return static_cast<double>(j) * (j + d - 1);
}

/// Volume of the unit sphere S^d; S^0 has two points.
inline double unit_sphere_volume(int d)
{
    const double half = 0.5 * (d + 1);
    return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

/// Closed-form spectrum of L = Delta + W on a geodesic sphere: the j-th band
/// is j(j+n-2)/sn^2 - W with spherical-harmonic multiplicity. Bands are
/// appended until at least `count` eigenvalues (with multiplicity) are present.
inline Spectrum sphere_spectrum(const GeodesicSphere& sphere, std::size_t count)
{
    if (count < 1) {
        throw std::domain_error("sphere_spectrum: count must be >= 1");
    }
    const int d = sphere.space().dim() - 1;
    const double r = sphere.intrinsic_radius();
    const double w = sphere_potential(sphere);
    std::vector<SpectrumEntry> entries;
    std::size_t total = 0;
    for (int j = 0; total < count; ++j) {
        const int mult = harmonic_multiplicity(d, j);
        if (mult == 0) {
            break;
        }
        entries.push_back({harmonic_eigenvalue(d, j) / (r * r) - w, mult, j, 0});
        total += static_cast<std::size_t>(mult);
    }
    return Spectrum(std::move(entries));
}

enum class SlabEnd { bottom, top };

/// Slab [0,l] with metric dt^2 + f(t)^2 g0.
class WarpedSlab {
public:
    /// Product slab, f = 1.
    static WarpedSlab product(double l) { return WarpedSlab(Kind::product, l); }

    /// Horosphere slab in H^3, f = exp(-t).
    static WarpedSlab horosphere(double l) { return WarpedSlab(Kind::exp_decay, l); }

    /// f sampled uniformly on [0,l], interpolated by a cubic B-spline.
    static WarpedSlab tabulated(std::vector<double> f, double l)
    {
        if (f.size() < 4) {
            throw std::domain_error("WarpedSlab: need at least 4 samples");
        }
        for (double v : f) {
            if (!(v > 0.0)) {
                throw std::domain_error("WarpedSlab: warping function must be positive");
            }
        }
        WarpedSlab slab(Kind::tabulated, l);
        const double step = l / static_cast<double>(f.size() - 1);
        // One-sided third-order end slopes, mirrored so reversed data gives a reflected spline.
        const std::size_t N = f.size() - 1;
        const double left = (-11.0 * f[0] + 18.0 * f[1] - 9.0 * f[2] + 2.0 * f[3]) / (6.0 * step);
        const double right = (11.0 * f[N] - 18.0 * f[N - 1] + 9.0 * f[N - 2] - 2.0 * f[N - 3]) / (6.0 * step);
        slab.spline_ = std::make_shared<const Spline>(f.data(), f.size(), 0.0, step, left, right);
        return slab;
    }

    double width() const noexcept { return l_; }

    double f(double t) const
    {
        switch (kind_) {
        case Kind::product:
            return 1.0;
        case Kind::exp_decay:
            return std::exp(-t);
        default:
            return (*spline_)(t);
        }
    }

    double df(double t) const
    {
        switch (kind_) {
        case Kind::product:
            return 0.0;
        case Kind::exp_decay:
            return -std::exp(-t);
        default:
            return spline_->prime(t);
        }
    }

private:
    enum class Kind { product, exp_decay, tabulated };
    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

    WarpedSlab(Kind kind, double l) : kind_(kind), l_(l)
    {
        if (!(l > 0.0)) {
            throw std::domain_error("WarpedSlab: width must be positive");
        }
    }

    Kind kind_;
    double l_;
    std::shared_ptr<const Spline> spline_;
};

/// II(nu_bar, nu_bar) of the boundary slice with respect to -N_bar (the inward
/// slab normal): f'/f at the bottom, -f'/f at the top.
inline double slice_shape(const WarpedSlab& slab, SlabEnd end)
{
    if (end == SlabEnd::bottom) {
        return slab.df(0.0) / slab.f(0.0);
    }
    const double l = slab.width();
    return -slab.df(l) / slab.f(l);
}

} // namespace cmcslab
