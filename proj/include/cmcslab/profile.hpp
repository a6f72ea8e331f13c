#pragma once

// Rotational CMC hypersurfaces in M^n(kappa) x [0,l]: the profile ODE in the
// (r,t) half plane, shooting for free and capillary boundary, derived fields.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "detail/dopri5.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "io.hpp"

namespace cmcslab {

/// (r, t, phi): distance to the axis, height, tangent angle from the r axis.
struct ProfileState {
    double r = 0.0;
    double t = 0.0;
    double phi = 0.0;
};

namespace detail {

inline bool in_profile_domain(int kappa, double r) noexcept
{
    return r > 0.0 && (kappa != 1 || r < std::numbers::pi);
}

inline double profile_ct(int kappa, double r) noexcept
{
    switch (kappa) {
    case -1:
        return 1.0 / std::tanh(r);
    case 0:
        return 1.0 / r;
    default:
        return r == std::numbers::pi / 2 ? 0.0 : std::cos(r) / std::sin(r);
    }
}

inline double profile_dphi(int kappa, int n, double H, double r, double phi) noexcept
{
    return n * H - (n - 1) * profile_ct(kappa, r) * std::sin(phi);
}

} // namespace detail

/// Arclength derivative of the profile state. H is the average of the n
/// principal curvatures; the unit normal is N = (-sin phi, cos phi).
inline ProfileState ode_rhs(const ProfileState& y, const SpaceForm& space, double H)
{
    if (!detail::in_profile_domain(space.kappa(), y.r)) {
        std::ostringstream msg;
        msg << "ode_rhs: profile left the domain at r=" << y.r;
        throw axis_crossing(msg.str());
    }
    return {std::cos(y.phi), std::sin(y.phi), detail::profile_dphi(space.kappa(), space.dim(), H, y.r, y.phi)};
}

struct ProfileSample {
    double s = 0.0;
    double r = 0.0;
    double t = 0.0;
    double phi = 0.0;
};

/// Generating curve sampled uniformly in arclength.
struct ProfileCurve {
    SpaceForm space{0, 2};
    double H = 0.0;
    std::vector<ProfileSample> samples;

    double length() const { return samples.empty() ? 0.0 : samples.back().s - samples.front().s; }
};

/// A profile with everything the Jacobi operator needs, per sample.
struct RotationalSurface {
    ProfileCurve profile;
    std::vector<double> rho;  ///< orbit radius sn_kappa(r)
    std::vector<double> W;    ///< |sigma|^2 + Ric(N)
    std::vector<double> v;    ///< <d/dt, N> = cos phi
    std::vector<double> dphi; ///< phi' from the ODE (= sigma(T,T))
    double theta0 = std::numbers::pi / 2;
    double theta1 = std::numbers::pi / 2;
    double l = 0.0;
    bool cylinder = false;

    const SpaceForm& space() const noexcept { return profile.space; }
    std::size_t size() const noexcept { return profile.samples.size(); }

    /// sigma(nu, nu) at a boundary component (nu the outward conormal).
    double sigma_nn(SlabEnd end) const { return end == SlabEnd::bottom ? dphi.front() : dphi.back(); }
};

/// Fills rho, W, v and the contact data from a profile.
inline RotationalSurface surface_fields(ProfileCurve profile)
{
    if (profile.samples.size() < 2) {
        throw std::domain_error("surface_fields: need at least two samples");
    }
    const int kappa = profile.space.kappa();
    const int n = profile.space.dim();
    RotationalSurface s;
    const std::size_t count = profile.samples.size();
    s.rho.resize(count);
    s.W.resize(count);
    s.v.resize(count);
    s.dphi.resize(count);
    double rmin = profile.samples.front().r;
    double rmax = rmin;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& p = profile.samples[i];
        if (!detail::in_profile_domain(kappa, p.r)) {
            throw std::domain_error("surface_fields: sample outside the radial domain");
        }
        const double ct = detail::profile_ct(kappa, p.r);
        const double sp = std::sin(p.phi);
        const double d = detail::profile_dphi(kappa, n, profile.H, p.r, p.phi);
        s.rho[i] = sn(kappa, p.r);
        s.dphi[i] = d;
        s.W[i] = d * d + (n - 1) * (ct * sp) * (ct * sp) + (n - 1) * kappa * sp * sp;
        s.v[i] = std::cos(p.phi);
        rmin = std::min(rmin, p.r);
        rmax = std::max(rmax, p.r);
    }
    const auto& first = profile.samples.front();
    const auto& last = profile.samples.back();
    s.theta0 = std::numbers::pi - first.phi;
    s.theta1 = last.phi;
    s.l = last.t - first.t;
    const double r0 = first.r;
    s.cylinder = std::max(std::abs(rmax - r0), std::abs(rmin - r0)) < 1e-10 * (1.0 + r0);
    s.profile = std::move(profile);
    return s;
}

/// Cylinder r = rho over [0,l], with H = (n-1) ct(rho) / n.
inline RotationalSurface cylinder_surface(const SpaceForm& space, double rho, double l, int intervals = 4096)
{
    detail::check_radius(space, rho, "cylinder_surface");
    if (!(l > 0.0)) {
        throw std::domain_error("cylinder_surface: l must be positive");
    }
    if (intervals < 2) {
        throw std::domain_error("cylinder_surface: need at least 2 intervals");
    }
    ProfileCurve c;
    c.space = space;
    c.H = (space.dim() - 1) * sn_ct(space, rho).ct / space.dim();
    c.samples.resize(static_cast<std::size_t>(intervals) + 1);
    for (int i = 0; i <= intervals; ++i) {
        const double s = l * i / intervals;
        c.samples[static_cast<std::size_t>(i)] = {s, rho, s, std::numbers::pi / 2};
    }
    return surface_fields(std::move(c));
}

struct ShootingOptions {
    double tol = 1e-10;        ///< on |phi(end) - theta1| and |t(end) - l|
    int scan_intervals = 64;   ///< uniform r0 scan used to find sign changes
    int samples = 4096;        ///< arclength intervals in the returned profile
    double rtol = 1e-12;
    double atol = 1e-12;
    double max_length = 0.0;   ///< arclength cap per shot; 0 selects 20 l + 20
};

/// Search interval for the initial radius r0.
struct Bracket {
    double lo = 0.0;
    double hi = 0.0;
};

/// Covers the radial domain: (0, pi) on the sphere, otherwise up to a few
/// cylinder radii (or 10 when H is too small to have a cylinder).
CMCSLAB_NOINLINE inline Bracket default_bracket(const SpaceForm& space, double H)
{
    if (space.kappa() == 1) {
        return {1e-3, std::numbers::pi - 1e-3};
    }
    const double target = space.dim() * H / (space.dim() - 1); // ct(rho_c)
    double hi = 10.0;
    if (space.kappa() == 0 && target > 0.0) {
        hi = 3.0 / target;
    } else if (space.kappa() == -1 && target > 1.0) {
        hi = std::min(10.0, 3.0 * std::atanh(1.0 / target));
    }
    return {1e-3 * std::min(1.0, hi), hi};
}

namespace detail {

struct Shot {
    Dopri5Result<3> run;
    double residual = std::numeric_limits<double>::quiet_NaN();
};

inline Shot shoot_once(const SpaceForm& space, double H, double l, double r0, double phi0, double theta1,
                       const ShootingOptions& opt)
{
    const int kappa = space.kappa();
    const int n = space.dim();
    auto rhs = [&](double, const State<3>& y, State<3>& dy) {
        if (!in_profile_domain(kappa, y[0]) || !std::isfinite(y[2])) {
            return false;
        }
        dy[0] = std::cos(y[2]);
        dy[1] = std::sin(y[2]);
        dy[2] = profile_dphi(kappa, n, H, y[0], y[2]);
        return std::isfinite(dy[2]);
    };
    auto event = [&](const State<3>& y) { return y[1] - l; };
    Dopri5Options o;
    o.rtol = opt.rtol;
    o.atol = opt.atol;
    o.h_max = std::max(1e-3, l / 32.0);
    const double cap = opt.max_length > 0.0 ? opt.max_length : 20.0 * l + 20.0;
    Shot shot;
    shot.run = dopri5<3>(rhs, 0.0, State<3>{r0, 0.0, phi0}, cap, event, o);
    if (shot.run.stop == Dopri5Stop::event) {
        shot.residual = shot.run.y_end[2] - theta1;
    }
    return shot;
}

[[noreturn]] inline void raise_shot_failure(const Shot& shot, double r0)
{
    std::ostringstream msg;
    msg << "profile integration from r0=" << r0;
    const double r = shot.run.y_end[0];
    switch (shot.run.stop) {
    case Dopri5Stop::step_underflow:
        if (r < 1e-3 || std::abs(std::numbers::pi - r) < 1e-3) {
            msg << " reached the axis at s=" << shot.run.x_end << " (r=" << r << ")";
            throw axis_crossing(msg.str());
        }
        msg << " step size underflow at s=" << shot.run.x_end << " (r=" << r << ")";
        throw stiffness_failure(msg.str());
    case Dopri5Stop::too_many_steps:
        msg << " exceeded the step budget at s=" << shot.run.x_end;
        throw stiffness_failure(msg.str());
    default:
        msg << " never reached the top slice before the arclength cap s=" << shot.run.x_end;
        throw no_solution(msg.str());
    }
}

inline ProfileCurve sample_shot(const Shot& shot, const SpaceForm& space, double H, int intervals)
{
    ProfileCurve c;
    c.space = space;
    c.H = H;
    const double S = shot.run.x_end;
    c.samples.resize(static_cast<std::size_t>(intervals) + 1);
    for (int i = 0; i <= intervals; ++i) {
        const double s = i == intervals ? S : S * i / intervals;
        const State<3> y = i == intervals ? shot.run.y_end : shot.run.at(s);
        c.samples[static_cast<std::size_t>(i)] = {s, y[0], y[1], y[2]};
    }
    return c;
}

struct invalid_shot {};

} // namespace detail

/// All capillary solutions with r0 in the bracket, ordered by r0. The profile
/// starts at (r0, 0) with phi = pi - theta0 and must reach t = l with
/// phi = theta1. Kept out of line so every caller gets bit-identical results.
CMCSLAB_NOINLINE inline std::vector<RotationalSurface> shoot_capillary_all(const SpaceForm& space, double H, double l,
                                                          double theta0, double theta1, Bracket bracket,
                                                          const ShootingOptions& opt = {})
{
    const double pi = std::numbers::pi;
    if (!(H >= 0.0) || !std::isfinite(H)) {
        throw std::domain_error("shoot: H must be finite and >= 0");
    }
    if (!(l > 0.0) || !std::isfinite(l)) {
        throw std::domain_error("shoot: l must be positive");
    }
    if (!(theta0 > 0.0 && theta0 < pi) || !(theta1 > 0.0 && theta1 < pi)) {
        throw std::domain_error("shoot: contact angles must lie in (0, pi)");
    }
    if (!(bracket.lo < bracket.hi) || !detail::in_profile_domain(space.kappa(), bracket.lo) ||
        !detail::in_profile_domain(space.kappa(), bracket.hi)) {
        throw std::domain_error("shoot: invalid r0 bracket");
    }
    if (opt.scan_intervals < 1 || opt.samples < 2 || !(opt.tol > 0.0)) {
        throw std::domain_error("shoot: invalid options");
    }
    const double phi0 = pi - theta0;

    const int N = opt.scan_intervals;
    std::vector<double> r0s(static_cast<std::size_t>(N) + 1);
    std::vector<detail::Shot> shots;
    shots.reserve(r0s.size());
    for (int i = 0; i <= N; ++i) {
        r0s[static_cast<std::size_t>(i)] = bracket.lo + (bracket.hi - bracket.lo) * i / N;
        shots.push_back(detail::shoot_once(space, H, l, r0s[static_cast<std::size_t>(i)], phi0, theta1, opt));
    }

    auto F = [&](double r0) {
        const auto shot = detail::shoot_once(space, H, l, r0, phi0, theta1, opt);
        if (!std::isfinite(shot.residual)) {
            throw detail::invalid_shot{};
        }
        return shot.residual;
    };

    std::vector<double> roots;
    for (std::size_t i = 0; i + 1 < r0s.size(); ++i) {
        const double fa = shots[i].residual;
        const double fb = shots[i + 1].residual;
        if (!std::isfinite(fa) || !std::isfinite(fb)) {
            continue;
        }
        double root;
        if (fa == 0.0) {
            root = r0s[i];
        } else if (fb == 0.0 || (fa < 0.0) == (fb < 0.0)) {
            continue;
        } else {
            try {
                std::uintmax_t iters = 200;
                auto stop = [](double a, double b) { return std::abs(b - a) <= 1e-15 * (1.0 + std::abs(a)); };
                const auto [a, b] = boost::math::tools::toms748_solve(F, r0s[i], r0s[i + 1], fa, fb, stop, iters);
                root = std::abs(F(a)) <= std::abs(F(b)) ? a : b;
            } catch (const detail::invalid_shot&) {
                continue;
            } catch (const std::exception&) {
                continue;
            }
        }
        const auto shot = detail::shoot_once(space, H, l, root, phi0, theta1, opt);
        if (!std::isfinite(shot.residual) || std::abs(shot.residual) > opt.tol) {
            continue; // a jump of the residual, not a root
        }
        if (!roots.empty() && std::abs(root - roots.back()) <= 1e-9 * (1.0 + root)) {
            continue;
        }
        roots.push_back(root);
    }

    if (roots.empty()) {
        // Report the dominant failure when no shot was usable at all.
        const detail::Shot* failed = nullptr;
        std::size_t usable = 0;
        for (std::size_t i = 0; i < shots.size(); ++i) {
            if (std::isfinite(shots[i].residual)) {
                ++usable;
            } else if (failed == nullptr && shots[i].run.stop != detail::Dopri5Stop::reached_end) {
                failed = &shots[i];
            }
        }
        if (usable == 0 && failed != nullptr) {
            detail::raise_shot_failure(*failed, r0s[static_cast<std::size_t>(failed - shots.data())]);
        }
        std::ostringstream msg;
        msg << "shoot: no sign change of the contact-angle residual for r0 in [" << bracket.lo << ", "
            << bracket.hi << "]";
        throw no_solution(msg.str());
    }

    std::vector<RotationalSurface> out;
    for (double r0 : roots) {
        const auto shot = detail::shoot_once(space, H, l, r0, phi0, theta1, opt);
        if (shot.run.stop != detail::Dopri5Stop::event) {
            detail::raise_shot_failure(shot, r0);
        }
        auto surface = surface_fields(detail::sample_shot(shot, space, H, opt.samples));
        surface.theta0 = theta0;
        surface.theta1 = theta1;
        surface.l = l;
        out.push_back(std::move(surface));
    }
    return out;
}

/// The capillary solution with the smallest r0 in the bracket.
inline RotationalSurface shoot_capillary(const SpaceForm& space, double H, double l, double theta0, double theta1,
                                         Bracket bracket, const ShootingOptions& opt = {})
{
    return shoot_capillary_all(space, H, l, theta0, theta1, bracket, opt).front();
}

inline std::vector<RotationalSurface> shoot_free_boundary_all(const SpaceForm& space, double H, double l,
                                                              Bracket bracket, const ShootingOptions& opt = {})
{
    return shoot_capillary_all(space, H, l, std::numbers::pi / 2, std::numbers::pi / 2, bracket, opt);
}

/// Orthogonal contact at both slices (theta0 = theta1 = pi/2).
inline RotationalSurface shoot_free_boundary(const SpaceForm& space, double H, double l, Bracket bracket,
                                             const ShootingOptions& opt = {})
{
    return shoot_free_boundary_all(space, H, l, bracket, opt).front();
}

/// Versioned JSON record; derived fields are written for readers but
/// recomputed from (s, r, t, phi) on load.
inline io::json to_json(const RotationalSurface& s)
{
    io::json samples = io::json::array();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& p = s.profile.samples[i];
        samples.push_back({{"s", p.s}, {"r", p.r}, {"t", p.t}, {"phi", p.phi}, {"rho", s.rho[i]}, {"W", s.W[i]},
                           {"v", s.v[i]}});
    }
    return {{"format", "cmcslab.surface"},
            {"version", 1},
            {"kappa", s.space().kappa()},
            {"n", s.space().dim()},
            {"H", s.profile.H},
            {"l", s.l},
            {"theta0", s.theta0},
            {"theta1", s.theta1},
            {"cylinder", s.cylinder},
            {"samples", std::move(samples)}};
}

inline RotationalSurface surface_from_json(const io::json& j)
{
    if (j.value("format", std::string{}) != "cmcslab.surface" || j.value("version", 0) != 1) {
        throw std::invalid_argument("surface JSON: unsupported format or version");
    }
    ProfileCurve c;
    c.space = SpaceForm(j.at("kappa").get<int>(), j.at("n").get<int>());
    c.H = j.at("H").get<double>();
    for (const auto& p : j.at("samples")) {
        c.samples.push_back(
            {p.at("s").get<double>(), p.at("r").get<double>(), p.at("t").get<double>(), p.at("phi").get<double>()});
    }
    auto s = surface_fields(std::move(c));
    s.l = j.at("l").get<double>();
    s.theta0 = j.at("theta0").get<double>();
    s.theta1 = j.at("theta1").get<double>();
    s.cylinder = j.at("cylinder").get<bool>();
    return s;
}

} // namespace cmcslab
