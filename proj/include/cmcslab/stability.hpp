#pragma once

// Volume-constrained stability decisions: the Koiso criterion on computed
// spectra, the cylinder and tube criteria, the Robin coefficient of capillary
// boundaries and the global width and diameter bounds.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "operator.hpp"
#include "profile.hpp"
#include "spectral.hpp"
#include "spectrum.hpp"

namespace cmcslab {

enum class Status { StronglyStable, Stable, Unstable, Marginal };
enum class CaseLabel { I, II, III, IV, V, cylinder, closed_form };

inline const char* to_string(Status s)
{
    switch (s) {
    case Status::StronglyStable:
        return "StronglyStable";
    case Status::Stable:
        return "Stable";
    case Status::Unstable:
        return "Unstable";
    default:
        return "Marginal";
    }
}

inline const char* to_string(CaseLabel c)
{
    switch (c) {
    case CaseLabel::I:
        return "I";
    case CaseLabel::II:
        return "II";
    case CaseLabel::III:
        return "III";
    case CaseLabel::IV:
        return "IV";
    case CaseLabel::V:
        return "V";
    case CaseLabel::cylinder:
        return "cylinder";
    default:
        return "closed-form";
    }
}

/// StronglyStable and Stable both mean volume-preserving stability.
inline bool is_stable(Status s) noexcept { return s == Status::StronglyStable || s == Status::Stable; }

/// Default tolerance band 1e-7 (1 + |lambda1|).
inline double default_epsilon(double lambda1, double rel = 1e-7) { return rel * (1.0 + std::abs(lambda1)); }

/// Eigenvalue of the Dirichlet mode-0 problem closest to zero, with the
/// normalized B-overlap of its eigenvector with v = cos(phi).
struct DirichletKernel {
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double overlap = std::numeric_limits<double>::quiet_NaN();
    int index = -1;
};

struct KernelFunction {
    int index = 0;      ///< longitudinal index within mode 0
    double lambda = 0.0;
    double integral = 0.0; ///< |int g| / (sqrt(area) ||g||)
};

struct StabilityVerdict {
    Status status = Status::Marginal;
    CaseLabel label = CaseLabel::I;
    double lambda1 = std::numeric_limits<double>::quiet_NaN();
    double lambda2 = std::numeric_limits<double>::quiet_NaN();
    double int_u = std::numeric_limits<double>::quiet_NaN();
    double int_u_scale = std::numeric_limits<double>::quiet_NaN(); ///< sqrt(area) ||u||
    double epsilon = 0.0;
    std::vector<KernelFunction> kernel;
    std::optional<DirichletKernel> dirichlet;
    std::vector<std::string> notes;
    io::json provenance = io::json::object();
};

inline io::json to_json(const StabilityVerdict& v)
{
    io::json j = {{"status", to_string(v.status)},
                  {"case", to_string(v.label)},
                  {"lambda1", io::number(v.lambda1)},
                  {"lambda2", io::number(v.lambda2)},
                  {"int_u", io::number(v.int_u)},
                  {"epsilon", io::number(v.epsilon)},
                  {"provenance", v.provenance}};
    if (std::isfinite(v.int_u_scale)) {
        j["int_u_scale"] = v.int_u_scale;
    }
    if (!v.kernel.empty()) {
        io::json k = io::json::array();
        for (const auto& g : v.kernel) {
            k.push_back({{"index", g.index}, {"lambda", io::number(g.lambda)}, {"integral", io::number(g.integral)}});
        }
        j["kernel"] = std::move(k);
    }
    if (v.dirichlet) {
        j["dirichlet"] = {{"lambda", io::number(v.dirichlet->lambda)},
                          {"overlap", io::number(v.dirichlet->overlap)},
                          {"index", v.dirichlet->index}};
    }
    if (!v.notes.empty()) {
        j["notes"] = v.notes;
    }
    return j;
}

/// Solution of L u = 1 on the complement of the deflated mode-0 functions.
struct UnitSolve {
    double int_u = 0.0;
    double scale = 0.0; ///< sqrt(area) ||u||_{L2}
    std::string warning;
};

/// Mode-0 services koiso_decide needs beyond the spectrum.
struct KoisoContext {
    /// |int g| / (sqrt(area) ||g||) for the mode-0 eigenfunction `index`.
    std::function<double(int)> kernel_integral;
    /// L u = 1 with the listed mode-0 eigenfunctions deflated.
    std::function<UnitSolve(const std::vector<int>&)> solve_unit;
};

namespace detail {

struct Mode0Quadrature {
    const Discretization* disc;
    double volume;

    double integral(std::span<const double> f) const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            s += disc->pencil.mass()[i] * f[i];
        }
        return volume * s;
    }
    double norm(std::span<const double> f) const { return std::sqrt(volume * disc->pencil.inner(f, f)); }
    double area() const
    {
        double s = 0.0;
        for (double b : disc->pencil.mass()) {
            s += b;
        }
        return volume * s;
    }
};

inline double normalized_integral(const ModeDecomposition& dec, int index)
{
    const auto& m0 = dec.modes.front();
    if (index < 0 || static_cast<std::size_t>(index) >= m0.pairs.size()) {
        throw std::out_of_range("kernel index beyond computed mode-0 pairs");
    }
    const Mode0Quadrature q{&m0.disc, dec.orbit_volume};
    const auto& g = m0.pairs[static_cast<std::size_t>(index)].vector;
    return std::abs(q.integral(g)) / (std::sqrt(q.area()) * q.norm(g));
}

inline UnitSolve unit_solve(const ModeDecomposition& dec, const std::vector<int>& deflate)
{
    const auto& m0 = dec.modes.front();
    std::vector<std::vector<double>> vecs;
    for (int idx : deflate) {
        vecs.push_back(m0.pairs.at(static_cast<std::size_t>(idx)).vector);
    }
    const auto u = solve_jacobi_unit(m0.disc.pencil, vecs);
    const Mode0Quadrature q{&m0.disc, dec.orbit_volume};
    return {q.integral(u), std::sqrt(q.area()) * q.norm(u), {}};
}

} // namespace detail

/// Context over one or more grid levels. With >= 3 levels (grids m, 2m, 4m, ...)
/// the integrals are Richardson-extrapolated.
inline KoisoContext make_koiso_context(std::vector<const ModeDecomposition*> levels)
{
    if (levels.empty() || levels.size() == 2) {
        throw std::domain_error("make_koiso_context: need one level or at least three");
    }
    KoisoContext ctx;
    ctx.kernel_integral = [levels](int index) {
        if (levels.size() == 1) {
            return detail::normalized_integral(*levels.front(), index);
        }
        std::vector<double> vals;
        for (const auto* lv : levels) {
            vals.push_back(detail::normalized_integral(*lv, index));
        }
        return std::abs(richardson(vals).value);
    };
    ctx.solve_unit = [levels](const std::vector<int>& deflate) {
        if (levels.size() == 1) {
            return detail::unit_solve(*levels.front(), deflate);
        }
        std::vector<double> vals;
        UnitSolve last;
        for (const auto* lv : levels) {
            last = detail::unit_solve(*lv, deflate);
            vals.push_back(last.int_u);
        }
        const auto ex = richardson(vals);
        return UnitSolve{ex.value, last.scale, ex.warning};
    };
    return ctx;
}

/// Koiso criterion on the two lowest eigenvalues of L (L u + lambda u = 0).
///   lambda1 > eps: strongly stable (I); |lambda1| <= eps: Marginal.
///   lambda2 < -eps: unstable (V).
///   |lambda2| <= eps: a mode-0 kernel function with nonzero integral makes it
///   unstable (III); otherwise L u = 1 is solved with those functions deflated (IV).
///   lambda2 > eps: L u = 1 (II).
///   In II and IV the sign of int u decides, Marginal within eps * scale of 0.
inline StabilityVerdict koiso_decide(const Spectrum& spectrum, const KoisoContext& ctx,
                                     std::optional<double> epsilon = std::nullopt)
{
    if (spectrum.total_count() < 2) {
        throw std::domain_error("koiso_decide: need at least two eigenvalues");
    }
    StabilityVerdict v;
    v.lambda1 = spectrum.eigenvalue(0);
    v.lambda2 = spectrum.eigenvalue(1);
    const double eps = epsilon.value_or(default_epsilon(v.lambda1));
    v.epsilon = eps;

    if (v.lambda1 > eps) {
        v.status = Status::StronglyStable;
        v.label = CaseLabel::I;
        return v;
    }
    if (std::abs(v.lambda1) <= eps) {
        v.status = Status::Marginal;
        v.label = CaseLabel::I;
        std::ostringstream note;
        note << "lambda1 within the band: strongly stable if lambda1 >= 0; if lambda1 < 0 the second eigenvalue "
             << io::format_double(v.lambda2) << " decides";
        v.notes.push_back(note.str());
        return v;
    }
    if (v.lambda2 < -eps) {
        v.status = Status::Unstable;
        v.label = CaseLabel::V;
        return v;
    }

    std::vector<int> deflate;
    if (std::abs(v.lambda2) <= eps) {
        for (const auto& e : spectrum.entries()) {
            if (e.mode == 0 && std::abs(e.lambda) <= eps) {
                KernelFunction g{e.index, e.lambda, ctx.kernel_integral(e.index)};
                v.kernel.push_back(g);
                deflate.push_back(e.index);
            }
        }
        for (const auto& g : v.kernel) {
            if (g.integral > eps) {
                v.status = Status::Unstable;
                v.label = CaseLabel::III;
                return v;
            }
        }
        v.label = CaseLabel::IV;
    } else {
        v.label = CaseLabel::II;
    }

    const auto sol = ctx.solve_unit(deflate);
    v.int_u = sol.int_u;
    v.int_u_scale = sol.scale;
    if (!sol.warning.empty()) {
        v.notes.push_back("int_u: " + sol.warning);
    }
    if (sol.int_u >= 0.0) {
        v.status = Status::Stable;
    } else if (sol.int_u >= -eps * sol.scale) {
        v.status = Status::Marginal;
        v.notes.push_back("int_u within the band below 0: stable if int_u >= 0, unstable otherwise");
    } else {
        v.status = Status::Unstable;
    }
    return v;
}

/// Cylinder Gamma x [0,l] over a base with first eigenvalue lambda1:
/// unstable with the base, otherwise stable iff lambda1 + (pi/l)^2 >= 0.
inline StabilityVerdict cylinder_stable(double lambda1, Status base, double l,
                                        std::optional<double> epsilon = std::nullopt)
{
    if (!(l > 0.0)) {
        throw std::domain_error("cylinder_stable: l must be positive");
    }
    StabilityVerdict v;
    v.label = CaseLabel::cylinder;
    v.lambda1 = lambda1;
    const double w = std::numbers::pi / l;
    v.lambda2 = lambda1 + w * w;
    v.epsilon = epsilon.value_or(default_epsilon(lambda1));
    if (base == Status::Unstable) {
        v.status = Status::Unstable;
        v.notes.push_back("base is unstable");
        return v;
    }
    const double x = v.lambda2;
    if (x >= 0.0) {
        v.status = base == Status::Marginal ? Status::Marginal : Status::Stable;
    } else if (x >= -v.epsilon) {
        v.status = Status::Marginal;
        v.notes.push_back("lambda1 + (pi/l)^2 within the band below 0");
    } else {
        v.status = Status::Unstable;
    }
    return v;
}

/// Width of the marginal band for cylinder decisions on an m-interval grid:
/// the O(h^2) error of the first longitudinal eigenvalue plus 4 eps.
inline double cylinder_band(double l, int m, double eps)
{
    const double a = std::numbers::pi / l;
    const double b = std::numbers::pi / m;
    return a * a * b * b + 4.0 * eps;
}

/// Closed-form tube criterion: stable iff pi sn(rho) >= sqrt(n-1) l.
inline StabilityVerdict tube_verdict(const SpaceForm& space, double rho, double l)
{
    if (!(l > 0.0)) {
        throw std::domain_error("tube_verdict: l must be positive");
    }
    const GeodesicSphere sphere(space, rho);
    const double lhs = std::numbers::pi * sphere.intrinsic_radius();
    const double rhs = std::sqrt(static_cast<double>(space.dim() - 1)) * l;
    StabilityVerdict v;
    v.label = CaseLabel::closed_form;
    v.lambda1 = -sphere_potential(sphere);
    const double w = std::numbers::pi / l;
    v.lambda2 = v.lambda1 + w * w;
    v.epsilon = 0.0;
    // Equality is stable; allow for the rounding of sn.
    v.status = lhs >= rhs * (1.0 - 8 * std::numeric_limits<double>::epsilon()) ? Status::Stable : Status::Unstable;
    v.provenance = {{"pi_sn_rho", lhs}, {"sqrt_n1_l", rhs}};
    return v;
}

enum class ThresholdRoute { closed_spectrum, mode_solver };

/// l* = pi / sqrt(-lambda1(Gamma)) where the tube over the geodesic sphere
/// changes stability; +inf when lambda1 >= 0. The mode-solver route computes
/// lambda1 by discretizing the sphere itself on `grid` intervals.
inline double tube_threshold_numeric(const SpaceForm& space, double rho,
                                     ThresholdRoute route = ThresholdRoute::closed_spectrum, int grid = 256,
                                     const SpectralConfig& config = {})
{
    const GeodesicSphere sphere(space, rho);
    double lambda1;
    if (route == ThresholdRoute::closed_spectrum) {
        lambda1 = sphere_spectrum(sphere, 1).eigenvalue(0);
    } else {
        const auto pr = assemble_round_sphere_mode(sphere, 0, grid);
        lambda1 = eig_lowest(discretize(pr).pencil, 1, config).front().lambda;
    }
    if (lambda1 >= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return std::numbers::pi / std::sqrt(-lambda1);
}

/// 4 pi / sqrt(3 kappa): no stable free-boundary CMC connects the slices of a
/// slab at least this wide.
inline double nonexistence_width(double kappa)
{
    if (!(kappa > 0.0)) {
        throw std::domain_error("nonexistence_width: kappa must be positive");
    }
    return 4.0 * std::numbers::pi / std::sqrt(3.0 * kappa);
}

struct DistanceBounds {
    double distance = 0.0; ///< to the boundary, 2 pi / sqrt(3 k)
    double diameter = 0.0; ///< 4 pi / sqrt(3 k)
};

/// Bounds for a stable surface with inf(3H^2 + S) = kappa_eff > 0.
inline DistanceBounds rosenberg_bound(double kappa_eff)
{
    if (!(kappa_eff > 0.0)) {
        throw std::domain_error("rosenberg_bound: kappa_eff must be positive");
    }
    const double r = std::sqrt(3.0 * kappa_eff);
    return {2.0 * std::numbers::pi / r, 4.0 * std::numbers::pi / r};
}

/// Rayleigh quotient of the constant test function on a closed curve:
/// -int (h^2 + K) ds / int ds, an upper bound for lambda1(gamma). If
/// `kappa_lower` is given, K >= kappa_lower is checked and the result is then
/// at most -kappa_lower.
inline double curve_lambda1_upper(std::span<const double> h, std::span<const double> K, std::span<const double> ds,
                                  std::optional<double> kappa_lower = std::nullopt)
{
    if (h.size() != K.size() || h.size() != ds.size() || h.empty()) {
        throw std::invalid_argument("curve_lambda1_upper: inconsistent sample arrays");
    }
    double num = 0.0;
    double len = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(ds[i] > 0.0)) {
            throw std::domain_error("curve_lambda1_upper: arclength weights must be positive");
        }
        if (kappa_lower && K[i] < *kappa_lower) {
            throw std::domain_error("curve_lambda1_upper: K below the declared lower bound");
        }
        num += (h[i] * h[i] + K[i]) * ds[i];
        len += ds[i];
    }
    return -num / len;
}

/// Contact data at one boundary component of a capillary surface.
struct CapillaryBoundary {
    double theta = std::numbers::pi / 2;
    double II_nn = 0.0;    ///< II(nu_bar, nu_bar) of the slice w.r.t. -N_bar
    double sigma_nn = 0.0; ///< sigma(nu, nu) of the surface
};

/// q = II / sin(theta) + cot(theta) sigma(nu, nu).
inline double capillary_q(const CapillaryBoundary& b)
{
    if (!(b.theta > 0.0 && b.theta < std::numbers::pi)) {
        throw std::domain_error("capillary_q: theta must lie in (0, pi)");
    }
    const double s = std::sin(b.theta);
    if (!(s >= std::numeric_limits<double>::min())) {
        throw std::domain_error("capillary_q: sin(theta) underflows");
    }
    return b.II_nn / s + std::cos(b.theta) / s * b.sigma_nn;
}

enum class BoundaryPolicy { free_boundary, capillary, dirichlet };

struct DecideOptions {
    int grid = 2000;
    int levels = 1; ///< 1, or >= 3 for Richardson-extrapolated decisions
    std::size_t count = 4;
    double eps_rel = 1e-7;
    double II_bottom = 0.0; ///< slice shape operator at the ends (0 in a product slab)
    double II_top = 0.0;
    bool dirichlet_diagnostic = true;
    SpectralConfig spectral{};
};

namespace detail {

inline std::vector<int> level_grids(const DecideOptions& opt)
{
    if (opt.grid < 16) {
        throw std::domain_error("decide: grid must be >= 16");
    }
    if (opt.levels != 1 && opt.levels < 3) {
        throw std::domain_error("decide: levels must be 1 or >= 3");
    }
    std::vector<int> grids;
    for (int i = 0, m = opt.grid; i < opt.levels; ++i, m *= 2) {
        grids.push_back(m);
    }
    return grids;
}

inline StabilityVerdict decide_levels(const std::vector<ModeDecomposition>& levels, const DecideOptions& opt)
{
    std::vector<const ModeDecomposition*> ptrs;
    std::vector<Spectrum> spectra;
    io::json grids = io::json::array();
    io::json modes = io::json::array();
    for (const auto& d : levels) {
        ptrs.push_back(&d);
        spectra.push_back(d.spectrum);
        grids.push_back(d.grid);
        modes.push_back(d.modes.size());
    }
    std::vector<std::string> warnings;
    Spectrum spectrum = levels.size() == 1 ? levels.front().spectrum : extrapolate_spectra(spectra, &warnings);
    const auto ctx = make_koiso_context(ptrs);
    auto v = koiso_decide(spectrum, ctx, default_epsilon(spectrum.eigenvalue(0), opt.eps_rel));
    for (auto& w : warnings) {
        v.notes.push_back(std::move(w));
    }
    v.provenance = {{"grids", grids}, {"modes", modes}, {"count", opt.count}, {"levels", levels.size()}};
    return v;
}

} // namespace detail

/// Dirichlet mode-0 eigenvalue nearest zero and its overlap with v, optionally
/// extrapolated over grids m, 2m, 4m, ...
inline DirichletKernel dirichlet_kernel(const RotationalSurface& surf, const std::vector<int>& grids,
                                        const SpectralConfig& config = {})
{
    DirichletKernel out;
    std::vector<std::vector<Eigenpair>> pairs;
    std::vector<SturmLiouvilleProblem> problems;
    std::vector<Discretization> discs;
    for (int m : grids) {
        problems.push_back(assemble_mode(surf, 0, BoundaryCondition::dirichlet(), BoundaryCondition::dirichlet(), m));
        discs.push_back(discretize(problems.back()));
        pairs.push_back(eig_lowest(discs.back().pencil, std::min<std::size_t>(6, discs.back().pencil.size()), config));
    }
    const auto& fine = pairs.back();
    std::size_t best = 0;
    for (std::size_t i = 1; i < fine.size(); ++i) {
        if (std::abs(fine[i].lambda) < std::abs(fine[best].lambda)) {
            best = i;
        }
    }
    out.index = static_cast<int>(best);
    if (grids.size() >= 3) {
        std::vector<double> vals;
        for (const auto& p : pairs) {
            vals.push_back(p[best].lambda);
        }
        out.lambda = richardson(vals).value;
    } else {
        out.lambda = fine[best].lambda;
    }
    const auto& d = discs.back();
    std::vector<double> vv(d.nodes.size());
    for (std::size_t i = 0; i < vv.size(); ++i) {
        vv[i] = problems.back().v[static_cast<std::size_t>(d.nodes[i])];
    }
    const double nv = std::sqrt(d.pencil.inner(vv, vv));
    const auto& u = fine[best].vector;
    if (nv > 0.0) {
        out.overlap = std::abs(d.pencil.inner(u, vv)) / (std::sqrt(d.pencil.inner(u, u)) * nv);
    }
    return out;
}

/// Boundary conditions a policy imposes on a surface.
inline std::pair<BoundaryCondition, BoundaryCondition> policy_conditions(const RotationalSurface& surf,
                                                                         BoundaryPolicy policy,
                                                                         const DecideOptions& opt = {})
{
    switch (policy) {
    case BoundaryPolicy::free_boundary:
        return {BoundaryCondition::neumann(), BoundaryCondition::neumann()};
    case BoundaryPolicy::dirichlet:
        return {BoundaryCondition::dirichlet(), BoundaryCondition::dirichlet()};
    default: {
        const double q0 = capillary_q({surf.theta0, opt.II_bottom, surf.sigma_nn(SlabEnd::bottom)});
        const double q1 = capillary_q({surf.theta1, opt.II_top, surf.sigma_nn(SlabEnd::top)});
        return {BoundaryCondition::robin(q0), BoundaryCondition::robin(q1)};
    }
    }
}

/// Full pipeline on a rotational surface: mode decomposition, Koiso
/// criterion and (for surfaces with nonzero v) the Dirichlet kernel check.
inline StabilityVerdict decide_surface(const RotationalSurface& surf, BoundaryPolicy policy,
                                       const DecideOptions& opt = {})
{
    const auto grids = detail::level_grids(opt);
    const auto [bottom, top] = policy_conditions(surf, policy, opt);
    std::vector<ModeDecomposition> levels;
    for (int m : grids) {
        levels.push_back(merge_modes(surface_modes(surf, bottom, top, m), {opt.count, 0, -1, opt.spectral}));
    }
    auto v = detail::decide_levels(levels, opt);
    v.provenance["policy"] = policy == BoundaryPolicy::free_boundary ? "free"
                             : policy == BoundaryPolicy::capillary   ? "capillary"
                                                                     : "dirichlet";
    v.provenance["q"] = {io::number(bottom.q), io::number(top.q)};
    if (opt.dirichlet_diagnostic && !surf.cylinder) {
        v.dirichlet = dirichlet_kernel(surf, grids, opt.spectral);
    }
    return v;
}

/// Koiso criterion on a closed geodesic sphere (the tube base itself).
inline StabilityVerdict decide_round_sphere(const GeodesicSphere& sphere, const DecideOptions& opt = {})
{
    const auto grids = detail::level_grids(opt);
    std::vector<ModeDecomposition> levels;
    for (int m : grids) {
        levels.push_back(merge_modes(round_sphere_modes(sphere, m), {opt.count, 0, -1, opt.spectral}));
    }
    return detail::decide_levels(levels, opt);
}

} // namespace cmcslab
