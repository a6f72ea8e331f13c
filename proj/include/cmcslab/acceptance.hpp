#pragma once

// Acceptance criteria 1-8, shared by `cmcslab verify` and the acceptance test.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "operator.hpp"
#include "profile.hpp"
#include "spectral.hpp"
#include "stability.hpp"

namespace cmcslab::acceptance {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

/// Free-boundary unduloid half-periods used by criteria 5 and 8.
struct FreeBoundaryCase {
    int kappa;
    double H;
    double l;
};

inline const std::vector<FreeBoundaryCase>& free_boundary_cases()
{
    static const std::vector<FreeBoundaryCase> cases = {{0, 0.5, 2.9}, {1, 0.3, 2.3}, {-1, 0.8, 2.3}};
    return cases;
}

inline RotationalSurface free_boundary_surface(const FreeBoundaryCase& c)
{
    const SpaceForm space(c.kappa, 2);
    ShootingOptions opt;
    opt.samples = 4096;
    return shoot_free_boundary(space, c.H, c.l, default_bracket(space, c.H), opt);
}

} // namespace detail

/// Tube thresholds: numeric l* against pi sn(rho) / sqrt(n-1), both routes.
inline CriterionResult criterion_tube_thresholds()
{
    CriterionResult r{1, "tube thresholds", true, {}};
    double worst = 0.0;
    int cases = 0;
    for (int kappa : {-1, 0, 1}) {
        for (int n : {2, 3, 4}) {
            const SpaceForm space(kappa, n);
            for (int i = 0; i < 12; ++i) {
                const double rho = kappa == 1 ? 0.1 + (std::numbers::pi - 0.2) * i / 11.0 : 0.1 + 2.9 * i / 11.0;
                const double closed = std::numbers::pi * sn_ct(space, rho).sn / std::sqrt(n - 1.0);
                for (auto route : {ThresholdRoute::closed_spectrum, ThresholdRoute::mode_solver}) {
                    const double err = detail::rel_err(tube_threshold_numeric(space, rho, route), closed);
                    worst = std::max(worst, err);
                    ++cases;
                }
            }
        }
    }
    r.pass = worst <= 1e-6;
    r.detail = std::to_string(cases) + " thresholds, max rel err " + detail::fmt(worst) + " (limit 1e-6)";
    return r;
}

/// decide_surface on circle cylinders against cylinder_stable.
inline CriterionResult criterion_cylinder(int grid = 2000)
{
    CriterionResult r{2, "cylinder criterion", true, {}};
    const SpaceForm plane(0, 2);
    int points = 0;
    int disagreements = 0;
    int outside_band = 0;
    double max_band = 0.0;
    for (double rho : {0.5, 1.0, 2.0}) {
        DecideOptions base_opt;
        base_opt.grid = 500;
        base_opt.levels = 3;
        const auto base = decide_round_sphere(GeodesicSphere(plane, rho), base_opt);
        const double lambda1 = -1.0 / (rho * rho);
        const double lstar = std::numbers::pi * rho;
        std::vector<double> ls;
        for (int i = 0; i < 60; ++i) {
            ls.push_back(lstar * (0.7 + 0.6 * i / 59.0));
        }
        for (double d : {-1e-6, -1e-7, -1e-9, 0.0, 1e-9, 1e-7, 1e-6}) {
            ls.push_back(lstar * (1.0 + d));
        }
        for (double l : ls) {
            const auto surf = cylinder_surface(plane, rho, l, grid);
            DecideOptions opt;
            opt.grid = grid;
            const auto numeric = decide_surface(surf, BoundaryPolicy::free_boundary, opt);
            const auto closed = cylinder_stable(lambda1, base.status, l);
            const double band = cylinder_band(l, grid, closed.epsilon);
            max_band = std::max(max_band, band);
            auto cls = [](Status s) { return is_stable(s) ? 0 : s == Status::Unstable ? 1 : 2; };
            ++points;
            if (cls(numeric.status) != cls(closed.status)) {
                ++disagreements;
                const double w = std::numbers::pi / l;
                if (std::abs(lambda1 + w * w) > band) {
                    ++outside_band;
                }
            }
        }
    }
    r.pass = points >= 200 && outside_band == 0 && max_band <= 1e-4;
    r.detail = std::to_string(points) + " points, " + std::to_string(disagreements) + " disagreements (" +
               std::to_string(outside_band) + " outside band), max band " + detail::fmt(max_band) + " at m=" +
               std::to_string(grid);
    return r;
}

/// Koiso worked cases: closed round sphere and circle decide Stable via IV.
inline CriterionResult criterion_koiso_cases()
{
    CriterionResult r{3, "Koiso worked cases", true, {}};
    double worst = 0.0;
    std::ostringstream bad;
    for (double rho : {0.5, 1.0, 2.0}) {
        for (int n : {3, 2}) {
            DecideOptions opt;
            opt.grid = 500;
            opt.levels = 3;
            const auto v = decide_round_sphere(GeodesicSphere(SpaceForm(0, n), rho), opt);
            const double expected = n == 3 ? 2 * std::numbers::pi * std::pow(rho, 4) : 2 * std::numbers::pi * std::pow(rho, 3);
            const double err = detail::rel_err(v.int_u, expected);
            worst = std::max(worst, err);
            if (v.status != Status::Stable || v.label != CaseLabel::IV || !(err <= 1e-6)) {
                r.pass = false;
                bad << " [n=" << n << " rho=" << rho << ": " << to_string(v.status) << "/" << to_string(v.label) << "]";
            }
        }
    }
    r.detail = "S^2 and S^1 at rho in {0.5,1,2}: max rel err of int u " + detail::fmt(worst) + bad.str();
    return r;
}

/// Product spectrum formulas against direct mode solves.
inline CriterionResult criterion_spectrum_formulas(int grid = 2000)
{
    CriterionResult r{4, "spectrum formulas", true, {}};
    const SpaceForm plane(0, 2);
    const double rho = 1.0;
    const Spectrum base = sphere_spectrum(GeodesicSphere(plane, rho), 60);
    double worst = 0.0;
    bool exact = true;
    for (double l : {2.5, std::numbers::pi, 4.0}) {
        const auto surf = cylinder_surface(plane, rho, l, grid);
        MergeOptions mo;
        mo.count = 20;
        const auto neu = merge_modes(surface_modes(surf, BoundaryCondition::neumann(), BoundaryCondition::neumann(), grid), mo);
        const auto dir =
            merge_modes(surface_modes(surf, BoundaryCondition::dirichlet(), BoundaryCondition::dirichlet(), grid), mo);

        const auto closed_cyl = cylinder_free_spectrum(base, l, 20).expanded(20);
        const auto direct_cyl = neu.spectrum.expanded(20);
        std::vector<SpectrumEntry> both = neu.spectrum.entries();
        both.insert(both.end(), dir.spectrum.entries().begin(), dir.spectrum.entries().end());
        const auto direct_circ = Spectrum(both).expanded(20);
        const double r_circle = l / std::numbers::pi;
        const auto circ = circle_factor_spectrum(base, r_circle, 20);
        const auto closed_circ = circ.expanded(20);
        if (closed_cyl.size() < 20 || direct_cyl.size() < 20 || direct_circ.size() < 20 || closed_circ.size() < 20) {
            r.pass = false;
            continue;
        }
        for (std::size_t i = 0; i < 20; ++i) {
            worst = std::max(worst, std::abs(closed_cyl[i] - direct_cyl[i]) / std::max(1.0, std::abs(closed_cyl[i])));
            worst = std::max(worst, std::abs(closed_circ[i] - direct_circ[i]) / std::max(1.0, std::abs(closed_circ[i])));
        }
        const double w = 1.0 / r_circle;
        const double min_formula = std::min(base.eigenvalue(0) + w * w, base.eigenvalue(1));
        exact = exact && circ.eigenvalue(1) == min_formula && circ.eigenvalue(0) == base.eigenvalue(0);
    }
    r.pass = r.pass && worst <= 1e-3 && exact;
    r.detail = "first 20 eigenvalues at m=" + std::to_string(grid) + ", max rel err " + detail::fmt(worst) +
               (exact ? "; lambda1/lambda2 identities exact" : "; lambda1/lambda2 identities FAILED");
    return r;
}

/// Jacobi field v = cos(phi) on generated free-boundary surfaces.
inline CriterionResult criterion_jacobi_field()
{
    CriterionResult r{5, "Jacobi field v", true, {}};
    std::ostringstream d;
    for (const auto& c : detail::free_boundary_cases()) {
        const auto surf = detail::free_boundary_surface(c);
        std::vector<double> res;
        const std::vector<int> grids = {512, 1024, 2048};
        for (int m : grids) {
            const auto pr = assemble_mode(surf, 0, BoundaryCondition::dirichlet(), BoundaryCondition::dirichlet(), m);
            const auto y = jacobi_residual(pr, pr.v);
            double mx = 0.0;
            for (double x : y) {
                mx = std::max(mx, std::abs(x));
            }
            res.push_back(mx);
        }
        const double q1 = res[0] / res[1];
        const double q2 = res[1] / res[2];
        const double vend = std::max(std::abs(surf.v.front()), std::abs(surf.v.back()));
        const auto dk = dirichlet_kernel(surf, grids);
        const bool ok = !surf.cylinder && q1 >= 3 && q1 <= 5 && q2 >= 3 && q2 <= 5 && vend <= 1e-8 &&
                        std::abs(dk.lambda) <= 1e-6 && dk.overlap >= 0.999;
        r.pass = r.pass && ok;
        d << "k=" << c.kappa << ": ratios " << std::to_string(q1).substr(0, 5) << "/" << std::to_string(q2).substr(0, 5)
          << ", |v_end| " << detail::fmt(vend) << ", lambda " << detail::fmt(dk.lambda) << ", overlap "
          << std::to_string(dk.overlap).substr(0, 8) << (ok ? "" : " FAIL") << "; ";
    }
    r.detail = d.str();
    return r;
}

/// Width, distance and diameter bounds and the lambda1 upper bound for curves.
inline CriterionResult criterion_bounds()
{
    CriterionResult r{6, "bounds", true, {}};
    const double eps = std::numeric_limits<double>::epsilon();
    const double w1 = 4 * std::numbers::pi / std::sqrt(3.0);
    bool ok = std::abs(nonexistence_width(1.0) - w1) <= 2 * eps * w1;
    for (double k : {0.25, 1.0, 3.0, 4.0, 10.0}) {
        const auto b = rosenberg_bound(k);
        ok = ok && std::abs(b.distance - 2 * std::numbers::pi / std::sqrt(3 * k)) <= 4 * eps * b.distance &&
             std::abs(b.diameter - 4 * std::numbers::pi / std::sqrt(3 * k)) <= 4 * eps * b.diameter;
    }
    // Every stable tube in S^2 x [0,l] has l <= pi < 4 pi / sqrt(3).
    int grid_points = 0;
    int violations = 0;
    int stable = 0;
    const SpaceForm s2(1, 2);
    for (int i = 1; i <= 100; ++i) {
        const double rho = std::numbers::pi * i / 101.0;
        for (int j = 1; j <= 100; ++j) {
            const double l = 8.0 * j / 100.0;
            ++grid_points;
            if (is_stable(tube_verdict(s2, rho, l).status)) {
                ++stable;
                if (!(l <= std::numbers::pi && l < nonexistence_width(1.0))) {
                    ++violations;
                }
            }
        }
    }
    // Curves with K >= kappa.
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int curves = 0;
    int curve_violations = 0;
    for (double kappa : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
        for (int c = 0; c < 25; ++c) {
            const std::size_t n = 64 + static_cast<std::size_t>(unit(rng) * 64);
            std::vector<double> h(n), K(n), ds(n);
            for (std::size_t i = 0; i < n; ++i) {
                h[i] = 3.0 * (unit(rng) - 0.5);
                K[i] = kappa + 2.0 * unit(rng);
                ds[i] = 0.01 + unit(rng);
            }
            ++curves;
            if (!(curve_lambda1_upper(h, K, ds, kappa) <= -kappa)) {
                ++curve_violations;
            }
        }
    }
    r.pass = ok && grid_points >= 10000 && violations == 0 && curves >= 100 && curve_violations == 0;
    r.detail = std::string("closed forms ") + (ok ? "exact" : "WRONG") + "; tube scan " + std::to_string(grid_points) +
               " points, " + std::to_string(stable) + " stable, " + std::to_string(violations) + " violations; " +
               std::to_string(curves) + " curves, " + std::to_string(curve_violations) + " above -kappa";
    return r;
}

/// Robin coefficient special cases.
inline CriterionResult criterion_capillary_q()
{
    CriterionResult r{7, "capillary q", true, {}};
    double worst = 0.0;
    for (double II : {-2.0, -1.0, 0.0, 0.5, 3.0}) {
        for (double sigma : {-1.0, 0.0, 0.7, 2.0}) {
            worst = std::max(worst, std::abs(capillary_q({std::numbers::pi / 2, II, sigma}) - II));
        }
    }
    const auto horo = WarpedSlab::horosphere(2.0);
    worst = std::max(worst, std::abs(capillary_q({std::numbers::pi / 2, slice_shape(horo, SlabEnd::bottom), 0.3}) + 1.0));
    worst = std::max(worst, std::abs(capillary_q({std::numbers::pi / 2, slice_shape(horo, SlabEnd::top), 0.3}) - 1.0));
    const auto flat = WarpedSlab::product(1.0);
    for (double theta : {0.3, 1.0, 2.0, 2.8}) {
        for (double sigma : {-1.5, 0.2, 1.0}) {
            const double q = capillary_q({theta, slice_shape(flat, SlabEnd::bottom), sigma});
            worst = std::max(worst, std::abs(q - std::cos(theta) / std::sin(theta) * sigma));
        }
    }
    r.pass = worst <= 1e-12;
    r.detail = "max abs err " + detail::fmt(worst) + " (limit 1e-12)";
    return r;
}

/// Residual and Sturm-count invariants for the pencils used above.
inline CriterionResult criterion_kernel_quality()
{
    CriterionResult r{8, "kernel quality", true, {}};
    std::vector<TridiagonalPencil> pencils;
    {
        const int m = 1000;
        const double h = 1.0 / m;
        pencils.emplace_back(std::vector<double>(m - 1, 2.0 / h), std::vector<double>(m - 2, -1.0 / h),
                             std::vector<double>(m - 1, h));
    }
    const SpaceForm plane(0, 2);
    const auto cyl = cylinder_surface(plane, 1.0, 3.0, 1000);
    for (int j : {0, 1, 3}) {
        pencils.push_back(discretize(assemble_mode(cyl, j, BoundaryCondition::neumann(), BoundaryCondition::neumann(), 1000)).pencil);
    }
    for (const auto& c : detail::free_boundary_cases()) {
        const auto surf = detail::free_boundary_surface(c);
        pencils.push_back(discretize(assemble_mode(surf, 0, BoundaryCondition::neumann(), BoundaryCondition::neumann(), 1024)).pencil);
        pencils.push_back(discretize(assemble_mode(surf, 1, BoundaryCondition::robin(0.7), BoundaryCondition::dirichlet(), 1024)).pencil);
    }
    for (int n : {2, 3, 4}) {
        const GeodesicSphere s(SpaceForm(1, n), 1.0);
        pencils.push_back(discretize(assemble_round_sphere_mode(s, 0, 400)).pencil);
        pencils.push_back(discretize(assemble_round_sphere_mode(s, 1, 400)).pencil);
    }
    int pairs = 0;
    int failures = 0;
    double worst = 0.0;
    for (const auto& p : pencils) {
        const std::size_t k = std::min<std::size_t>(6, p.size());
        const auto ev = eig_lowest(p, k);
        const double anorm = p.norm_inf();
        for (std::size_t i = 0; i < ev.size(); ++i) {
            ++pairs;
            const auto au = p.apply(ev[i].vector);
            double res = 0.0;
            double un = 0.0;
            for (std::size_t t = 0; t < au.size(); ++t) {
                res = std::max(res, std::abs(au[t] - ev[i].lambda * p.mass()[t] * ev[i].vector[t]));
                un = std::max(un, std::abs(ev[i].vector[t]));
            }
            worst = std::max(worst, res / (anorm * un));
            if (!(res <= 1e-8 * anorm * un)) {
                ++failures;
            }
            const double gap = i + 1 < ev.size() ? ev[i + 1].lambda - ev[i].lambda : 1.0;
            const double above = ev[i].lambda + 0.5 * gap;
            if (sturm_count(p, above) != i + 1) {
                ++failures;
            }
        }
        const double below = ev.front().lambda - 1e-6 * (1.0 + std::abs(ev.front().lambda));
        if (sturm_count(p, below) != 0) {
            ++failures;
        }
    }
    r.pass = failures == 0;
    r.detail = std::to_string(pencils.size()) + " pencils, " + std::to_string(pairs) + " pairs, max scaled residual " +
               detail::fmt(worst) + ", " + std::to_string(failures) + " invariant failures";
    return r;
}

inline std::vector<CriterionResult> run_acceptance()
{
    std::vector<CriterionResult> out;
    auto guarded = [&](int id, const char* name, auto&& fn) {
        try {
            out.push_back(fn());
        } catch (const std::exception& e) {
            out.push_back({id, name, false, std::string("exception: ") + e.what()});
        }
    };
    guarded(1, "tube thresholds", [] { return criterion_tube_thresholds(); });
    guarded(2, "cylinder criterion", [] { return criterion_cylinder(); });
    guarded(3, "Koiso worked cases", [] { return criterion_koiso_cases(); });
    guarded(4, "spectrum formulas", [] { return criterion_spectrum_formulas(); });
    guarded(5, "Jacobi field v", [] { return criterion_jacobi_field(); });
    guarded(6, "bounds", [] { return criterion_bounds(); });
    guarded(7, "capillary q", [] { return criterion_capillary_q(); });
    guarded(8, "kernel quality", [] { return criterion_kernel_quality(); });
    return out;
}

inline std::string format_result(const CriterionResult& r)
{
    return std::string(r.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(r.id) + " (" + r.name + "): " +
           r.detail;
}

} // namespace cmcslab::acceptance
