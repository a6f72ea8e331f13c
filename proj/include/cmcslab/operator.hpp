#pragma once

// Separation of the Jacobi operator L = Delta + W into rotational modes,
// the weak-form discretization of each mode and the product-spectrum formulas.

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "profile.hpp"
#include "spectral.hpp"
#include "spectrum.hpp"

namespace cmcslab {

/// End condition of a mode problem. Robin means u'(outward) = q u; Neumann is
/// Robin(0). Axis marks a pole where the orbit collapses: natural for mode 0,
/// Dirichlet for higher modes.
struct BoundaryCondition {
    enum class Kind { dirichlet, robin, axis };

    Kind kind = Kind::robin;
    double q = 0.0;

    static BoundaryCondition dirichlet() { return {Kind::dirichlet, 0.0}; }
    static BoundaryCondition neumann() { return {Kind::robin, 0.0}; }
    static BoundaryCondition robin(double q)
    {
        if (!std::isfinite(q)) {
            throw std::domain_error("BoundaryCondition: q must be finite");
        }
        return {Kind::robin, q};
    }
    static BoundaryCondition axis() { return {Kind::axis, 0.0}; }

    friend bool operator==(const BoundaryCondition&, const BoundaryCondition&) = default;
};

/// Mode-j part of the index form on a uniform arclength grid s_0..s_m:
/// int (u'^2 + mu u^2 / rho^2 - W u^2) p ds - sum_ends q p u^2, p = rho^(n-1).
struct SturmLiouvilleProblem {
    std::vector<double> s;
    std::vector<double> p;
    std::vector<double> rho;
    std::vector<double> W;
    std::vector<double> v; ///< Killing Jacobi field cos(phi) on the grid (surfaces only)
    double mu = 0.0;
    int mode = 0;
    BoundaryCondition bottom = BoundaryCondition::neumann();
    BoundaryCondition top = BoundaryCondition::neumann();

    int intervals() const noexcept { return static_cast<int>(s.size()) - 1; }
    double h() const { return (s.back() - s.front()) / intervals(); }
};

/// Pencil of one mode together with the grid nodes it acts on.
struct Discretization {
    TridiagonalPencil pencil;
    std::vector<int> nodes; ///< grid index of each unknown
    double h = 0.0;
};

namespace detail {

inline BoundaryCondition effective_bc(const BoundaryCondition& bc, int mode)
{
    if (bc.kind == BoundaryCondition::Kind::axis) {
        return mode == 0 ? BoundaryCondition::neumann() : BoundaryCondition::dirichlet();
    }
    return bc;
}

inline void validate(const SturmLiouvilleProblem& pr)
{
    const std::size_t n = pr.s.size();
    if (n < 3 || pr.p.size() != n || pr.rho.size() != n || pr.W.size() != n) {
        throw std::invalid_argument("SturmLiouvilleProblem: inconsistent or too small grid");
    }
    const double h = pr.h();
    if (!(h > 0.0)) {
        throw std::invalid_argument("SturmLiouvilleProblem: grid must be increasing");
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(pr.rho[i] > 0.0) || !(pr.p[i] > 0.0)) {
            std::ostringstream msg;
            msg << "orbit radius vanishes at interior node " << i << " (s=" << pr.s[i] << ")";
            throw degenerate_orbit(msg.str());
        }
    }
}

} // namespace detail

/// Weak-form finite elements with lumped mass: A_ii collects p_{i+-1/2}/h and
/// (mu/rho^2 - W) B_i, B_i = p_i h (halved at ends), Robin ends add -q p.
/// Dirichlet nodes are eliminated. A represents -L, so L u + lambda u = 0
/// becomes A u = lambda B u.
inline Discretization discretize(const SturmLiouvilleProblem& pr)
{
    detail::validate(pr);
    const int m = pr.intervals();
    const double h = pr.h();
    const BoundaryCondition bc[2] = {detail::effective_bc(pr.bottom, pr.mode),
                                     detail::effective_bc(pr.top, pr.mode)};
    const bool axis[2] = {pr.bottom.kind == BoundaryCondition::Kind::axis,
                          pr.top.kind == BoundaryCondition::Kind::axis};

    std::vector<double> k(static_cast<std::size_t>(m)); // k[i] couples nodes i and i+1
    for (int i = 0; i < m; ++i) {
        k[static_cast<std::size_t>(i)] = 0.5 * (pr.p[static_cast<std::size_t>(i)] + pr.p[static_cast<std::size_t>(i) + 1]) / h;
    }

    Discretization d;
    d.h = h;
    const int first = bc[0].kind == BoundaryCondition::Kind::dirichlet ? 1 : 0;
    const int last = bc[1].kind == BoundaryCondition::Kind::dirichlet ? m - 1 : m;
    if (last < first) {
        throw std::invalid_argument("discretize: no unknowns left");
    }
    std::vector<double> diag, off, mass;
    for (int i = first; i <= last; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        const bool end0 = i == 0;
        const bool end1 = i == m;
        double b = pr.p[iu] * h;
        if (end0 || end1) {
            const int e = end0 ? 0 : 1;
            const double p_half = end0 ? 0.5 * (pr.p[0] + pr.p[1]) : 0.5 * (pr.p[iu] + pr.p[iu - 1]);
            b = axis[e] ? 0.5 * h * 0.5 * (pr.p[iu] + p_half) : 0.5 * h * pr.p[iu];
            if (!(b > 0.0)) {
                throw degenerate_orbit("discretize: zero orbit at a non-axis end");
            }
        }
        double a = 0.0;
        if (i > 0) {
            a += k[iu - 1];
        }
        if (i < m) {
            a += k[iu];
        }
        double pot = -pr.W[iu];
        if (pr.mu != 0.0) {
            if (!(pr.rho[iu] > 0.0)) {
                throw degenerate_orbit("discretize: higher mode evaluated on a zero orbit");
            }
            pot += pr.mu / (pr.rho[iu] * pr.rho[iu]);
        }
        a += pot * b;
        if (end0 && bc[0].kind == BoundaryCondition::Kind::robin) {
            a -= bc[0].q * pr.p[0];
        }
        if (end1 && bc[1].kind == BoundaryCondition::Kind::robin) {
            a -= bc[1].q * pr.p[iu];
        }
        diag.push_back(a);
        mass.push_back(b);
        if (i < last) {
            off.push_back(-k[iu]);
        }
        d.nodes.push_back(i);
    }
    d.pencil = TridiagonalPencil(std::move(diag), std::move(off), std::move(mass));
    return d;
}

/// -L applied to grid values f at the unknown nodes: (A f)_i / B_i. Values at
/// eliminated Dirichlet nodes enter through the stencil.
inline std::vector<double> jacobi_residual(const SturmLiouvilleProblem& pr, const std::vector<double>& f)
{
    const auto d = discretize(pr);
    if (f.size() != pr.s.size()) {
        throw std::invalid_argument("jacobi_residual: size mismatch");
    }
    std::vector<double> x(d.nodes.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = f[static_cast<std::size_t>(d.nodes[i])];
    }
    auto y = d.pencil.apply(x);
    const int m = pr.intervals();
    const double h = pr.h();
    for (std::size_t i = 0; i < y.size(); ++i) {
        const int node = d.nodes[i];
        if (node == 1 && d.nodes.front() == 1) {
            y[i] -= 0.5 * (pr.p[0] + pr.p[1]) / h * f[0];
        }
        if (node == m - 1 && d.nodes.back() == m - 1) {
            const auto mu = static_cast<std::size_t>(m);
            y[i] -= 0.5 * (pr.p[mu] + pr.p[mu - 1]) / h * f[mu];
        }
        y[i] /= d.pencil.mass()[i];
    }
    return y;
}

namespace detail {

struct ResampledPoint {
    double r;
    double phi;
};

/// Cubic Hermite interpolation of (r, phi) using r' = cos phi and phi' from
/// the ODE at both interval ends.
inline ResampledPoint hermite_profile(const RotationalSurface& surf, double s)
{
    const auto& smp = surf.profile.samples;
    const std::size_t K = smp.size() - 1;
    const double s0 = smp.front().s;
    const double hs = (smp.back().s - s0) / static_cast<double>(K);
    double pos = (s - s0) / hs;
    auto k = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(K - 1)));
    const double t = pos - static_cast<double>(k);
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    const double h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t);
    const double h11 = t * t * (t - 1);
    const auto& a = smp[k];
    const auto& b = smp[k + 1];
    const double r = h00 * a.r + h10 * hs * std::cos(a.phi) + h01 * b.r + h11 * hs * std::cos(b.phi);
    const double phi = h00 * a.phi + h10 * hs * surf.dphi[k] + h01 * b.phi + h11 * hs * surf.dphi[k + 1];
    return {r, phi};
}

} // namespace detail

/// Mode j of the Jacobi operator on a rotational surface, on m uniform
/// intervals. When the sample count is a multiple of m the samples are used
/// directly, otherwise (r, phi) are resampled by cubic Hermite interpolation.
inline SturmLiouvilleProblem assemble_mode(const RotationalSurface& surf, int j, BoundaryCondition bottom,
                                           BoundaryCondition top, int m)
{
    if (m < 16) {
        throw std::domain_error("assemble_mode: grid must have at least 16 intervals");
    }
    if (j < 0) {
        throw std::domain_error("assemble_mode: mode must be >= 0");
    }
    if (surf.size() < 2 || surf.rho.size() != surf.size()) {
        throw std::domain_error("assemble_mode: surface fields not populated");
    }
    const auto& space = surf.space();
    const int n = space.dim();
    const int kappa = space.kappa();
    const auto& smp = surf.profile.samples;
    const std::size_t K = smp.size() - 1;
    const double s0 = smp.front().s;
    const double S = smp.back().s - s0;

    SturmLiouvilleProblem pr;
    pr.mode = j;
    pr.mu = harmonic_eigenvalue(n - 1, j);
    pr.bottom = bottom;
    pr.top = top;
    const auto mm = static_cast<std::size_t>(m);
    pr.s.resize(mm + 1);
    pr.p.resize(mm + 1);
    pr.rho.resize(mm + 1);
    pr.W.resize(mm + 1);
    pr.v.resize(mm + 1);
    const bool direct = K % mm == 0;
    for (std::size_t i = 0; i <= mm; ++i) {
        pr.s[i] = i == mm ? smp.back().s : s0 + S * static_cast<double>(i) / static_cast<double>(m);
        if (direct) {
            const std::size_t k = i * (K / mm);
            pr.rho[i] = surf.rho[k];
            pr.W[i] = surf.W[k];
            pr.v[i] = surf.v[k];
        } else {
            const auto pt = i == 0 ? detail::ResampledPoint{smp.front().r, smp.front().phi}
                          : i == mm ? detail::ResampledPoint{smp.back().r, smp.back().phi}
                                    : detail::hermite_profile(surf, pr.s[i]);
            if (!detail::in_profile_domain(kappa, pt.r)) {
                throw degenerate_orbit("assemble_mode: resampled profile reaches the axis");
            }
            const double ct = detail::profile_ct(kappa, pt.r);
            const double sp = std::sin(pt.phi);
            const double d = detail::profile_dphi(kappa, n, surf.profile.H, pt.r, pt.phi);
            pr.rho[i] = sn(kappa, pt.r);
            pr.W[i] = d * d + (n - 1) * (ct * sp) * (ct * sp) + (n - 1) * kappa * sp * sp;
            pr.v[i] = std::cos(pt.phi);
        }
        pr.p[i] = std::pow(pr.rho[i], n - 1);
    }
    detail::validate(pr);
    return pr;
}

/// Mode j of L on the closed geodesic sphere itself (a round S^d, d = n-1, of
/// radius R = sn(rho)), in polar arclength s in [0, pi R] with axis ends.
/// Orbits are S^{d-1}; for the circle (d = 1) they are point pairs, mode 0 is
/// the even part and mode 1 the odd part.
inline SturmLiouvilleProblem assemble_round_sphere_mode(const GeodesicSphere& sphere, int j, int m)
{
    if (m < 16) {
        throw std::domain_error("assemble_round_sphere_mode: grid must have at least 16 intervals");
    }
    const int d = sphere.space().dim() - 1;
    if (j < 0 || harmonic_multiplicity(d - 1, j) == 0) {
        throw std::domain_error("assemble_round_sphere_mode: no such mode");
    }
    const double R = sphere.intrinsic_radius();
    const double w = sphere_potential(sphere);
    SturmLiouvilleProblem pr;
    pr.mode = j;
    pr.mu = harmonic_eigenvalue(d - 1, j);
    const auto mm = static_cast<std::size_t>(m);
    pr.s.resize(mm + 1);
    pr.p.resize(mm + 1);
    pr.rho.resize(mm + 1);
    pr.W.assign(mm + 1, w);
    const double S = std::numbers::pi * R;
    for (std::size_t i = 0; i <= mm; ++i) {
        pr.s[i] = S * static_cast<double>(i) / static_cast<double>(m);
        pr.rho[i] = (i == 0 || i == mm) ? 0.0 : R * std::sin(pr.s[i] / R);
        pr.p[i] = d == 1 ? 1.0 : std::pow(pr.rho[i], d - 1);
    }
    if (d == 1) {
        const auto bc = j == 0 ? BoundaryCondition::neumann() : BoundaryCondition::dirichlet();
        pr.bottom = pr.top = bc;
        pr.mu = 0.0;
    } else {
        pr.bottom = pr.top = BoundaryCondition::axis();
    }
    detail::validate(pr);
    return pr;
}

/// Spectrum of the product Gamma x [0,l] with Neumann ends:
/// {lambda_m + (k pi / l)^2, k >= 0}. Exact for eigenvalues below the largest
/// base eigenvalue supplied.
inline Spectrum cylinder_free_spectrum(const Spectrum& base, double l, std::size_t count)
{
    if (!(l > 0.0)) {
        throw std::domain_error("cylinder_free_spectrum: l must be positive");
    }
    std::vector<SpectrumEntry> out;
    for (const auto& e : base.entries()) {
        for (std::size_t k = 0; k <= count; ++k) {
            const double w = static_cast<double>(k) * std::numbers::pi / l;
            out.push_back({e.lambda + w * w, e.multiplicity, e.mode, static_cast<int>(k)});
        }
    }
    return Spectrum(std::move(out)).truncated(count);
}

/// Spectrum of Gamma x S^1(r): {lambda_m + (k/r)^2}, multiplicity doubled for k >= 1.
inline Spectrum circle_factor_spectrum(const Spectrum& base, double r, std::size_t count)
{
    if (!(r > 0.0)) {
        throw std::domain_error("circle_factor_spectrum: r must be positive");
    }
    std::vector<SpectrumEntry> out;
    for (const auto& e : base.entries()) {
        for (std::size_t k = 0; k <= count; ++k) {
            const double w = static_cast<double>(k) / r;
            out.push_back({e.lambda + w * w, k == 0 ? e.multiplicity : 2 * e.multiplicity, e.mode,
                           static_cast<int>(k)});
        }
    }
    return Spectrum(std::move(out)).truncated(count);
}

/// Source of mode problems for merge_modes.
struct ModeFamily {
    std::function<SturmLiouvilleProblem(int)> assemble;
    std::function<int(int)> multiplicity; ///< 0 ends the family
    std::function<double(int)> mu;        ///< mode constant mu_j
    double orbit_volume = 1.0;            ///< |S^{d}| of the orbit, for integrals
};

inline ModeFamily surface_modes(const RotationalSurface& surf, BoundaryCondition bottom, BoundaryCondition top,
                                int m)
{
    const int d = surf.space().dim() - 1;
    auto held = std::make_shared<const RotationalSurface>(surf);
    return {[held, bottom, top, m](int j) { return assemble_mode(*held, j, bottom, top, m); },
            [d](int j) { return harmonic_multiplicity(d, j); }, [d](int j) { return harmonic_eigenvalue(d, j); },
            unit_sphere_volume(d)};
}

inline ModeFamily round_sphere_modes(const GeodesicSphere& sphere, int m)
{
    const int d = sphere.space().dim() - 1;
    return {[sphere, m](int j) { return assemble_round_sphere_mode(sphere, j, m); },
            [d](int j) { return harmonic_multiplicity(d - 1, j); },
            [d](int j) { return d == 1 ? 0.0 : harmonic_eigenvalue(d - 1, j); }, unit_sphere_volume(d - 1)};
}

struct ModeSolve {
    SturmLiouvilleProblem problem;
    Discretization disc;
    std::vector<Eigenpair> pairs;
    int multiplicity = 1;
};

struct ModeDecomposition {
    Spectrum spectrum;
    std::vector<ModeSolve> modes; ///< modes[j] is mode j
    double orbit_volume = 1.0;
    int grid = 0;
};

struct MergeOptions {
    std::size_t count = 4;    ///< eigenvalues wanted, with multiplicity
    std::size_t per_mode = 0; ///< eigenpairs per mode; 0 means `count`
    int j_max = -1;           ///< hard cap on the mode index; -1 stops by the a-priori bound
    SpectralConfig spectral{};
};

/// Lowest eigenvalues over all modes. Mode j differs from mode 0 by
/// mu_j diag(B / rho^2), so its lowest eigenvalue is at least
/// lambda_min(0) + mu_j / max(rho)^2; modes stop once that bound exceeds
/// max(0, count-th smallest eigenvalue found).
inline ModeDecomposition merge_modes(const ModeFamily& family, const MergeOptions& opt)
{
    if (opt.count < 1) {
        throw std::domain_error("merge_modes: count must be >= 1");
    }
    const std::size_t per_mode = opt.per_mode == 0 ? opt.count : opt.per_mode;
    ModeDecomposition out;
    out.orbit_volume = family.orbit_volume;
    std::vector<SpectrumEntry> entries;
    double lambda0 = 0.0;
    for (int j = 0;; ++j) {
        if (opt.j_max >= 0 && j > opt.j_max) {
            break;
        }
        const int mult = family.multiplicity(j);
        if (mult == 0) {
            break;
        }
        ModeSolve ms;
        ms.problem = family.assemble(j);
        ms.disc = discretize(ms.problem);
        ms.multiplicity = mult;
        const std::size_t k = std::min(per_mode, ms.disc.pencil.size());
        ms.pairs = eig_lowest(ms.disc.pencil, k, opt.spectral);
        for (std::size_t i = 0; i < ms.pairs.size(); ++i) {
            entries.push_back({ms.pairs[i].lambda, mult, j, static_cast<int>(i)});
        }
        if (j == 0) {
            lambda0 = ms.pairs.front().lambda;
            out.grid = ms.problem.intervals();
        }
        double rmax = 0.0;
        for (double r : ms.problem.rho) {
            rmax = std::max(rmax, r);
        }
        out.modes.push_back(std::move(ms));

        if (opt.j_max < 0) {
            const Spectrum so_far(entries);
            const double target = so_far.total_count() >= opt.count ? so_far.eigenvalue(opt.count - 1)
                                                                      : std::numeric_limits<double>::infinity();
            const double next_mu = family.mu(j + 1);
            if (lambda0 + next_mu / (rmax * rmax) > std::max(0.0, target)) {
                break;
            }
        }
        if (j > 100000) {
            throw solver_failure("merge_modes: mode enumeration did not terminate");
        }
    }
    out.spectrum = Spectrum(std::move(entries)).truncated(opt.count);
    return out;
}

/// Richardson-extrapolates spectra computed on grids m, 2m, 4m, ... Entries
/// are matched by (mode, index); only entries present on every level are kept.
inline Spectrum extrapolate_spectra(const std::vector<Spectrum>& levels, std::vector<std::string>* warnings = nullptr)
{
    if (levels.size() < 3) {
        throw std::domain_error("extrapolate_spectra: need at least 3 levels");
    }
    std::map<std::pair<int, int>, std::vector<double>> values;
    std::map<std::pair<int, int>, int> mult;
    for (const auto& e : levels.front().entries()) {
        values[{e.mode, e.index}];
        mult[{e.mode, e.index}] = e.multiplicity;
    }
    for (const auto& level : levels) {
        for (const auto& e : level.entries()) {
            auto it = values.find({e.mode, e.index});
            if (it != values.end()) {
                it->second.push_back(e.lambda);
            }
        }
    }
    std::vector<SpectrumEntry> out;
    for (const auto& [key, vals] : values) {
        if (vals.size() != levels.size()) {
            continue;
        }
        const auto ex = richardson(vals);
        if (warnings != nullptr && !ex.warning.empty()) {
            warnings->push_back("mode " + std::to_string(key.first) + " index " + std::to_string(key.second) +
                                ": " + ex.warning);
        }
        out.push_back({ex.value, mult[key], key.first, key.second});
    }
    return Spectrum(std::move(out));
}

inline const char* spectrum_csv_header() { return "lambda,multiplicity,mode_j,index_k"; }

inline std::string spectrum_to_csv(const Spectrum& spectrum)
{
    std::string out = std::string(spectrum_csv_header()) + "\n";
    for (const auto& e : spectrum.entries()) {
        out += io::format_double(e.lambda) + "," + std::to_string(e.multiplicity) + "," + std::to_string(e.mode) +
               "," + std::to_string(e.index) + "\n";
    }
    return out;
}

inline Spectrum spectrum_from_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("spectrum CSV: empty input");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != spectrum_csv_header()) {
        throw std::invalid_argument("spectrum CSV: unexpected header '" + line + "'");
    }
    std::vector<SpectrumEntry> entries;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto cells = io::split_csv_line(line);
        if (cells.size() != 4) {
            throw std::invalid_argument("spectrum CSV: expected 4 columns in '" + line + "'");
        }
        entries.push_back({std::stod(cells[0]), std::stoi(cells[1]), std::stoi(cells[2]), std::stoi(cells[3])});
    }
    return Spectrum(std::move(entries));
}

} // namespace cmcslab
