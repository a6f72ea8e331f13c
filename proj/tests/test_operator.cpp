#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include <cmcslab/operator.hpp>

#include "oracle.hpp"

using namespace cmcslab;

namespace {

constexpr double pi = std::numbers::pi;

SturmLiouvilleProblem flat_problem(double length, int m, double W, BoundaryCondition bottom, BoundaryCondition top)
{
    SturmLiouvilleProblem pr;
    const auto n = static_cast<std::size_t>(m) + 1;
    pr.s.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        pr.s[i] = length * static_cast<double>(i) / m;
    }
    pr.p.assign(n, 1.0);
    pr.rho.assign(n, 1.0);
    pr.W.assign(n, W);
    pr.bottom = bottom;
    pr.top = top;
    return pr;
}

RotationalSurface slice_annulus(int n, double a, double b, int samples)
{
    ProfileCurve c;
    c.space = SpaceForm(0, n);
    for (int i = 0; i <= samples; ++i) {
        const double s = (b - a) * i / samples;
        c.samples.push_back({s, a + s, 0.0, 0.0});
    }
    return surface_fields(c);
}

const RotationalSurface& unduloid()
{
    static const RotationalSurface s = [] {
        ShootingOptions opt;
        opt.samples = 4096;
        const SpaceForm r3(0, 2);
        return shoot_free_boundary(r3, 0.5, 2.9, default_bracket(r3, 0.5), opt);
    }();
    return s;
}

const auto neumann = BoundaryCondition::neumann();
const auto dirichlet = BoundaryCondition::dirichlet();

} // namespace

TEST(Discretize, SingleInteriorNodeStencil)
{
    const double h = 0.25;
    const auto d = discretize(flat_problem(2 * h, 2, 0.0, dirichlet, dirichlet));
    ASSERT_EQ(d.pencil.size(), 1u);
    EXPECT_DOUBLE_EQ(d.pencil.diag()[0], 2.0 / h);
    EXPECT_DOUBLE_EQ(d.pencil.mass()[0], h);
    EXPECT_DOUBLE_EQ(d.pencil.diag()[0] / d.pencil.mass()[0], 2.0 / (h * h));
    EXPECT_EQ(d.nodes, std::vector<int>{1});
}

TEST(Discretize, NeumannConstantPotentialIsExact)
{
    for (double c : {-3.0, 0.0, 0.7, 12.5}) {
        const auto d = discretize(flat_problem(2.0, 200, c, neumann, neumann));
        const auto pairs = eig_lowest(d.pencil, 1);
        EXPECT_NEAR(pairs[0].lambda, -c, 1e-11 * (1 + std::abs(c)));
    }
}

TEST(Discretize, RobinTanhRoot)
{
    // -u'' = lambda u on [0,1], u'(outward) = u at both ends; lowest is -k^2
    // with k tanh(k/2) = 1
    const double k = oracle::bisect([](double x) { return x * std::tanh(x / 2) - 1.0; }, 0.1, 5.0);
    const auto d = discretize(flat_problem(1.0, 4000, 0.0, BoundaryCondition::robin(1.0), BoundaryCondition::robin(1.0)));
    const auto pairs = eig_lowest(d.pencil, 1);
    EXPECT_LT(pairs[0].lambda, 0.0);
    EXPECT_NEAR(pairs[0].lambda, -k * k, 1e-6);
}

TEST(Discretize, RobinRejectsNonFinite)
{
    EXPECT_THROW(BoundaryCondition::robin(std::nan("")), std::domain_error);
    EXPECT_THROW(BoundaryCondition::robin(INFINITY), std::domain_error);
}

TEST(Discretize, DegenerateOrbitIsReported)
{
    auto pr = flat_problem(1.0, 32, 0.0, neumann, neumann);
    pr.rho[10] = 0.0;
    pr.p[10] = 0.0;
    EXPECT_THROW(discretize(pr), degenerate_orbit);
}

TEST(AssembleMode, CylinderOverCircleNeumann)
{
    const double l = 2.5;
    const auto cyl = cylinder_surface(SpaceForm(0, 2), 1.0, l, 2000);
    const auto d = discretize(assemble_mode(cyl, 0, neumann, neumann, 2000));
    const auto pairs = eig_lowest(d.pencil, 5);
    for (int k = 0; k < 5; ++k) {
        const double want = (k * pi / l) * (k * pi / l) - 1.0;
        EXPECT_NEAR(pairs[static_cast<std::size_t>(k)].lambda, want, 2e-5 * std::max(1.0, std::abs(want))) << "k=" << k;
    }
}

TEST(AssembleMode, SliceAnnulusDirichlet)
{
    const double a = 1.0;
    const double b = 2.0;
    // n = 3: u = sin(k (r-a)) / r gives exactly (k pi / L)^2
    {
        const auto s = slice_annulus(3, a, b, 2000);
        const auto pairs = eig_lowest(discretize(assemble_mode(s, 0, dirichlet, dirichlet, 2000)).pencil, 3);
        for (int k = 1; k <= 3; ++k) {
            const double want = (k * pi / (b - a)) * (k * pi / (b - a));
            EXPECT_NEAR(pairs[static_cast<std::size_t>(k - 1)].lambda, want, 1e-5 * want);
        }
    }
    // n = 2: Bessel cross product J0(ka) Y0(kb) - J0(kb) Y0(ka) = 0
    {
        using boost::math::cyl_bessel_j;
        using boost::math::cyl_neumann;
        auto cross = [&](double k) {
            return cyl_bessel_j(0, k * a) * cyl_neumann(0, k * b) - cyl_bessel_j(0, k * b) * cyl_neumann(0, k * a);
        };
        const double k1 = oracle::bisect(cross, 2.5, 3.5);
        const auto s = slice_annulus(2, a, b, 2000);
        const auto pairs = eig_lowest(discretize(assemble_mode(s, 0, dirichlet, dirichlet, 2000)).pencil, 1);
        EXPECT_NEAR(pairs[0].lambda, k1 * k1, 1e-5 * k1 * k1);
    }
}

TEST(AssembleMode, HighModesArePositive)
{
    const auto& s = unduloid();
    double rmax = 0.0;
    double wmax = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        rmax = std::max(rmax, s.rho[i]);
        wmax = std::max(wmax, s.W[i]);
    }
    int j = 1;
    while (harmonic_eigenvalue(1, j) / (rmax * rmax) - wmax <= 0.0) {
        ++j;
    }
    for (const auto& bc : {neumann, dirichlet}) {
        const auto pairs = eig_lowest(discretize(assemble_mode(s, j, bc, bc, 512)).pencil, 3);
        for (const auto& p : pairs) {
            EXPECT_GT(p.lambda, 0.0) << "j=" << j;
        }
    }
}

TEST(AssembleMode, Validation)
{
    const auto& s = unduloid();
    EXPECT_THROW(assemble_mode(s, 0, neumann, neumann, 8), std::domain_error);
    EXPECT_THROW(assemble_mode(s, -1, neumann, neumann, 64), std::domain_error);
}

TEST(AssembleMode, RayleighQuotientEqualsEigenvalue)
{
    for (const auto& [bottom, top] : {std::pair{neumann, neumann}, std::pair{dirichlet, dirichlet},
                                      std::pair{BoundaryCondition::robin(0.4), BoundaryCondition::robin(-0.3)}}) {
        for (int j : {0, 1, 2}) {
            const auto d = discretize(assemble_mode(unduloid(), j, bottom, top, 1024));
            for (const auto& p : eig_lowest(d.pencil, 4)) {
                const auto Au = d.pencil.apply(p.vector);
                double uAu = 0.0;
                for (std::size_t i = 0; i < Au.size(); ++i) {
                    uAu += p.vector[i] * Au[i];
                }
                const double rq = uAu / d.pencil.inner(p.vector, p.vector);
                EXPECT_NEAR(rq, p.lambda, 1e-10 * std::max(1.0, std::abs(p.lambda)));
            }
        }
    }
}

TEST(AssembleMode, LowestEigenvalueMonotoneInMode)
{
    for (const auto& bc : {neumann, dirichlet, BoundaryCondition::robin(0.5)}) {
        double prev = -INFINITY;
        for (int j = 0; j < 8; ++j) {
            const double lo = eig_lowest(discretize(assemble_mode(unduloid(), j, bc, bc, 512)).pencil, 1)[0].lambda;
            EXPECT_GE(lo, prev) << "j=" << j;
            prev = lo;
        }
    }
}

TEST(AssembleMode, DirichletAboveNeumann)
{
    for (int j = 0; j < 4; ++j) {
        const double dn = eig_lowest(discretize(assemble_mode(unduloid(), j, dirichlet, dirichlet, 512)).pencil, 1)[0].lambda;
        const double nn = eig_lowest(discretize(assemble_mode(unduloid(), j, neumann, neumann, 512)).pencil, 1)[0].lambda;
        EXPECT_GE(dn, nn) << "j=" << j;
    }
}

TEST(AssembleMode, SecondOrderConvergence)
{
    auto lowest = [](int m) {
        return eig_lowest(discretize(assemble_mode(unduloid(), 0, neumann, neumann, m)).pencil, 2)[1].lambda;
    };
    const double a = lowest(256);
    const double b = lowest(512);
    const double c = lowest(1024);
    const double ratio = (a - b) / (b - c);
    EXPECT_GE(ratio, 3.0);
    EXPECT_LE(ratio, 5.0);
}

TEST(ProductSpectra, CylinderFreeSpectrum)
{
    const auto flat = cylinder_free_spectrum(Spectrum({{0.0, 1, 0, 0}}), 1.0, 3).expanded(3);
    EXPECT_EQ(flat[0], 0.0);
    EXPECT_NEAR(flat[1], pi * pi, 1e-14);
    EXPECT_NEAR(flat[2], 4 * pi * pi, 1e-13);

    const auto base = sphere_spectrum(GeodesicSphere(SpaceForm(0, 2), 1.0), 5);
    const auto cyl = cylinder_free_spectrum(base, pi, 4).expanded(4);
    EXPECT_EQ(cyl[0], -1.0);
    for (std::size_t i = 1; i < 4; ++i) {
        EXPECT_NEAR(cyl[i], 0.0, 1e-15);
    }
    EXPECT_EQ(cylinder_free_spectrum(base, 3.7, 10).eigenvalue(0), base.eigenvalue(0));
    EXPECT_THROW(cylinder_free_spectrum(base, 0.0, 3), std::domain_error);
}

TEST(ProductSpectra, CircleFactorSpectrum)
{
    const auto flat = circle_factor_spectrum(Spectrum({{0.0, 1, 0, 0}}), 1.0, 5).expanded(5);
    const std::vector<double> want = {0, 1, 1, 4, 4};
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_NEAR(flat[i], want[i], 1e-15);
    }
    EXPECT_THROW(circle_factor_spectrum(Spectrum({{0.0, 1, 0, 0}}), -1.0, 3), std::domain_error);
}

TEST(ProductSpectra, CircleFactorDoublesCylinderModes)
{
    const auto base = sphere_spectrum(GeodesicSphere(SpaceForm(1, 3), 1.1), 12);
    for (double l : {0.8, 2.0, 5.0}) {
        const auto cyl = cylinder_free_spectrum(base, l, 30);
        const auto circ = circle_factor_spectrum(base, l / pi, 60);
        for (const auto& e : cyl.entries()) {
            bool found = false;
            for (const auto& c : circ.entries()) {
                if (c.mode == e.mode && c.index == e.index) {
                    found = true;
                    EXPECT_NEAR(c.lambda, e.lambda, 1e-12 * (1 + std::abs(e.lambda)));
                    EXPECT_EQ(c.multiplicity, e.index == 0 ? e.multiplicity : 2 * e.multiplicity);
                }
            }
            if (e.lambda < circ.entries().back().lambda) {
                EXPECT_TRUE(found) << "mode " << e.mode << " index " << e.index;
            }
        }
        EXPECT_EQ(circ.eigenvalue(0), base.eigenvalue(0));
        // second eigenvalue: min(lambda1 + pi^2/l^2, lambda2(base))
        const double w = pi / l;
        EXPECT_NEAR(circ.eigenvalue(1), std::min(base.eigenvalue(0) + w * w, base.eigenvalue(1)), 1e-12);
    }
}

TEST(MergeModes, CylinderMatchesProductFormula)
{
    const double l = 2.2;
    const auto cyl = cylinder_surface(SpaceForm(0, 2), 1.0, l, 2048);
    MergeOptions opt;
    opt.count = 8;
    const auto dec = merge_modes(surface_modes(cyl, neumann, neumann, 2048), opt);
    const auto want = cylinder_free_spectrum(sphere_spectrum(GeodesicSphere(SpaceForm(0, 2), 1.0), 10), l, 8);
    const auto got = dec.spectrum.expanded(8);
    const auto ref = want.expanded(8);
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_NEAR(got[i], ref[i], 1e-5 * (1 + std::abs(ref[i]))) << "i=" << i;
    }
    for (const auto& e : dec.spectrum.entries()) {
        EXPECT_EQ(e.multiplicity, harmonic_multiplicity(1, e.mode));
    }
}

TEST(MergeModes, DirichletKernelOfUnduloidIsKillingField)
{
    MergeOptions opt;
    opt.count = 6;
    const auto dec = merge_modes(surface_modes(unduloid(), dirichlet, dirichlet, 1024), opt);
    const auto& mode0 = dec.modes.front();
    std::size_t best = 0;
    for (std::size_t i = 0; i < mode0.pairs.size(); ++i) {
        if (std::abs(mode0.pairs[i].lambda) < std::abs(mode0.pairs[best].lambda)) {
            best = i;
        }
    }
    EXPECT_LE(std::abs(mode0.pairs[best].lambda), 1e-4);
    std::vector<double> v;
    for (int node : mode0.disc.nodes) {
        v.push_back(mode0.problem.v[static_cast<std::size_t>(node)]);
    }
    const auto& u = mode0.pairs[best].vector;
    const auto& P = mode0.disc.pencil;
    const double overlap = std::abs(P.inner(u, v)) / std::sqrt(P.inner(u, u) * P.inner(v, v));
    EXPECT_GE(overlap, 0.999);
}

TEST(MergeModes, StopsByAprioriBoundOrCap)
{
    MergeOptions opt;
    opt.count = 4;
    opt.j_max = 2;
    const auto capped = merge_modes(surface_modes(unduloid(), neumann, neumann, 256), opt);
    EXPECT_EQ(capped.modes.size(), 3u);
    opt.j_max = -1;
    const auto free = merge_modes(surface_modes(unduloid(), neumann, neumann, 256), opt);
    EXPECT_EQ(free.spectrum.total_count(), 4u);
    // an extra mode must not change the result
    opt.j_max = static_cast<int>(free.modes.size());
    const auto more = merge_modes(surface_modes(unduloid(), neumann, neumann, 256), opt);
    EXPECT_EQ(more.spectrum.expanded(4), free.spectrum.expanded(4));
}

TEST(SpectrumCsv, RoundTripIsExact)
{
    MergeOptions opt;
    opt.count = 7;
    const auto spec = merge_modes(surface_modes(unduloid(), neumann, neumann, 256), opt).spectrum;
    const auto csv = spectrum_to_csv(spec);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "lambda,multiplicity,mode_j,index_k");
    std::istringstream in(csv);
    const auto back = spectrum_from_csv(in);
    EXPECT_EQ(back.entries(), spec.entries());
    std::istringstream bad("lambda,mult\n1,1\n");
    EXPECT_THROW(spectrum_from_csv(bad), std::invalid_argument);
}

TEST(ExtrapolateSpectra, MatchesByModeAndIndex)
{
    std::vector<Spectrum> levels;
    for (int m : {256, 512, 1024}) {
        const auto cyl = cylinder_surface(SpaceForm(0, 2), 1.0, 3.0, 1024);
        MergeOptions opt;
        opt.count = 5;
        levels.push_back(merge_modes(surface_modes(cyl, neumann, neumann, m), opt).spectrum);
    }
    const auto ex = extrapolate_spectra(levels);
    const auto ref = cylinder_free_spectrum(sphere_spectrum(GeodesicSphere(SpaceForm(0, 2), 1.0), 10), 3.0, 5);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_NEAR(ex.eigenvalue(i), ref.eigenvalue(i), 1e-9);
    }
}
