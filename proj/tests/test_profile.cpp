#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <cmcslab/operator.hpp>
#include <cmcslab/profile.hpp>

#include "oracle.hpp"

using namespace cmcslab;

namespace {

constexpr double pi = std::numbers::pi;

void expect_profile_invariants(const RotationalSurface& s, double l, double tol)
{
    const auto& smp = s.profile.samples;
    ASSERT_GE(smp.size(), 3u);
    EXPECT_EQ(smp.front().t, 0.0);
    EXPECT_NEAR(smp.back().t, l, tol);
    for (std::size_t i = 0; i + 1 < smp.size(); ++i) {
        const double ds = smp[i + 1].s - smp[i].s;
        // trapezoidal unit-speed residual
        const double dr = smp[i + 1].r - smp[i].r;
        const double mean_cos = 0.5 * (std::cos(smp[i].phi) + std::cos(smp[i + 1].phi));
        EXPECT_LE(std::abs(dr - mean_cos * ds), 10 * ds * ds) << "step " << i;
        if (i > 0) {
            EXPECT_GT(smp[i].r, 0.0);
        }
    }
    const int n = s.space().dim();
    const int kappa = s.space().kappa();
    for (std::size_t i = 0; i < smp.size(); ++i) {
        const double ct = sn_ct(s.space(), smp[i].r).ct;
        const double sp = std::sin(smp[i].phi);
        const double d = n * s.profile.H - (n - 1) * ct * sp;
        const double W = d * d + (n - 1) * ct * ct * sp * sp + (n - 1) * kappa * sp * sp;
        EXPECT_NEAR(s.W[i], W, 1e-12 * (1.0 + std::abs(W)));
        EXPECT_EQ(s.v[i], std::cos(smp[i].phi));
    }
}

} // namespace

TEST(OdeRhs, CylinderIsFixed)
{
    for (int kappa : {-1, 0, 1}) {
        const SpaceForm m(kappa, 3);
        const double rho = 0.9;
        const double H = 2.0 * sn_ct(m, rho).ct / 3.0;
        const auto d = ode_rhs({rho, 0.3, pi / 2}, m, H);
        EXPECT_NEAR(d.r, 0.0, 1e-16);
        EXPECT_NEAR(d.phi, 0.0, 1e-15);
    }
}

TEST(OdeRhs, SliceAndSubstitution)
{
    const auto d = ode_rhs({1.3, 0.0, 0.0}, SpaceForm(0, 2), 0.0);
    EXPECT_EQ(d.r, 1.0);
    EXPECT_EQ(d.t, 0.0);
    EXPECT_EQ(d.phi, 0.0);
    const auto e = ode_rhs({1.0, 0.0, pi / 4}, SpaceForm(0, 2), 0.5);
    EXPECT_NEAR(e.phi, 1.0 - oracle::series_sin(pi / 4), 1e-15);
    EXPECT_NEAR(e.phi, 0.2928932, 1e-7);
}

TEST(OdeRhs, AxisCrossingThrows)
{
    EXPECT_THROW(ode_rhs({0.0, 0.0, 1.0}, SpaceForm(0, 2), 0.1), axis_crossing);
    EXPECT_THROW(ode_rhs({-0.1, 0.0, 1.0}, SpaceForm(-1, 2), 0.1), axis_crossing);
    EXPECT_THROW(ode_rhs({pi, 0.0, 1.0}, SpaceForm(1, 2), 0.1), axis_crossing);
}

TEST(Shooting, FlatCylinderIsFoundAndFlagged)
{
    const SpaceForm r3(0, 2);
    const double rho = 1.25;
    const double H = 1.0 / (2 * rho);
    const auto all = shoot_free_boundary_all(r3, H, 1.0, default_bracket(r3, H));
    int cylinders = 0;
    for (const auto& s : all) {
        if (s.cylinder) {
            ++cylinders;
            EXPECT_NEAR(s.profile.samples.front().r, rho, 1e-10);
            EXPECT_NEAR(s.profile.length(), 1.0, 1e-10);
        }
    }
    EXPECT_EQ(cylinders, 1);
}

TEST(Shooting, UnduloidAgainstRk4Oracle)
{
    const SpaceForm r3(0, 2);
    const auto s = shoot_free_boundary(r3, 0.5, 2.9, default_bracket(r3, 0.5));
    ASSERT_FALSE(s.cylinder);
    const auto& a = s.profile.samples.front();
    const auto& b = s.profile.samples.back();
    const auto y = oracle::profile_rk4(0, 2, 0.5, {a.r, a.t, a.phi}, s.profile.length(), 20000);
    EXPECT_NEAR(y.r, b.r, 1e-9);
    EXPECT_NEAR(y.t, b.t, 1e-9);
    EXPECT_NEAR(y.phi, b.phi, 1e-9);
    // unduloid in R^3 with H = 1/2: r0 + r1 = 1/H
    EXPECT_NEAR(a.r + b.r, 2.0, 1e-8);
    expect_profile_invariants(s, 2.9, 1e-10);
    EXPECT_NEAR(s.v.front(), 0.0, 1e-10);
    EXPECT_NEAR(s.v.back(), 0.0, 1e-10);
}

TEST(Shooting, FreeBoundaryInvariantsAcrossSpaceForms)
{
    struct Case {
        int kappa;
        int n;
        double H;
        double l;
    };
    for (const auto& c : {Case{0, 2, 0.5, 2.9}, Case{1, 2, 0.3, 2.3}, Case{-1, 2, 0.8, 2.3}, Case{1, 2, 0.0, 2.0},
                          Case{0, 3, 0.6, 1.5}}) {
        const SpaceForm m(c.kappa, c.n);
        const auto all = shoot_free_boundary_all(m, c.H, c.l, default_bracket(m, c.H));
        ASSERT_FALSE(all.empty());
        for (const auto& s : all) {
            SCOPED_TRACE("kappa=" + std::to_string(c.kappa) + " r0=" + std::to_string(s.profile.samples[0].r));
            expect_profile_invariants(s, c.l, 1e-10);
            EXPECT_NEAR(s.v.front(), 0.0, 1e-10);
            EXPECT_NEAR(s.v.back(), 0.0, 1e-10);
            EXPECT_DOUBLE_EQ(s.theta0, pi / 2);
            EXPECT_DOUBLE_EQ(s.theta1, pi / 2);
        }
    }
}

TEST(Shooting, SphereBumpHasOneSignedKillingField)
{
    // minimal bridge in S^2 x [0,2]; v changes sign nowhere in the interior
    const SpaceForm s2(1, 2);
    const auto all = shoot_free_boundary_all(s2, 0.0, 2.0, default_bracket(s2, 0.0));
    bool found = false;
    for (const auto& s : all) {
        if (std::abs(s.profile.samples.front().r - 0.455861) > 1e-5) {
            continue;
        }
        found = true;
        for (std::size_t i = 1; i + 1 < s.v.size(); ++i) {
            EXPECT_GT(s.v[i], 0.0);
        }
    }
    EXPECT_TRUE(found);
}

TEST(Shooting, CapillaryCatenoidMatchesCatenary)
{
    const SpaceForm r3(0, 2);
    const double l = 1.0;
    for (double theta : {0.6, 1.0, 1.3}) {
        const auto s = shoot_capillary(r3, 0.0, l, theta, theta, default_bracket(r3, 0.0));
        // neck radius a with sinh(l / 2a) = cot(theta)
        const double a = l / (2.0 * std::asinh(1.0 / std::tan(theta)));
        for (const auto& p : s.profile.samples) {
            EXPECT_NEAR(p.r, a * std::cosh((p.t - l / 2) / a), 1e-9) << "theta=" << theta;
        }
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double r = s.profile.samples[i].r;
            const double sp = std::sin(s.profile.samples[i].phi);
            EXPECT_NEAR(s.W[i], 2 * sp * sp / (r * r), 1e-12 * (1 + s.W[i]));
        }
    }
}

TEST(Shooting, FlatMinimalFreeBoundaryHasNoSolution)
{
    const SpaceForm r3(0, 2);
    EXPECT_THROW(shoot_free_boundary(r3, 0.0, 1.0, default_bracket(r3, 0.0)), no_solution);
}

TEST(Shooting, SymmetricTiltIsSymmetric)
{
    const SpaceForm r3(0, 2);
    const auto s = shoot_capillary(r3, 0.0, 1.0, pi / 3, pi / 3, default_bracket(r3, 0.0));
    const auto& smp = s.profile.samples;
    for (std::size_t i = 0; i < smp.size(); ++i) {
        EXPECT_NEAR(smp[i].r, smp[smp.size() - 1 - i].r, 1e-9);
    }
    EXPECT_NEAR(smp.back().phi, pi / 3, 1e-10);
}

TEST(Shooting, ReflectionSymmetryProperty)
{
    const SpaceForm r3(0, 2);
    const double H = 0.4;
    const double l = 1.1;
    const double th0 = 1.2;
    const double th1 = 1.75;
    const auto fwd = shoot_capillary_all(r3, H, l, th0, th1, default_bracket(r3, H));
    const auto bwd = shoot_capillary_all(r3, H, l, th1, th0, default_bracket(r3, H));
    ASSERT_FALSE(fwd.empty());
    for (const auto& f : fwd) {
        const auto& fs = f.profile.samples;
        const RotationalSurface* match = nullptr;
        for (const auto& b : bwd) {
            if (std::abs(b.profile.samples.front().r - fs.back().r) < 1e-7) {
                match = &b;
            }
        }
        ASSERT_NE(match, nullptr) << "no reflected partner for r0=" << fs.front().r;
        const auto& bs = match->profile.samples;
        ASSERT_EQ(bs.size(), fs.size());
        EXPECT_NEAR(match->profile.length(), f.profile.length(), 1e-9);
        for (std::size_t i = 0; i < fs.size(); ++i) {
            const auto& p = fs[fs.size() - 1 - i];
            EXPECT_NEAR(bs[i].r, p.r, 1e-8);
            EXPECT_NEAR(bs[i].t, l - p.t, 1e-8);
            EXPECT_NEAR(bs[i].phi, pi - p.phi, 1e-8);
        }
    }
}

TEST(Shooting, FreeBoundaryEqualsCapillaryAtRightAngles)
{
    const SpaceForm m(-1, 2);
    const auto a = shoot_free_boundary(m, 0.8, 2.3, default_bracket(m, 0.8));
    const auto b = shoot_capillary(m, 0.8, 2.3, pi / 2, pi / 2, default_bracket(m, 0.8));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.profile.samples[i].r, b.profile.samples[i].r);
        EXPECT_EQ(a.profile.samples[i].phi, b.profile.samples[i].phi);
        EXPECT_EQ(a.W[i], b.W[i]);
    }
}

TEST(Shooting, InputValidation)
{
    const SpaceForm r3(0, 2);
    EXPECT_THROW(shoot_free_boundary(r3, -0.1, 1.0, {0.1, 1.0}), std::domain_error);
    EXPECT_THROW(shoot_free_boundary(r3, 0.5, 0.0, {0.1, 1.0}), std::domain_error);
    EXPECT_THROW(shoot_capillary(r3, 0.5, 1.0, 0.0, 1.0, {0.1, 1.0}), std::domain_error);
    EXPECT_THROW(shoot_capillary(r3, 0.5, 1.0, 1.0, pi, {0.1, 1.0}), std::domain_error);
    EXPECT_THROW(shoot_free_boundary(r3, 0.5, 1.0, {1.0, 0.1}), std::domain_error);
    EXPECT_THROW(shoot_free_boundary(SpaceForm(1, 2), 0.5, 1.0, {0.1, 4.0}), std::domain_error);
}

TEST(SurfaceFields, CylinderPotentialIsTubeConstant)
{
    for (int kappa : {-1, 0, 1}) {
        for (int n : {2, 3}) {
            const SpaceForm m(kappa, n);
            const double rho = 0.7;
            const auto s = cylinder_surface(m, rho, 2.0, 64);
            EXPECT_TRUE(s.cylinder);
            const double w = sphere_potential(GeodesicSphere(m, rho));
            for (double x : s.W) {
                EXPECT_NEAR(x, w, 1e-12 * (1 + w));
            }
            // n H = (n-1) ct(rho)
            EXPECT_NEAR(n * s.profile.H, (n - 1) * sn_ct(m, rho).ct, 1e-14);
        }
    }
}

TEST(SurfaceFields, SliceIsTotallyGeodesic)
{
    ProfileCurve c;
    c.space = SpaceForm(0, 3);
    c.H = 0.0;
    for (int i = 0; i <= 32; ++i) {
        const double s = i / 32.0;
        c.samples.push_back({s, 1.0 + s, 0.0, 0.0});
    }
    const auto s = surface_fields(c);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(s.W[i], 0.0);
        EXPECT_EQ(s.v[i], 1.0);
    }
}

TEST(SurfaceFields, JacobiResidualOfKillingFieldIsSecondOrder)
{
    ShootingOptions opt;
    opt.samples = 4096;
    for (const auto& [kappa, H, l] : {std::tuple{0, 0.5, 2.9}, std::tuple{1, 0.3, 2.3}, std::tuple{-1, 0.8, 2.3}}) {
        const SpaceForm m(kappa, 2);
        const auto s = shoot_free_boundary(m, H, l, default_bracket(m, H), opt);
        std::vector<double> norms;
        for (int grid : {512, 1024, 2048}) {
            // Neumann end rows are first order; measure on the interior stencil.
            const auto pr = assemble_mode(s, 0, BoundaryCondition::dirichlet(), BoundaryCondition::dirichlet(), grid);
            const auto res = jacobi_residual(pr, pr.v);
            double mx = 0.0;
            for (double x : res) {
                mx = std::max(mx, std::abs(x));
            }
            norms.push_back(mx);
        }
        for (std::size_t i = 0; i + 1 < norms.size(); ++i) {
            const double ratio = norms[i] / norms[i + 1];
            EXPECT_GE(ratio, 3.0) << "kappa=" << kappa;
            EXPECT_LE(ratio, 5.0) << "kappa=" << kappa;
        }
    }
}

TEST(SurfaceJson, RoundTripIsExact)
{
    const SpaceForm m(1, 3);
    ShootingOptions opt;
    opt.samples = 256;
    const auto s = shoot_capillary(m, 0.2, 1.0, 1.3, 1.9, default_bracket(m, 0.2), opt);
    const auto text = io::to_json_string(to_json(s));
    const auto back = surface_from_json(io::json::parse(text));
    ASSERT_EQ(back.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(back.profile.samples[i].s, s.profile.samples[i].s);
        EXPECT_EQ(back.profile.samples[i].r, s.profile.samples[i].r);
        EXPECT_EQ(back.profile.samples[i].t, s.profile.samples[i].t);
        EXPECT_EQ(back.profile.samples[i].phi, s.profile.samples[i].phi);
        EXPECT_EQ(back.W[i], s.W[i]);
    }
    EXPECT_EQ(back.theta0, s.theta0);
    EXPECT_EQ(back.theta1, s.theta1);
    EXPECT_EQ(back.l, s.l);
    EXPECT_EQ(io::to_json_string(to_json(back)), text);
    EXPECT_THROW(surface_from_json(io::json{{"format", "other"}}), std::invalid_argument);
}
