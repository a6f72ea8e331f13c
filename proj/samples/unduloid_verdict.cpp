// Shoots the free-boundary unduloids of a slab in R^3 and prints the
// stability verdict of each one.

#include <cstdio>
#include <numbers>

#include <cmcslab/cmcslab.hpp>

int main()
{
    const cmcslab::SpaceForm r3(0, 2);
    const double H = 0.5;
    const double l = 2.9;

    const auto surfaces = cmcslab::shoot_free_boundary_all(r3, H, l, cmcslab::default_bracket(r3, H));
    for (const auto& surf : surfaces) {
        cmcslab::DecideOptions opt;
        opt.grid = 1024;
        const auto v = cmcslab::decide_surface(surf, cmcslab::BoundaryPolicy::free_boundary, opt);
        std::printf("r0 = %.6f  cylinder = %d  lambda1 = %+.6e  lambda2 = %+.6e  -> %s (%s)\n",
                    surf.profile.samples.front().r, surf.cylinder ? 1 : 0, v.lambda1, v.lambda2,
                    cmcslab::to_string(v.status), cmcslab::to_string(v.label));
    }
}
