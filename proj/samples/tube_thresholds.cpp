// Compares the closed-form critical width of tubes over geodesic spheres with
// the width obtained from a discretized sphere spectrum.

#include <cstdio>
#include <numbers>

#include <cmcslab/cmcslab.hpp>

int main()
{
    for (int kappa : {-1, 0, 1}) {
        for (int n : {2, 3}) {
            const cmcslab::SpaceForm space(kappa, n);
            const double rho = 0.8;
            const double closed = std::numbers::pi * cmcslab::sn_ct(space, rho).sn / std::sqrt(n - 1.0);
            const double numeric =
                cmcslab::tube_threshold_numeric(space, rho, cmcslab::ThresholdRoute::mode_solver, 512);
            std::printf("kappa=%+d n=%d rho=%.2f  l*=%.12f  numeric=%.12f  rel.err=%.2e\n", kappa, n, rho, closed,
                        numeric, std::abs(numeric - closed) / closed);
        }
    }
}
