#pragma once

// Dormand-Prince 5(4) with Hairer's 5th-order dense output, step rejection on
// domain violations and a scalar event located by bisection on the
// interpolant.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace cmcslab::detail {

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
struct DenseStep {
    double x0 = 0.0;
    double h = 0.0;
    std::array<State<N>, 5> rc{};

    State<N> operator()(double x) const
    {
        const double th = (x - x0) / h;
        const double th1 = 1.0 - th;
        State<N> y{};
        for (std::size_t i = 0; i < N; ++i) {
            y[i] = rc[0][i] + th * (rc[1][i] + th1 * (rc[2][i] + th * (rc[3][i] + th1 * rc[4][i])));
        }
        return y;
    }
};

struct Dopri5Options {
    double rtol = 1e-12;
    double atol = 1e-12;
    double h_init = 1e-3;
    double h_max = 0.1;
    double h_min = 1e-14;
    std::size_t max_steps = 2'000'000;
};

enum class Dopri5Stop { reached_end, event, step_underflow, too_many_steps };

template <std::size_t N>
struct Dopri5Result {
    Dopri5Stop stop = Dopri5Stop::reached_end;
    double x_end = 0.0;
    State<N> y_end{};
    std::vector<DenseStep<N>> steps;

    State<N> at(double x) const
    {
        auto it = std::upper_bound(steps.begin(), steps.end(), x,
                                   [](double v, const DenseStep<N>& s) { return v < s.x0; });
        if (it != steps.begin()) {
            --it;
        }
        return (*it)(x);
    }
};

/// Integrates y' = f(x, y) from x0 to at most x_max. `f(x, y, dy)` returns false
/// when y leaves the domain; the step is then rejected and shrunk. `event(y)`
/// (optional) stops the integration at its first upward zero crossing.
template <std::size_t N, class Rhs, class Event>
Dopri5Result<N> dopri5(Rhs&& f, double x0, const State<N>& y0, double x_max, Event&& event,
                       const Dopri5Options& opt)
{
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                     a76 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;
    constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                     d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                     d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    Dopri5Result<N> res;
    State<N> y = y0;
    double x = x0;
    State<N> k1{}, k2{}, k3{}, k4{}, k5{}, k6{}, k7{}, yt{}, ynew{};
    if (!f(x, y, k1)) {
        res.stop = Dopri5Stop::step_underflow;
        res.x_end = x;
        res.y_end = y;
        return res;
    }
    double h = std::min(opt.h_init, x_max - x0);
    double err_old = 1e-4;
    double g_prev = event(y);

    auto stage = [&](double xs, const auto& coeffs, State<N>& out) {
        for (std::size_t i = 0; i < N; ++i) {
            double acc = y[i];
            for (const auto& [a, k] : coeffs) {
                acc += h * a * (*k)[i];
            }
            yt[i] = acc;
        }
        return f(xs, yt, out);
    };
    using Term = std::pair<double, const State<N>*>;

    for (std::size_t steps = 0; steps < opt.max_steps; ++steps) {
        if (x >= x_max) {
            res.stop = Dopri5Stop::reached_end;
            res.x_end = x;
            res.y_end = y;
            return res;
        }
        h = std::min({h, opt.h_max, x_max - x});
        if (h < opt.h_min) {
            res.stop = Dopri5Stop::step_underflow;
            res.x_end = x;
            res.y_end = y;
            return res;
        }
        bool ok = stage(x + c2 * h, std::array<Term, 1>{Term{a21, &k1}}, k2) &&
                  stage(x + c3 * h, std::array<Term, 2>{Term{a31, &k1}, Term{a32, &k2}}, k3) &&
                  stage(x + c4 * h, std::array<Term, 3>{Term{a41, &k1}, Term{a42, &k2}, Term{a43, &k3}}, k4) &&
                  stage(x + c5 * h,
                        std::array<Term, 4>{Term{a51, &k1}, Term{a52, &k2}, Term{a53, &k3}, Term{a54, &k4}}, k5) &&
                  stage(x + h,
                        std::array<Term, 5>{Term{a61, &k1}, Term{a62, &k2}, Term{a63, &k3}, Term{a64, &k4},
                                            Term{a65, &k5}},
                        k6);
        if (ok) {
            for (std::size_t i = 0; i < N; ++i) {
                ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
            }
            ok = f(x + h, ynew, k7);
        }
        double err = std::numeric_limits<double>::infinity();
        if (ok) {
            double sum = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double sk = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                const double ei =
                    h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                sum += (ei / sk) * (ei / sk);
            }
            err = std::sqrt(sum / N);
        }
        if (!ok || !std::isfinite(err) || err > 1.0) {
            const double fac = (ok && std::isfinite(err)) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
            h *= fac;
            continue;
        }

        DenseStep<N> ds;
        ds.x0 = x;
        ds.h = h;
        for (std::size_t i = 0; i < N; ++i) {
            const double ydiff = ynew[i] - y[i];
            const double bspl = h * k1[i] - ydiff;
            ds.rc[0][i] = y[i];
            ds.rc[1][i] = ydiff;
            ds.rc[2][i] = bspl;
            ds.rc[3][i] = ydiff - h * k7[i] - bspl;
            ds.rc[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        res.steps.push_back(ds);

        const double g_new = event(ynew);
        if (g_prev < 0.0 && g_new >= 0.0) {
            double lo = x;
            double hi = x + h;
            while (hi - lo > 1e-13 * std::max(1.0, std::abs(hi))) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) {
                    break;
                }
                if (event(ds(mid)) < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            const double xe = std::abs(event(ds(lo))) <= std::abs(event(ds(hi))) ? lo : hi;
            res.stop = Dopri5Stop::event;
            res.x_end = xe;
            res.y_end = ds(xe);
            return res;
        }
        g_prev = g_new;

        // PI step-size control.
        const double fac = std::clamp(0.9 * std::pow(err, -0.175) * std::pow(err_old, 0.04), 0.2, 10.0);
        err_old = std::max(err, 1e-4);
        x += h;
        y = ynew;
        k1 = k7;
        h *= fac;
    }
    res.stop = Dopri5Stop::too_many_steps;
    res.x_end = x;
    res.y_end = y;
    return res;
}

} // namespace cmcslab::detail
