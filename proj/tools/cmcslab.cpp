// cmcslab: command-line front end for the cmcslab library.
//
// Exit codes: 0 success, 1 usage or validation error, 2 numerical or I/O
// failure (and failed verification), 3 shooting found no solution.

#include <algorithm>
#include <cmath>
#include <exception>
#include <future>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <cmcslab/acceptance.hpp>
#include <cmcslab/cmcslab.hpp>

namespace {

using cmcslab::io::json;

constexpr int exit_usage = 1;
constexpr int exit_numerical = 2;
constexpr int exit_no_solution = 3;

const std::vector<std::string> commands = {"tube", "cylinder", "profile", "spectrum", "decide",
                                           "scan", "bounds",   "q",       "verify"};

void emit(const std::string& out, const json& j) { cmcslab::io::write_file(out, cmcslab::io::to_json_string(j)); }

cmcslab::Status parse_status(const std::string& s)
{
    if (s == "StronglyStable") {
        return cmcslab::Status::StronglyStable;
    }
    if (s == "Stable") {
        return cmcslab::Status::Stable;
    }
    if (s == "Unstable") {
        return cmcslab::Status::Unstable;
    }
    if (s == "Marginal") {
        return cmcslab::Status::Marginal;
    }
    throw std::invalid_argument("unknown status '" + s + "'");
}

cmcslab::BoundaryPolicy parse_policy(const std::string& s)
{
    if (s == "free") {
        return cmcslab::BoundaryPolicy::free_boundary;
    }
    if (s == "capillary") {
        return cmcslab::BoundaryPolicy::capillary;
    }
    if (s == "dirichlet") {
        return cmcslab::BoundaryPolicy::dirichlet;
    }
    throw std::invalid_argument("unknown policy '" + s + "' (free, capillary, dirichlet)");
}

/// dirichlet | neumann | robin:Q | capillary (q from the contact data)
std::pair<cmcslab::BoundaryCondition, cmcslab::BoundaryCondition> parse_bc(const std::string& s,
                                                                           const cmcslab::RotationalSurface& surf)
{
    using cmcslab::BoundaryCondition;
    if (s == "dirichlet") {
        return {BoundaryCondition::dirichlet(), BoundaryCondition::dirichlet()};
    }
    if (s == "neumann") {
        return {BoundaryCondition::neumann(), BoundaryCondition::neumann()};
    }
    if (s == "capillary") {
        return cmcslab::policy_conditions(surf, cmcslab::BoundaryPolicy::capillary);
    }
    if (s.rfind("robin:", 0) == 0) {
        std::size_t used = 0;
        const std::string v = s.substr(6);
        const double q = std::stod(v, &used);
        if (used != v.size()) {
            throw std::invalid_argument("bad Robin coefficient in '" + s + "'");
        }
        return {BoundaryCondition::robin(q), BoundaryCondition::robin(q)};
    }
    throw std::invalid_argument("unknown boundary condition '" + s + "' (dirichlet, neumann, robin:Q, capillary)");
}

std::pair<double, double> parse_range(const std::string& s)
{
    const auto sep = s.find_first_of(":,");
    if (sep == std::string::npos) {
        throw std::invalid_argument("range must look like A:B");
    }
    std::size_t u1 = 0;
    std::size_t u2 = 0;
    const std::string a = s.substr(0, sep);
    const std::string b = s.substr(sep + 1);
    const double lo = std::stod(a, &u1);
    const double hi = std::stod(b, &u2);
    if (u1 != a.size() || u2 != b.size() || !(lo <= hi)) {
        throw std::invalid_argument("range must look like A:B with A <= B");
    }
    return {lo, hi};
}

/// Turns a JSON config object into flags placed right after the subcommand,
/// so flags given on the command line (later, TakeLast) override it.
std::vector<std::string> expand_config(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (path.empty()) {
        return args;
    }
    const json cfg = json::parse(cmcslab::io::read_file(path));
    if (!cfg.is_object()) {
        throw std::invalid_argument("config must be a JSON object");
    }
    auto pos = std::find_if(args.begin() + 1, args.end(),
                            [](const std::string& a) { return std::find(commands.begin(), commands.end(), a) != commands.end(); });
    if (pos == args.end()) {
        if (!cfg.contains("command")) {
            throw std::invalid_argument("no subcommand given on the command line or in the config");
        }
        pos = args.insert(args.begin() + 1, cfg.at("command").get<std::string>());
    }
    std::vector<std::string> flags;
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        if (it.key() == "command") {
            continue;
        }
        const std::string flag = "--" + it.key();
        const auto& v = it.value();
        auto scalar = [](const json& x) -> std::string {
            if (x.is_string()) {
                return x.get<std::string>();
            }
            if (x.is_number_float()) {
                return cmcslab::io::format_double(x.get<double>());
            }
            return x.dump();
        };
        if (v.is_boolean()) {
            if (v.get<bool>()) {
                flags.push_back(flag);
            }
        } else if (v.is_array()) {
            std::string joined;
            for (const auto& x : v) {
                joined += (joined.empty() ? "" : ":") + scalar(x);
            }
            flags.push_back(flag);
            flags.push_back(joined);
        } else {
            flags.push_back(flag);
            flags.push_back(scalar(v));
        }
    }
    args.insert(pos + 1, flags.begin(), flags.end());
    return args;
}

json input_record(std::initializer_list<std::pair<const char*, json>> fields)
{
    json j = json::object();
    for (const auto& [k, v] : fields) {
        j[k] = v;
    }
    return j;
}

int run(int argc, char** argv)
{
    CLI::App app{"Stability of rotational CMC hypersurfaces in slabs of M^n(kappa) x R", "cmcslab"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for all subcommands");

    // tube
    auto* tube = app.add_subcommand("tube", "Closed-form and numerical verdicts for a tube over a geodesic sphere");
    int t_kappa = 0;
    int t_n = 2;
    double t_rho = 1.0;
    double t_l = 1.0;
    int t_grid = 2000;
    std::string t_out = "-";
    tube->add_option("--kappa", t_kappa, "Curvature sign (-1, 0, 1)")->required();
    tube->add_option("--n", t_n, "Ambient dimension of M^n")->required();
    tube->add_option("--rho", t_rho, "Geodesic radius")->required();
    tube->add_option("--l", t_l, "Slab width")->required();
    tube->add_option("--grid", t_grid, "Grid intervals for the numerical verdict")->capture_default_str();
    tube->add_option("--out", t_out, "Output file ('-' for stdout)")->capture_default_str();

    // cylinder
    auto* cyl = app.add_subcommand("cylinder", "Cylinder criterion lambda1 + (pi/l)^2 >= 0");
    double c_lambda1 = 0.0;
    double c_l = 1.0;
    std::string c_base = "Stable";
    double c_eps = -1.0;
    std::string c_out = "-";
    cyl->add_option("--lambda1", c_lambda1, "First eigenvalue of the base")->required();
    cyl->add_option("--l", c_l, "Slab width")->required();
    cyl->add_option("--base-status", c_base, "Verdict of the base (StronglyStable, Stable, Unstable, Marginal)")
        ->capture_default_str();
    cyl->add_option("--epsilon", c_eps, "Tolerance band (default 1e-7 (1 + |lambda1|))");
    cyl->add_option("--out", c_out, "Output file")->capture_default_str();

    // profile
    auto* prof = app.add_subcommand("profile", "Shoot a free-boundary or capillary rotational CMC surface");
    int p_kappa = 0;
    int p_n = 2;
    double p_H = 0.0;
    double p_l = 1.0;
    double p_theta0 = std::numbers::pi / 2;
    double p_theta1 = std::numbers::pi / 2;
    double p_r0_min = -1.0;
    double p_r0_max = -1.0;
    int p_root = 0;
    cmcslab::ShootingOptions p_opt;
    std::string p_out = "-";
    prof->add_option("--kappa", p_kappa, "Curvature sign")->required();
    prof->add_option("--n", p_n, "Ambient dimension")->required();
    prof->add_option("--H", p_H, "Mean curvature (average of principal curvatures), >= 0")->required();
    prof->add_option("--l", p_l, "Slab width")->required();
    prof->add_option("--theta0", p_theta0, "Contact angle at t=0")->capture_default_str();
    prof->add_option("--theta1", p_theta1, "Contact angle at t=l")->capture_default_str();
    prof->add_option("--r0-min", p_r0_min, "Lower end of the r0 bracket");
    prof->add_option("--r0-max", p_r0_max, "Upper end of the r0 bracket");
    prof->add_option("--root", p_root, "Which solution, ordered by r0")->capture_default_str();
    prof->add_option("--samples", p_opt.samples, "Arclength intervals in the output")->capture_default_str();
    prof->add_option("--scan", p_opt.scan_intervals, "r0 scan intervals")->capture_default_str();
    prof->add_option("--tol", p_opt.tol, "Shooting tolerance")->capture_default_str();
    prof->add_option("--out", p_out, "Output file")->capture_default_str();

    // spectrum
    auto* spec = app.add_subcommand("spectrum", "Jacobi spectrum of a surface by rotational modes (CSV)");
    std::string s_surface;
    std::string s_bc = "neumann";
    int s_modes = -1;
    int s_grid = 2000;
    std::size_t s_count = 10;
    std::string s_out = "-";
    spec->add_option("--surface", s_surface, "Surface JSON from 'profile'")->required();
    spec->add_option("--bc", s_bc, "dirichlet | neumann | robin:Q | capillary")->capture_default_str();
    spec->add_option("--modes", s_modes, "Highest mode j (default: stop by the a-priori bound)");
    spec->add_option("--grid", s_grid, "Grid intervals")->capture_default_str();
    spec->add_option("--count", s_count, "Eigenvalues to report, with multiplicity")->capture_default_str();
    spec->add_option("--out", s_out, "Output file")->capture_default_str();

    // decide
    auto* dec = app.add_subcommand("decide", "Koiso stability verdict for a surface (JSON)");
    std::string d_surface;
    std::string d_policy = "free";
    cmcslab::DecideOptions d_opt;
    std::string d_out = "-";
    dec->add_option("--surface", d_surface, "Surface JSON from 'profile'")->required();
    dec->add_option("--policy", d_policy, "free | capillary | dirichlet")->capture_default_str();
    dec->add_option("--grid", d_opt.grid, "Grid intervals (finest level is grid * 2^(levels-1))")->capture_default_str();
    dec->add_option("--levels", d_opt.levels, "1, or >= 3 for extrapolation")->capture_default_str();
    dec->add_option("--count", d_opt.count, "Eigenvalues per level")->capture_default_str();
    dec->add_option("--eps-rel", d_opt.eps_rel, "Tolerance band factor")->capture_default_str();
    dec->add_option("--II-bottom", d_opt.II_bottom, "Slice shape operator at t=0")->capture_default_str();
    dec->add_option("--II-top", d_opt.II_top, "Slice shape operator at t=l")->capture_default_str();
    dec->add_option("--out", d_out, "Output file")->capture_default_str();

    // scan
    auto* scan = app.add_subcommand("scan", "Numeric against closed-form tube thresholds over a radius range (CSV)");
    int sc_kappa = 0;
    int sc_n = 2;
    std::string sc_range;
    int sc_samples = 32;
    int sc_grid = 256;
    std::string sc_route = "mode";
    unsigned sc_threads = 0;
    std::string sc_out = "-";
    scan->add_option("--kappa", sc_kappa, "Curvature sign")->required();
    scan->add_option("--n", sc_n, "Ambient dimension")->required();
    scan->add_option("--rho-range", sc_range, "Radius range A:B")->required();
    scan->add_option("--samples", sc_samples, "Number of radii")->capture_default_str();
    scan->add_option("--grid", sc_grid, "Grid intervals for the mode route")->capture_default_str();
    scan->add_option("--route", sc_route, "mode | closed")->capture_default_str();
    scan->add_option("--threads", sc_threads, "Worker threads (0: hardware)");
    scan->add_option("--out", sc_out, "Output file")->capture_default_str();

    // bounds
    auto* bnd = app.add_subcommand("bounds", "Nonexistence width and distance/diameter bounds");
    double b_kappa = 1.0;
    std::string b_out = "-";
    bnd->add_option("--kappa", b_kappa, "Positive curvature lower bound")->required();
    bnd->add_option("--out", b_out, "Output file")->capture_default_str();

    // q
    auto* qc = app.add_subcommand("q", "Robin coefficient of a capillary boundary");
    cmcslab::CapillaryBoundary q_in;
    std::string q_out = "-";
    qc->add_option("--theta", q_in.theta, "Contact angle in (0, pi)")->required();
    qc->add_option("--II", q_in.II_nn, "II(nu_bar, nu_bar) of the slice")->required();
    qc->add_option("--sigma", q_in.sigma_nn, "sigma(nu, nu) of the surface")->required();
    qc->add_option("--out", q_out, "Output file")->capture_default_str();

    auto* ver = app.add_subcommand("verify", "Run the acceptance suite");

    std::vector<std::string> args;
    try {
        args = expand_config(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "config: " << e.what() << "\n";
        return exit_usage;
    }
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_usage;
    }

    if (*tube) {
        const cmcslab::SpaceForm space(t_kappa, t_n);
        const cmcslab::GeodesicSphere sphere(space, t_rho);
        const auto closed = cmcslab::tube_verdict(space, t_rho, t_l);
        cmcslab::DecideOptions base_opt;
        base_opt.grid = 500;
        base_opt.levels = 3;
        const auto base = cmcslab::decide_round_sphere(sphere, base_opt);
        const auto criterion = cmcslab::cylinder_stable(-cmcslab::sphere_potential(sphere), base.status, t_l);
        cmcslab::DecideOptions opt;
        opt.grid = t_grid;
        const auto numeric = cmcslab::decide_surface(cmcslab::cylinder_surface(space, t_rho, t_l, t_grid),
                                                     cmcslab::BoundaryPolicy::free_boundary, opt);
        json j = to_json(closed);
        j["input"] = input_record({{"kappa", t_kappa}, {"n", t_n}, {"rho", t_rho}, {"l", t_l}, {"grid", t_grid}});
        j["base"] = to_json(base);
        j["cylinder_criterion"] = to_json(criterion);
        j["numeric"] = to_json(numeric);
        j["l_star_closed"] = std::numbers::pi * sphere.intrinsic_radius() / std::sqrt(t_n - 1.0);
        j["l_star_numeric"] = cmcslab::io::number(cmcslab::tube_threshold_numeric(space, t_rho));
        emit(t_out, j);
        return 0;
    }
    if (*cyl) {
        const auto v = cmcslab::cylinder_stable(c_lambda1, parse_status(c_base), c_l,
                                                c_eps >= 0.0 ? std::optional<double>(c_eps) : std::nullopt);
        json j = to_json(v);
        j["input"] = input_record({{"lambda1", c_lambda1}, {"l", c_l}, {"base_status", c_base}});
        emit(c_out, j);
        return 0;
    }
    if (*prof) {
        const cmcslab::SpaceForm space(p_kappa, p_n);
        auto bracket = cmcslab::default_bracket(space, p_H);
        if (p_r0_min > 0.0) {
            bracket.lo = p_r0_min;
        }
        if (p_r0_max > 0.0) {
            bracket.hi = p_r0_max;
        }
        const auto all = cmcslab::shoot_capillary_all(space, p_H, p_l, p_theta0, p_theta1, bracket, p_opt);
        if (p_root < 0 || static_cast<std::size_t>(p_root) >= all.size()) {
            throw std::domain_error("--root " + std::to_string(p_root) + " out of range: " + std::to_string(all.size()) +
                                    " solution(s) found");
        }
        json j = to_json(all[static_cast<std::size_t>(p_root)]);
        j["solutions"] = all.size();
        emit(p_out, j);
        return 0;
    }
    if (*spec) {
        const auto surf = cmcslab::surface_from_json(json::parse(cmcslab::io::read_file(s_surface)));
        const auto [bottom, top] = parse_bc(s_bc, surf);
        cmcslab::MergeOptions mo;
        mo.count = s_count;
        mo.j_max = s_modes;
        const auto decomposition = cmcslab::merge_modes(cmcslab::surface_modes(surf, bottom, top, s_grid), mo);
        cmcslab::io::write_file(s_out, cmcslab::spectrum_to_csv(decomposition.spectrum));
        return 0;
    }
    if (*dec) {
        const auto surf = cmcslab::surface_from_json(json::parse(cmcslab::io::read_file(d_surface)));
        const auto v = cmcslab::decide_surface(surf, parse_policy(d_policy), d_opt);
        emit(d_out, to_json(v));
        return 0;
    }
    if (*scan) {
        const auto [lo, hi] = parse_range(sc_range);
        if (sc_samples < 1) {
            throw std::domain_error("--samples must be >= 1");
        }
        if (sc_route != "mode" && sc_route != "closed") {
            throw std::invalid_argument("--route must be mode or closed");
        }
        const cmcslab::SpaceForm space(sc_kappa, sc_n);
        const auto route =
            sc_route == "mode" ? cmcslab::ThresholdRoute::mode_solver : cmcslab::ThresholdRoute::closed_spectrum;
        std::vector<double> rhos(static_cast<std::size_t>(sc_samples));
        for (int i = 0; i < sc_samples; ++i) {
            rhos[static_cast<std::size_t>(i)] = sc_samples == 1 ? lo : lo + (hi - lo) * i / (sc_samples - 1);
            cmcslab::GeodesicSphere(space, rhos[static_cast<std::size_t>(i)]); // validates the radius
        }
        std::vector<std::vector<double>> rows(rhos.size());
        const unsigned workers =
            std::max(1u, std::min<unsigned>(sc_threads ? sc_threads : std::thread::hardware_concurrency(),
                                            static_cast<unsigned>(rhos.size())));
        std::vector<std::future<void>> jobs;
        for (unsigned w = 0; w < workers; ++w) {
            jobs.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t i = w; i < rhos.size(); i += workers) {
                    const double rho = rhos[i];
                    const double numeric = cmcslab::tube_threshold_numeric(space, rho, route, sc_grid);
                    const double closed = std::numbers::pi * cmcslab::sn_ct(space, rho).sn / std::sqrt(sc_n - 1.0);
                    rows[i] = {rho, numeric, closed, std::abs(numeric - closed) / closed};
                }
            }));
        }
        for (auto& f : jobs) {
            f.get();
        }
        std::sort(rows.begin(), rows.end());
        std::string csv = "rho,l_star_numeric,l_star_closed,abs_rel_err\n";
        for (const auto& r : rows) {
            csv += cmcslab::io::csv_row(r) + "\n";
        }
        cmcslab::io::write_file(sc_out, csv);
        return 0;
    }
    if (*bnd) {
        const auto rb = cmcslab::rosenberg_bound(b_kappa);
        const json j = {{"kappa", b_kappa},
                        {"nonexistence_width", cmcslab::nonexistence_width(b_kappa)},
                        {"distance_bound", rb.distance},
                        {"diameter_bound", rb.diameter}};
        emit(b_out, j);
        return 0;
    }
    if (*qc) {
        const json j = {{"q", cmcslab::capillary_q(q_in)},
                        {"theta", q_in.theta},
                        {"II", q_in.II_nn},
                        {"sigma", q_in.sigma_nn}};
        emit(q_out, j);
        return 0;
    }
    if (*ver) {
        bool ok = true;
        for (const auto& r : cmcslab::acceptance::run_acceptance()) {
            std::cout << cmcslab::acceptance::format_result(r) << "\n" << std::flush;
            ok = ok && r.pass;
        }
        std::cout << (ok ? "all criteria passed" : "verification FAILED") << "\n";
        return ok ? 0 : exit_numerical;
    }
    return exit_usage;
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const cmcslab::no_solution& e) {
        std::cerr << "no solution: " << e.what() << "\n";
        return exit_no_solution;
    } catch (const cmcslab::numerical_failure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "I/O failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const json::exception& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::logic_error& e) { // domain_error, invalid_argument, out_of_range
        std::cerr << "invalid input: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical;
    }
}
