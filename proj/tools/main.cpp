// Command line driver: flows, kernels, residual checks, invariant suite and
// parameter sweeps, with a reproducible config (fixed seed, fixed formatting).
// Exit codes: 0 ok, 1 invariant failure in `check`, 2 bad usage or config,
// 3 a computation rejected its inputs or failed to converge.

#include <CLI11.hpp>

#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "ahres/charts.hpp"
#include "ahres/distance.hpp"
#include "ahres/flow.hpp"
#include "ahres/hypres.hpp"
#include "ahres/io.hpp"
#include "ahres/metric.hpp"
#include "ahres/wkb.hpp"

using namespace ahres;

namespace {

// ---------------------------------------------------------------- plumbing

struct ModelCfg {
    std::string family = "half_space";
    int n = 2;
    double eps = 0.0;
    double bump_xw = 0.8;
    double bump_yw = 1.5;
    vecd bump_yc;
};

// --h is the semiclassical parameter, so the short help flag has to go
CLI::App* add_sub(CLI::App& app, const char* name, const char* desc) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    cmd->set_help_flag("--help", "print help and exit");
    cmd->fallthrough();  // global flags may follow the subcommand
    return cmd;
}

void add_model_opts(CLI::App* cmd, ModelCfg& c) {
    cmd->add_option("--family", c.family, "metric family")
        ->check(CLI::IsMember({"half_space", "poincare_ball", "perturbed"}))
        ->capture_default_str();
    cmd->add_option("--n", c.n, "boundary dimension")->capture_default_str();
    cmd->add_option("--eps", c.eps, "perturbation strength")->capture_default_str();
    cmd->add_option("--bump-xw", c.bump_xw, "bump halfwidth in x")->capture_default_str();
    cmd->add_option("--bump-yw", c.bump_yw, "bump halfwidth in y")->capture_default_str();
    cmd->add_option("--bump-yc", c.bump_yc, "bump centre in y");
}

MetricModel build_model(const ModelCfg& c) {
    MetricModel::Family f = MetricModel::Family::half_space;
    if (c.family == "poincare_ball")
        f = MetricModel::Family::poincare_ball;
    else if (c.family == "perturbed")
        f = MetricModel::Family::perturbed;
    BumpShape bs;
    bs.x_halfwidth = c.bump_xw;
    bs.y_halfwidth = c.bump_yw;
    bs.y_center = c.bump_yc;
    return make_model(f, c.n, c.eps, bs);
}

// output sink: a file path or "-" for stdout
struct Sink {
    std::ofstream file;
    std::ostream& stream() { return file.is_open() ? file : std::cout; }
};

Sink open_output(const std::string& path) {
    Sink s;
    if (path != "-") {
        s.file.open(path);
        require(bool(s.file), errc::precondition, "cannot open output file: " + path);
    }
    return s;
}

vecd resize_or(vecd v, int n, double fill) {
    if (int(v.size()) == n) return v;
    require(v.empty(), errc::precondition, "vector option has the wrong dimension");
    vecd out(n, 0.0);
    if (n > 0) out[0] = fill;
    return out;
}

// ------------------------------------------------------------ subcommands

struct FlowCfg {
    ModelCfg model;
    double x = 1.0, lambda = 0.0, t_max = 2.0, x_floor = 1e-8;
    vecd y, mu;
};

int run_flow(const FlowCfg& c, std::ostream& os) {
    const MetricModel m = build_model(c.model);
    const PhasePoint0 start{c.x, resize_or(c.y, m.n, 0.0), c.lambda, resize_or(c.mu, m.n, 1.0)};
    FlowOptions fo;
    fo.t_max = c.t_max;
    fo.x_floor = c.x_floor;
    write_trajectory(os, integrate_flow(m, start, fo));
    return 0;
}

struct ShiftedCfg {
    ModelCfg model;
    double x = 1.0, xi = 0.2, t_max = 5.0, x_floor = 1e-8;
    vecd y, eta;
};

int run_shifted(const ShiftedCfg& c, std::ostream& os) {
    const MetricModel m = build_model(c.model);
    const ShiftedPoint start{c.x, resize_or(c.y, m.n, 0.0), c.xi, resize_or(c.eta, m.n, 0.6)};
    FlowOptions fo;
    fo.t_max = c.t_max;
    fo.x_floor = c.x_floor;
    write_shifted_trajectory(os, integrate_shifted(m, start, fo));
    return 0;
}

struct LeafCfg {
    int n = 2;
    int grid = 50;
};

int run_leaf(const LeafCfg& c, std::ostream& os) {
    require(c.grid >= 2, errc::domain, "leaf: grid must have at least two points per axis");
    vecd N0(c.n, 0.0);
    N0[0] = 1.0;
    double worst = 0.0;
    for (int i = 1; i <= c.grid; ++i)
        for (int j = 1; j <= c.grid; ++j) {
            const double r = M_PI * i / (c.grid + 1.0);
            const double rp = M_PI * j / (c.grid + 1.0);
            worst = std::max(worst, leaf_residual(r, rp, N0));
        }
    os << JsonLine()
              .field("type", "leaf_report")
              .field("n", c.n)
              .field("grid", c.grid)
              .field("max_residual", worst)
              .str()
       << "\n";
    return 0;
}

struct DistanceCfg {
    ModelCfg model;
    double x = 1.0, xp = 2.0;
    vecd y, yp;
    unsigned seed = 7141;
};

int run_distance(const DistanceCfg& c, std::ostream& os) {
    const MetricModel m = build_model(c.model);
    const vecd y = resize_or(c.y, m.n, 0.0);
    vecd yp = c.yp;
    if (int(yp.size()) != m.n) yp = resize_or(yp, m.n, 1.0);
    DistanceOptions o;
    o.seed = c.seed;
    const DistanceResult r = distance_shoot(m, c.x, y, c.xp, yp, o);
    os << JsonLine()
              .field("type", "distance")
              .field("x", c.x)
              .field("y", y)
              .field("xp", c.xp)
              .field("yp", yp)
              .field("value", r.value)
              .field("psi_tilde", r.value + std::log(c.x) + std::log(c.xp))
              .field("flag", multiplicity_name(r.flag))
              .field("solutions", r.solutions_found)
              .str()
       << "\n";
    return 0;
}

struct KernelCfg {
    int n = 2;
    double h = 1.0;
    vecd r{1.0};
    std::string rep = "all";
};

void kernel_rows(std::ostream& os, int n, double h, double r, const std::string& rep) {
    const SpectralParam sp = make_spectral(n, h, true);
    auto row = [&](const char* name, cplx v) {
        os << csv_join({std::to_string(n), g17(h), g17(r), name, g17(v.real()), g17(v.imag())})
           << "\n";
    };
    if (rep == "derivative")
        row("derivative", green_even(sp, r));
    else if (rep == "integral")
        row("integral", green_odd(sp, r));
    else if (rep == "hypergeometric")
        row("hypergeometric", green_hypergeometric(sp, r));
    else if (rep == "closed")
        row(closed_representation(n), green_closed(sp, r));
    else {  // all
        row(closed_representation(n), green_closed(sp, r));
        row("hypergeometric", green_hypergeometric(sp, r));
    }
}

int run_kernel(const KernelCfg& c, std::ostream& os) {
    os << "n,h,r,representation,re,im\n";
    for (double r : c.r) kernel_rows(os, c.n, c.h, r, c.rep);
    return 0;
}

struct WkbCfg {
    ModelCfg model;
    double h = 0.3;
    double x = 1.0, xp = 1.0;
    vecd y{1.0, 0.0}, yp;
    unsigned seed = 7141;
};

int run_wkb(const WkbCfg& c, std::ostream& os) {
    const MetricModel m = build_model(c.model);
    const vecd y = resize_or(c.y, m.n, 1.0);
    const vecd yp = resize_or(c.yp, m.n, 0.0);
    WkbOptions wo;
    wo.dist.seed = c.seed;
    DistanceOptions dosc = wo.dist;
    const DistanceResult dr = distance_shoot(m, c.xp, yp, c.x, y, dosc);
    const cplx K = wkb_kernel(m, c.x, y, c.xp, yp, c.h, wo);
    os << "n,h,r,representation,re,im\n";
    os << csv_join({std::to_string(m.n), g17(c.h), g17(dr.value), "wkb", g17(K.real()),
                    g17(K.imag())})
       << "\n";
    return 0;
}

struct ResidualCfg {
    ModelCfg model;
    std::string kernel = "exact";
    double h = 0.5;
    double delta = 0.0;  // 0: h/4000 for the exact kernel, h/300 for wkb
    double xp = 1.0;
    vecd yp;
    unsigned seed = 7141;
};

int run_residual(const ResidualCfg& c, std::ostream& os) {
    const MetricModel m = build_model(c.model);
    require(m.n == 2, errc::precondition, "residual: the FD battery is wired for n = 2");
    const vecd yp = resize_or(c.yp, m.n, 0.0);
    const std::vector<std::pair<double, vecd>> grid{{1.0, {0.6, 0.0}},
                                                    {0.8, {-0.9, 0.4}},
                                                    {1.6, {1.2, -0.8}},
                                                    {0.45, {2.0, 1.0}},
                                                    {0.3, {3.0, -1.5}}};
    std::function<cplx(double, const vecd&)> kern;
    double delta = c.delta;
    WkbOptions wo;
    wo.dist.seed = c.seed;
    if (c.kernel == "exact") {
        require(m.family == MetricModel::Family::half_space, errc::precondition,
                "residual: the exact kernel needs the unperturbed half-space model");
        const SpectralParam sp = make_spectral(m.n, c.h, true);
        kern = [sp, &c, yp](double x, const vecd& y) {
            return green_closed(sp, half_space_distance(x, y, c.xp, yp));
        };
        if (delta <= 0.0) delta = c.h / 4000.0;
    } else {
        kern = [&m, &c, yp, &wo](double x, const vecd& y) {
            return wkb_kernel(m, x, y, c.xp, yp, c.h, wo);
        };
        if (delta <= 0.0) delta = c.h / 300.0;
    }
    const auto table = residual_check(kern, m, grid, c.xp, yp, c.h, delta);
    double worst = 0.0;
    for (const auto& s : table) {
        worst = std::max(worst, s.rel);
        os << JsonLine()
                  .field("type", "residual_sample")
                  .field("x", s.x)
                  .field("y", s.y)
                  .field("re", s.residual.real())
                  .field("im", s.residual.imag())
                  .field("rel", s.rel)
                  .str()
           << "\n";
    }
    os << JsonLine()
              .field("type", "residual_report")
              .field("kernel", c.kernel)
              .field("h", c.h)
              .field("delta", delta)
              .field("max_rel", worst)
              .str()
       << "\n";
    return 0;
}

struct GammaCfg {
    int n = 2;
    double h_lo = 0.02, h_hi = 1.0;
    int count = 13;
};

int run_gamma(const GammaCfg& c, std::ostream& os) {
    require(c.count >= 2, errc::domain, "gamma-bound: need at least two sample points");
    os << "n,h,coeff,scaled\n";
    for (int k = 0; k < c.count; ++k) {
        const double h = c.h_lo * std::pow(c.h_hi / c.h_lo, double(k) / (c.count - 1));
        const double coeff = gamma_coeff(make_spectral(c.n, h, true));
        const double scaled = coeff * std::pow(h, 0.5 * (c.n - 1));
        os << csv_join({std::to_string(c.n), g17(h), g17(coeff), g17(scaled)}) << "\n";
    }
    return 0;
}

// ------------------------------------------------------------------ sweep

struct SweepCfg {
    std::string task = "kernel";
    int n = 2;
    vecd h{1.0, 0.5};
    vecd r{1.0, 2.0};
    vecd eps{0.0};
    int workers = 0;  // 0: number of cores
    unsigned seed = 7141;
};

int run_sweep(const SweepCfg& c, std::ostream& os) {
    struct Cell {
        double h, r, eps;
    };
    std::vector<Cell> cells;
    for (double h : c.h)
        for (double r : c.r)
            for (double eps : c.eps) cells.push_back({h, r, eps});

    auto eval = [&](const Cell& cell) -> std::string {
        std::vector<std::string> f{std::to_string(c.n), g17(cell.h), g17(cell.r), g17(cell.eps)};
        if (c.task == "kernel") {
            const cplx v = green_hypergeometric(make_spectral(c.n, cell.h, true), cell.r);
            f.push_back("hypergeometric");
            f.push_back(g17(v.real()));
            f.push_back(g17(v.imag()));
        } else {  // wkb at a point placed at model distance r from the source
            require(c.n == 2, errc::precondition, "sweep: the wkb task is wired for n = 2");
            const MetricModel m =
                cell.eps > 0.0 ? make_model(MetricModel::Family::perturbed, 2, cell.eps)
                               : make_model(MetricModel::Family::half_space, 2);
            WkbOptions wo;
            wo.dist.seed = c.seed;
            // endpoints at x = 0.5 sit inside the bump, so eps actually bites
            const double x0 = 0.5;
            const vecd y{2.0 * x0 * std::sinh(0.5 * cell.r), 0.0};
            const cplx v = wkb_kernel(m, x0, y, x0, {0.0, 0.0}, cell.h, wo);
            f.push_back("wkb");
            f.push_back(g17(v.real()));
            f.push_back(g17(v.imag()));
        }
        return csv_join(f);
    };

    // share-nothing pool; rows land in their slot, the collector emits in order
    const unsigned hw = std::thread::hardware_concurrency();
    const int workers =
        c.workers > 0 ? c.workers : std::max(1, int(hw ? hw : 1));
    std::vector<std::string> rows(cells.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mx;
    auto drain = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
            try {
                rows[i] = eval(cells[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mx);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(drain);
    drain();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    os << "n,h,r,eps,representation,re,im\n";
    for (const auto& row : rows) os << row << "\n";
    return 0;
}

// ------------------------------------------------------------------ check

struct CheckCfg {
    double tolerance_scale = 1.0;
    unsigned seed = 7141;
};

int run_check(const CheckCfg& c, std::ostream& os) {
    struct Row {
        std::string name;
        double measured;
        double bound;
    };
    std::vector<Row> rows;

    {  // flow: drift and the closed form trajectory
        const MetricModel m = make_model(MetricModel::Family::half_space, 2);
        FlowOptions fo;
        fo.t_max = 2.0;
        const Trajectory tr = integrate_flow(m, {1.0, {0.0, 0.0}, 0.0, {1.0, 0.0}}, fo);
        rows.push_back({"flow_energy_drift", tr.energy_drift, 1e-9});
        double worst = 0.0;
        for (double t : {0.1, 0.25, 0.5, 1.0, 1.7}) {
            const vecd s = tr.dense.eval(t);
            worst = std::max(worst, std::fabs(s[0] - 1.0 / std::cosh(2 * t)));
            worst = std::max(worst, std::fabs(s[1] - std::tanh(2 * t)));
        }
        rows.push_back({"flow_closed_form", worst, 1e-8});
    }
    {  // shifted flow reaches the boundary transversally
        const MetricModel m = make_model(MetricModel::Family::half_space, 2);
        const ShiftedTrajectory tr = integrate_shifted(m, {1.0, {0.0, 0.0}, 0.2, {0.6, 0.0}});
        rows.push_back({"shifted_terminal_xdot", std::fabs(tr.xdot_end + 2.0),
                        tr.terminal == Terminal::hit_boundary ? 1e-3 : -1.0});
    }
    {  // distance shooting against the closed form
        const MetricModel m = make_model(MetricModel::Family::half_space, 2);
        DistanceOptions o;
        o.seed = c.seed;
        const DistanceResult r = distance_shoot(m, 1.0, {0.0, 0.0}, 1.3, {0.8, -0.4}, o);
        rows.push_back({"distance_closed_form",
                        std::fabs(r.value - half_space_distance(1.0, {0.0, 0.0}, 1.3, {0.8, -0.4})),
                        1e-9});
    }
    {  // kernel representations agree
        double worst = 0.0;
        for (auto [n, h, r] : {std::tuple<int, double, double>{2, 1.0, 1.0}, {3, 0.5, 2.0}}) {
            const SpectralParam sp = make_spectral(n, h, true);
            const cplx a = green_closed(sp, r), b = green_hypergeometric(sp, r);
            worst = std::max(worst, std::abs(a - b) / std::abs(b));
        }
        rows.push_back({"kernel_cross_representation", worst, 1e-6});
    }
    {  // eikonal residual on a perturbed model
        const MetricModel m = make_model(MetricModel::Family::perturbed, 2, 0.05);
        rows.push_back(
            {"eikonal_residual", std::fabs(eikonal_check(m, 0.9, {0.5, -0.2}, 1.15, {-0.3, 0.35})),
             1e-5});
    }
    {  // leaf identity on a coarse grid
        double worst = 0.0;
        for (int i = 1; i <= 12; ++i)
            for (int j = 1; j <= 12; ++j)
                worst = std::max(worst, leaf_residual(M_PI * i / 13.0, M_PI * j / 13.0, {1.0, 0.0}));
        rows.push_back({"leaf_residual", worst, 1e-9});
    }
    {  // transported amplitude against the point source law
        const MetricModel m = make_model(MetricModel::Family::half_space, 2);
        FlowOptions fo;
        fo.t_max = 1.2;
        fo.x_floor = 1e-10;
        fo.ode.rtol = fo.ode.atol = 1e-12;
        const Trajectory tr = integrate_flow(m, {1.0, {0.0, 0.0}, -0.6, {0.8, 0.0}}, fo);
        TransportOptions to;
        to.t_calib = 5e-4;
        to.flow = fo;
        const auto trace = transport_solve(m, tr, {}, cplx(1.0 / (4.0 * M_PI * 1e-3), 0.0), to);
        double worst = 0.0;
        for (std::size_t k = 0; k < trace.t.size(); ++k) {
            if (trace.t[k] < 0.05) continue;
            const double want = 1.0 / (4.0 * M_PI * std::sinh(2.0 * trace.t[k]));
            worst = std::max(worst, std::abs(trace.a[k] - want) / want);
        }
        rows.push_back({"transport_point_source", worst, 1e-6});
    }
    {  // conjugated operator identity
        const MetricModel m = make_model(MetricModel::Family::half_space, 2);
        const auto gauss = [](double x, const vecd& y) {
            const double q = (x - 1.0) * (x - 1.0) + y[0] * y[0] + y[1] * y[1];
            return std::exp(-q / 0.0625);
        };
        const auto rep =
            q_conjugate_check(m, gauss, {0.5, 1.5, {-0.5, -0.5}, {0.5, 0.5}}, 0.5, 1e-3);
        rows.push_back({"q_conjugate_defect", rep.defect, 1e-4});
    }
    {  // indicial round trip
        double worst = 0.0;
        const cplx e(0.7, -0.2);
        for (int j : {0, 1, 2, 5})
            for (double h : {1.0, 0.3})
                worst = std::max(worst,
                                 std::abs(indicial_poly(j, h) * indicial_solve(j, h, e) + e));
        rows.push_back({"indicial_roundtrip", worst, 1e-14});
    }
    {  // gamma coefficient stays within a band after the h^{(n-1)/2} rescale
        double worst = 0.0;
        for (int n : {2, 3}) {
            double lo = 1e300, hi = 0.0;
            for (int k = 0; k <= 12; ++k) {
                const double h = 0.02 * std::pow(50.0, k / 12.0);
                const double v =
                    gamma_coeff(make_spectral(n, h, true)) * std::pow(h, 0.5 * (n - 1));
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            worst = std::max(worst, hi / lo);
        }
        rows.push_back({"gamma_band_factor", worst, 4.0});
    }

    int failures = 0;
    for (const auto& r : rows) {
        const double bound = r.bound * c.tolerance_scale;
        const bool ok = r.bound >= 0.0 && r.measured < bound;
        if (!ok) ++failures;
        os << (ok ? "ok   " : "FAIL ") << r.name << "  measured " << g17(r.measured)
           << "  bound " << g17(bound) << "\n";
    }
    os << (failures ? "FAILED " + std::to_string(failures) + " of " : "passed all ")
       << rows.size() << " checks\n";
    return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"resolvent toolkit: flows, kernels, residuals, sweeps"};
    app.set_config("config", "", "key-value config file with [subcommand] sections");
    app.allow_config_extras(false);
    app.require_subcommand(0, 1);

    std::string output = "-";
    unsigned seed = 7141;
    int workers = 0;
    double tol_scale = 1.0;
    bool print_config = false;
    app.add_option("--output", output, "output path, - for stdout")->capture_default_str();
    app.add_option("--seed", seed, "seed for multistart shooting")->capture_default_str();
    app.add_option("--workers", workers, "sweep pool size, 0 for all cores")
        ->capture_default_str();
    app.add_option("--tolerance-scale", tol_scale, "multiply every check bound")
        ->capture_default_str();
    app.add_flag("--print-config", print_config, "print the resolved config and exit");

    FlowCfg flow_cfg;
    auto* flow_cmd = add_sub(app, "flow", "integrate a bicharacteristic");
    add_model_opts(flow_cmd, flow_cfg.model);
    flow_cmd->add_option("--x", flow_cfg.x)->capture_default_str();
    flow_cmd->add_option("--y", flow_cfg.y, "start y");
    flow_cmd->add_option("--lambda", flow_cfg.lambda)->capture_default_str();
    flow_cmd->add_option("--mu", flow_cfg.mu, "start mu");
    flow_cmd->add_option("--t-max", flow_cfg.t_max)->capture_default_str();
    flow_cmd->add_option("--x-floor", flow_cfg.x_floor)->capture_default_str();

    ShiftedCfg sh_cfg;
    auto* sh_cmd = add_sub(app, "shifted-flow", "integrate the shifted flow");
    add_model_opts(sh_cmd, sh_cfg.model);
    sh_cmd->add_option("--x", sh_cfg.x)->capture_default_str();
    sh_cmd->add_option("--y", sh_cfg.y, "start y");
    sh_cmd->add_option("--xi", sh_cfg.xi)->capture_default_str();
    sh_cmd->add_option("--eta", sh_cfg.eta, "start eta");
    sh_cmd->add_option("--t-max", sh_cfg.t_max)->capture_default_str();
    sh_cmd->add_option("--x-floor", sh_cfg.x_floor)->capture_default_str();

    LeafCfg leaf_cfg;
    auto* leaf_cmd = add_sub(app, "leaf", "front-face leaf residual over a grid");
    leaf_cmd->add_option("--n", leaf_cfg.n)->capture_default_str();
    leaf_cmd->add_option("--grid", leaf_cfg.grid, "points per axis")->capture_default_str();

    DistanceCfg dist_cfg;
    auto* dist_cmd = add_sub(app, "distance", "two-point distance by shooting");
    add_model_opts(dist_cmd, dist_cfg.model);
    dist_cmd->add_option("--x", dist_cfg.x)->capture_default_str();
    dist_cmd->add_option("--y", dist_cfg.y, "first point y");
    dist_cmd->add_option("--xp", dist_cfg.xp)->capture_default_str();
    dist_cmd->add_option("--yp", dist_cfg.yp, "second point y");

    KernelCfg ker_cfg;
    auto* ker_cmd = add_sub(app, "kernel", "exact kernel table");
    ker_cmd->add_option("--n", ker_cfg.n)->capture_default_str();
    ker_cmd->add_option("--h", ker_cfg.h)->capture_default_str();
    ker_cmd->add_option("--r", ker_cfg.r, "distance grid");
    ker_cmd->add_option("--rep", ker_cfg.rep, "representation")
        ->check(CLI::IsMember({"derivative", "integral", "hypergeometric", "closed", "all"}))
        ->capture_default_str();

    WkbCfg wkb_cfg;
    auto* wkb_cmd = add_sub(app, "wkb", "geometric optics kernel at a point");
    add_model_opts(wkb_cmd, wkb_cfg.model);
    wkb_cmd->add_option("--h", wkb_cfg.h)->capture_default_str();
    wkb_cmd->add_option("--x", wkb_cfg.x)->capture_default_str();
    wkb_cmd->add_option("--y", wkb_cfg.y, "evaluation point y");
    wkb_cmd->add_option("--xp", wkb_cfg.xp)->capture_default_str();
    wkb_cmd->add_option("--yp", wkb_cfg.yp, "source y");

    ResidualCfg res_cfg;
    auto* res_cmd = add_sub(app, "residual", "FD residual of a kernel");
    add_model_opts(res_cmd, res_cfg.model);
    res_cmd->add_option("--kernel", res_cfg.kernel, "exact or wkb")
        ->check(CLI::IsMember({"exact", "wkb"}))
        ->capture_default_str();
    res_cmd->add_option("--h", res_cfg.h)->capture_default_str();
    res_cmd->add_option("--delta", res_cfg.delta, "FD step, 0 for the default");
    res_cmd->add_option("--xp", res_cfg.xp)->capture_default_str();
    res_cmd->add_option("--yp", res_cfg.yp, "source y");

    GammaCfg gam_cfg;
    auto* gam_cmd = add_sub(app, "gamma-bound", "high-energy coefficient table");
    gam_cmd->add_option("--n", gam_cfg.n)->capture_default_str();
    gam_cmd->add_option("--h-lo", gam_cfg.h_lo)->capture_default_str();
    gam_cmd->add_option("--h-hi", gam_cfg.h_hi)->capture_default_str();
    gam_cmd->add_option("--count", gam_cfg.count)->capture_default_str();

    auto* chk_cmd = add_sub(app, "check", "run the invariant suite");

    SweepCfg sweep_cfg;
    auto* sweep_cmd = add_sub(app, "sweep", "grid of kernel evaluations");
    sweep_cmd->add_option("--task", sweep_cfg.task, "kernel or wkb")
        ->check(CLI::IsMember({"kernel", "wkb"}))
        ->capture_default_str();
    sweep_cmd->add_option("--n", sweep_cfg.n)->capture_default_str();
    sweep_cmd->add_option("--h", sweep_cfg.h, "h grid");
    sweep_cmd->add_option("--r", sweep_cfg.r, "r grid");
    sweep_cmd->add_option("--eps", sweep_cfg.eps, "eps grid");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    if (print_config) {
        std::cout << app.config_to_str(true, true);
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 2;
    }

    try {
        Sink sink = open_output(output);
        std::ostream& os = sink.stream();
        dist_cfg.seed = seed;
        wkb_cfg.seed = seed;
        res_cfg.seed = seed;
        sweep_cfg.seed = seed;
        sweep_cfg.workers = workers;
        if (flow_cmd->parsed()) return run_flow(flow_cfg, os);
        if (sh_cmd->parsed()) return run_shifted(sh_cfg, os);
        if (leaf_cmd->parsed()) return run_leaf(leaf_cfg, os);
        if (dist_cmd->parsed()) return run_distance(dist_cfg, os);
        if (ker_cmd->parsed()) return run_kernel(ker_cfg, os);
        if (wkb_cmd->parsed()) return run_wkb(wkb_cfg, os);
        if (res_cmd->parsed()) return run_residual(res_cfg, os);
        if (gam_cmd->parsed()) return run_gamma(gam_cfg, os);
        if (chk_cmd->parsed()) return run_check({tol_scale, seed}, os);
        if (sweep_cmd->parsed()) return run_sweep(sweep_cfg, os);
    } catch (const error& e) {
        std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
