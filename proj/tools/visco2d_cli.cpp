#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "visco2d/io.hpp"
#include "visco2d/msh_io.hpp"
#include "visco2d/studies.hpp"

using namespace visco2d;

namespace {

struct RunConfig {
    std::string problem = "ldc";
    std::string method = "srtd";
    double eta0 = 1.0;
    double lambda1 = 0.0;
    std::optional<double> mu1;
    std::string model;  // ucm | corotational
    double U = 1.0;
    std::vector<int> n;
    std::vector<double> h;
    std::string mesh_file;
    double tol = 1e-9;
    int max_iter = 20;
    bool supg = false;
    std::string out = ".";
    std::vector<double> grid;  // sweep / comparison lambda1 grid
    int repeats = 3;
    bool refined_vtk = false;
};

void add_common_flags(CLI::App* cmd, RunConfig& cfg) {
    cmd->set_help_flag("--help", "Print help");  // frees -h for --h
    cmd->add_option("--problem", cfg.problem, "Benchmark problem")
        ->check(CLI::IsMember({"ldc", "jb"}));
    cmd->add_option("--method", cfg.method, "Solver")
        ->check(CLI::IsMember({"srtd", "evss", "nse"}));
    cmd->add_option("--eta0", cfg.eta0, "Viscosity");
    cmd->add_option("--lambda1", cfg.lambda1, "Relaxation time");
    cmd->add_option("--mu1", cfg.mu1, "Slip parameter mu1 (excludes --model)");
    cmd->add_option("--model", cfg.model, "ucm or corotational (excludes --mu1)")
        ->check(CLI::IsMember({"ucm", "corotational"}));
    cmd->add_option("--U", cfg.U, "Characteristic boundary speed");
    cmd->add_option("--n", cfg.n, "Unit-square subdivisions (repeat for studies)");
    cmd->add_option("--h", cfg.h, "Target mesh size (repeat for studies)");
    cmd->add_option("--mesh-file", cfg.mesh_file, "MSH 2.2 mesh file");
    cmd->add_option("--tol", cfg.tol, "Iteration tolerance");
    cmd->add_option("--max-iter", cfg.max_iter, "Iteration cap");
    cmd->add_flag("--supg", cfg.supg, "SUPG stabilization");
    cmd->add_option("--out", cfg.out, "Output directory");
    cmd->set_config("--config", "", "Flat key=value config file");
}

ModelParams resolve_params(const RunConfig& cfg) {
    if (cfg.mu1 && !cfg.model.empty())
        throw CLI::ValidationError("--mu1 and --model are mutually exclusive");
    ModelParams p;
    p.eta0 = cfg.eta0;
    p.lambda1 = cfg.lambda1;
    if (cfg.mu1)
        p.mu1 = *cfg.mu1;
    else if (cfg.model == "corotational")
        p.mu1 = 0.0;
    else
        p.mu1 = cfg.lambda1;  // ucm default
    if (!p.valid()) throw CLI::ValidationError("invalid model parameters");
    return p;
}

ProblemSpec resolve_problem(const RunConfig& cfg) {
    return cfg.problem == "jb" ? journal_bearing(cfg.U)
                               : lid_driven_cavity(cfg.U);
}

Mesh resolve_mesh(const RunConfig& cfg, const ProblemSpec& prob) {
    if (!cfg.mesh_file.empty()) return read_msh(cfg.mesh_file);
    if (!cfg.n.empty()) return unit_square_mesh(cfg.n.front());
    const double h = cfg.h.empty() ? 0.1 : cfg.h.front();
    return problem_mesh(prob, h);
}

std::vector<Mesh> resolve_mesh_list(const RunConfig& cfg, const ProblemSpec& prob) {
    std::vector<Mesh> meshes;
    if (!cfg.n.empty()) {
        for (int n : cfg.n) meshes.push_back(unit_square_mesh(n));
    } else if (!cfg.h.empty()) {
        for (double h : cfg.h) meshes.push_back(problem_mesh(prob, h));
    } else {
        throw CLI::ValidationError("need a mesh list (--n or --h, repeated)");
    }
    return meshes;
}

Method resolve_method(const RunConfig& cfg) {
    if (cfg.method == "nse") return Method::NSE;
    if (cfg.method == "evss") return Method::EVSS;
    return Method::SRTD;
}

ConstitutiveModel resolve_model(const RunConfig& cfg) {
    if (cfg.mu1 && !cfg.model.empty())
        throw CLI::ValidationError("--mu1 and --model are mutually exclusive");
    if (cfg.mu1)
        throw CLI::ValidationError("this subcommand needs --model, not --mu1");
    return cfg.model == "corotational" ? ConstitutiveModel::corotational
                                       : ConstitutiveModel::ucm;
}

SolveOptions resolve_options(const RunConfig& cfg) {
    SolveOptions o;
    o.tol = cfg.tol;
    o.max_iter = cfg.max_iter;
    o.supg = cfg.method == "evss" ? true : cfg.supg;
    return o;
}

std::string outpath(const RunConfig& cfg, const std::string& file) {
    std::filesystem::create_directories(cfg.out);
    return (std::filesystem::path(cfg.out) / file).string();
}

int cmd_solve(const RunConfig& cfg) {
    const ProblemSpec prob = resolve_problem(cfg);
    const ModelParams params = resolve_params(cfg);
    const Mesh mesh = resolve_mesh(cfg, prob);
    const FlowSpaces spaces = make_flow_spaces(mesh);
    const Method method = resolve_method(cfg);
    const SolveOptions opts = resolve_options(cfg);

    const auto t0 = std::chrono::steady_clock::now();
    const FlowSolution sol = solve_flow(spaces, method, params, prob, opts);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    std::vector<VtkField> fields = {{"velocity", &sol.u}, {"pressure", &sol.p}};
    FEFunction T;
    if (method != Method::NSE) {
        // rerun cheaply to fetch the stress field of the chosen method
        if (method == Method::SRTD) {
            const SRTDResult r = srtd_solve(spaces, params, prob.body_force,
                                            prob.dirichlet, opts.tol,
                                            opts.max_iter, opts.supg);
            T = r.T;
        } else {
            const EVSSResult r =
                evss_solve(spaces, params, prob.body_force, prob.dirichlet,
                           opts.supg, opts.newton_rtol, opts.newton_max_iter);
            T = r.T;
        }
        if (T.space) fields.push_back({"stress", &T});
    }
    write_vtk(outpath(cfg, "fields.vtk"), mesh, fields, cfg.refined_vtk);

    CsvTable hist{{"iteration", "residual"}, {}};
    for (size_t i = 0; i < sol.residual_history.size(); ++i)
        hist.rows.push_back({(double)i, sol.residual_history[i]});
    write_csv(outpath(cfg, "residuals.csv"), hist);

    const int dofs = spaces.Vu.n_dofs + spaces.Qp.n_dofs +
                     (method == Method::EVSS
                          ? spaces.St.n_dofs + spaces.Sd.n_dofs
                          : (method == Method::SRTD ? spaces.St.n_dofs : 0));
    std::ostringstream summary;
    summary << "problem=" << prob.name << "\nmethod=" << cfg.method
            << "\nwi=" << prob.wi_of(params.lambda1)
            << "\nre=" << prob.re_of(params.eta0) << "\ndofs=" << dofs
            << "\niterations=" << sol.iterations
            << "\nconverged=" << (sol.converged ? 1 : 0)
            << "\nwall_seconds=" << wall << "\n";
    std::cout << summary.str();
    std::ofstream(outpath(cfg, "summary.txt")) << summary.str();

    if (!sol.converged) {
        std::cerr << "not converged: " << sol.message << "\n";
        return 2;
    }
    return 0;
}

int cmd_study(const RunConfig& cfg) {
    const ProblemSpec prob = resolve_problem(cfg);
    const ModelParams params = resolve_params(cfg);
    const auto meshes = resolve_mesh_list(cfg, prob);
    const auto rows = convergence_study(prob, resolve_method(cfg), params,
                                        meshes, resolve_options(cfg));
    CsvTable t{{"h", "L2_err_u", "L2_rate_u", "H1_err_u", "H1_rate_u",
                "L2_err_p", "L2_rate_p", "converged"},
               {}};
    for (const auto& r : rows)
        t.rows.push_back({r.h, r.L2_err_u, r.L2_rate_u, r.H1_err_u, r.H1_rate_u,
                          r.L2_err_p, r.L2_rate_p, r.converged ? 1.0 : 0.0});
    write_csv(outpath(cfg, "study.csv"), t);
    write_csv(std::cout, t);
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    const ProblemSpec prob = resolve_problem(cfg);
    const Mesh mesh = resolve_mesh(cfg, prob);
    const auto grid = cfg.grid.empty() ? default_lambda1_grid() : cfg.grid;
    const SweepResult res =
        weissenberg_sweep(prob, resolve_method(cfg), resolve_model(cfg), grid,
                          mesh, cfg.eta0, resolve_options(cfg));
    CsvTable t{{"lambda1", "wi", "converged", "iterations"}, {}};
    for (const auto& p : res.points)
        t.rows.push_back(
            {p.lambda1, p.wi, p.converged ? 1.0 : 0.0, (double)p.iterations});
    write_csv(outpath(cfg, "sweep.csv"), t);
    write_csv(std::cout, t);
    std::cout << "limit_lambda1=" << res.limit_lambda1
              << "\nlimit_wi=" << res.limit_wi << "\n";
    return 0;
}

int cmd_compare(const RunConfig& cfg) {
    const ProblemSpec prob = resolve_problem(cfg);
    const Mesh mesh = resolve_mesh(cfg, prob);
    const auto grid = cfg.grid.empty() ? default_lambda1_grid() : cfg.grid;
    const auto pts = newtonian_comparison(prob, grid, resolve_model(cfg), mesh,
                                          cfg.eta0, resolve_method(cfg),
                                          resolve_options(cfg));
    const double slope = loglog_slope(pts);
    CsvTable t{{"lambda1", "u_diff_h1", "converged", "loglog_slope"}, {}};
    for (const auto& p : pts)
        t.rows.push_back({p.lambda1, p.u_diff_h1, p.converged ? 1.0 : 0.0, slope});
    write_csv(outpath(cfg, "compare.csv"), t);
    write_csv(std::cout, t);
    std::cout << "loglog_slope=" << slope << "\n";
    return 0;
}

int cmd_time(const RunConfig& cfg) {
    const ProblemSpec prob = resolve_problem(cfg);
    const ModelParams params = resolve_params(cfg);
    const auto meshes = resolve_mesh_list(cfg, prob);
    const auto rows = timing_comparison(prob, params, meshes, cfg.repeats,
                                        resolve_options(cfg));
    CsvTable t{{"h", "dofs_evss", "repeats", "srtd_mean", "srtd_std",
                "evss_mean", "evss_std", "ratio", "ok"},
               {}};
    for (const auto& r : rows)
        t.rows.push_back({r.h, (double)r.dofs_evss, (double)r.repeats,
                          r.srtd_mean, r.srtd_std, r.evss_mean, r.evss_std,
                          r.ratio, r.ok ? 1.0 : 0.0});
    write_csv(outpath(cfg, "timing.csv"), t);
    write_csv(std::cout, t);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D steady viscoelastic flow solver (SRTD and EVSS)"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto* solve = app.add_subcommand("solve", "Solve one flow and write fields");
    add_common_flags(solve, cfg);
    solve->add_flag("--refined-vtk", cfg.refined_vtk,
                    "Export on the once-refined visualization mesh");

    auto* study = app.add_subcommand("study", "Mesh-refinement convergence study");
    add_common_flags(study, cfg);

    auto* sweep = app.add_subcommand("sweep", "Weissenberg limit sweep");
    add_common_flags(sweep, cfg);
    sweep->add_option("--lambda1-grid", cfg.grid, "Ascending lambda1 grid");

    auto* compare =
        app.add_subcommand("compare-newtonian", "O3 vs Newtonian distance");
    add_common_flags(compare, cfg);
    compare->add_option("--lambda1-grid", cfg.grid, "Ascending lambda1 grid");

    auto* timing = app.add_subcommand("time", "SRTD vs EVSS wall-clock table");
    add_common_flags(timing, cfg);
    timing->add_option("--repeats", cfg.repeats, "Repeats per measurement");

    CLI11_PARSE(app, argc, argv);
    try {
        if (solve->parsed()) return cmd_solve(cfg);
        if (study->parsed()) return cmd_study(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg);
        if (compare->parsed()) return cmd_compare(cfg);
        if (timing->parsed()) return cmd_time(cfg);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
