#ifndef VISCO2D_STUDIES_HPP
#define VISCO2D_STUDIES_HPP

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "visco2d/problems.hpp"
#include "visco2d/solvers.hpp"

namespace visco2d {

enum class Method { NSE, SRTD, EVSS };
enum class ConstitutiveModel { ucm, corotational };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::NSE: return "nse";
        case Method::SRTD: return "srtd";
        case Method::EVSS: return "evss";
    }
    return "?";
}
inline const char* to_string(ConstitutiveModel m) {
    return m == ConstitutiveModel::ucm ? "ucm" : "corotational";
}

inline ModelParams model_params(ConstitutiveModel m, double eta0, double lambda1) {
    return m == ConstitutiveModel::ucm ? ucm_params(eta0, lambda1)
                                       : corotational_params(eta0, lambda1);
}

struct SolveOptions {
    double tol = 1e-9;        // SRTD outer tolerance
    int max_iter = 20;        // SRTD outer iterations
    bool supg = true;         // EVSS constitutive stabilization
    double newton_rtol = 1e-9;
    int newton_max_iter = 50;
};

// Uniform view of the three solvers for the experiment drivers.
struct FlowSolution {
    FEFunction u, p;
    bool converged = false;
    int iterations = 0;
    std::vector<double> residual_history;
    std::string message;
};

inline FlowSolution solve_flow(const FlowSpaces& spaces, Method method,
                               const ModelParams& params,
                               const ProblemSpec& problem,
                               const SolveOptions& opts = {}) {
    FlowSolution out;
    if (method == Method::NSE) {
        const NSEResult r = navier_stokes_solve(
            spaces, params.eta0, problem.body_force, problem.dirichlet,
            opts.newton_rtol, opts.newton_max_iter);
        out.u = r.u;
        out.p = r.p;
        out.converged = r.converged;
        out.iterations = r.report.iterations;
        out.residual_history = r.report.residual_history;
    } else if (method == Method::SRTD) {
        const SRTDResult r =
            srtd_solve(spaces, params, problem.body_force, problem.dirichlet,
                       opts.tol, opts.max_iter);
        out.u = r.u;
        out.p = r.p;
        out.converged = r.converged;
        out.iterations = r.iterations;
        out.residual_history = r.residual_history;
        out.message = r.message;
    } else {
        const EVSSResult r =
            evss_solve(spaces, params, problem.body_force, problem.dirichlet,
                       opts.supg, opts.newton_rtol, opts.newton_max_iter);
        out.u = r.u;
        out.p = r.p;
        out.converged = r.converged;
        out.iterations = r.report.iterations;
        out.residual_history = r.report.residual_history;
        out.message = r.message;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mesh-refinement convergence study.  Errors are successive differences
// ||u_h - u_{h/2}|| measured on the finer space; the row for the
// coarsest mesh has no error and is omitted, the next row has errors
// but no rates.
// ---------------------------------------------------------------------------
struct StudyRow {
    double h = 0;
    double L2_err_u = 0, L2_rate_u = 0;
    double H1_err_u = 0, H1_rate_u = 0;
    double L2_err_p = 0, L2_rate_p = 0;
    bool has_rates = false;
    bool converged = true;  // both solves of the pair converged
};

inline double convergence_rate(double err_coarse, double err_fine) {
    return std::log2(err_coarse / err_fine);
}

inline std::vector<StudyRow> convergence_study(
    const ProblemSpec& problem, Method method, const ModelParams& params,
    const std::vector<Mesh>& meshes, const SolveOptions& opts = {}) {
    if (meshes.size() < 3)
        throw std::invalid_argument("convergence_study: need at least 3 meshes");
    std::vector<std::unique_ptr<FlowSpaces>> spaces;
    std::vector<FlowSolution> sols;
    for (const auto& m : meshes) {
        spaces.push_back(std::make_unique<FlowSpaces>(make_flow_spaces(m)));
        sols.push_back(solve_flow(*spaces.back(), method, params, problem, opts));
    }
    std::vector<StudyRow> rows;
    for (size_t k = 0; k + 1 < meshes.size(); ++k) {
        StudyRow row;
        row.h = meshes[k].h_char;
        row.converged = sols[k].converged && sols[k + 1].converged;
        // curved boundaries put fine nodes slightly outside the coarse
        // polygon; allow nearest-cell extrapolation up to the coarse h
        const double extrap = meshes[k].h_char;
        row.L2_err_u = error_norm(sols[k + 1].u, sols[k].u, NormType::L2, extrap);
        row.H1_err_u = error_norm(sols[k + 1].u, sols[k].u, NormType::H1, extrap);
        FEFunction pc = sols[k].p, pf = sols[k + 1].p;
        demean(pc);
        demean(pf);
        row.L2_err_p = error_norm(pf, pc, NormType::L2, extrap);
        if (!rows.empty() && rows.back().converged && row.converged) {
            const StudyRow& prev = rows.back();
            row.L2_rate_u = convergence_rate(prev.L2_err_u, row.L2_err_u);
            row.H1_rate_u = convergence_rate(prev.H1_err_u, row.H1_err_u);
            row.L2_rate_p = convergence_rate(prev.L2_err_p, row.L2_err_p);
            row.has_rates = true;
        }
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Weissenberg sweep: ascending lambda1 grid, stop after a run of
// failures; the limit is the largest converged grid point.
// ---------------------------------------------------------------------------
inline std::vector<double> default_lambda1_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 10; ++i) g.push_back(0.01 * i);
    for (int i = 3; i <= 10; ++i) g.push_back(0.05 * i);
    for (int i = 3; i <= 10; ++i) g.push_back(0.25 * i);
    return g;
}

struct SweepPoint {
    double lambda1 = 0, wi = 0;
    bool converged = false;
    int iterations = 0;
};

struct SweepResult {
    std::vector<SweepPoint> points;  // attempted grid points
    double limit_lambda1 = 0, limit_wi = 0;  // 0 when nothing converged
};

inline SweepResult weissenberg_sweep(const ProblemSpec& problem, Method method,
                                     ConstitutiveModel model,
                                     const std::vector<double>& lambda1_grid,
                                     const Mesh& mesh, double eta0 = 1.0,
                                     const SolveOptions& opts = {},
                                     int stop_after_failures = 2) {
    const FlowSpaces spaces = make_flow_spaces(mesh);
    SweepResult res;
    int failures = 0;
    for (double l1 : lambda1_grid) {
        const FlowSolution sol = solve_flow(
            spaces, method, model_params(model, eta0, l1), problem, opts);
        SweepPoint pt{l1, problem.wi_of(l1), sol.converged, sol.iterations};
        res.points.push_back(pt);
        if (sol.converged) {
            failures = 0;
            res.limit_lambda1 = l1;
            res.limit_wi = pt.wi;
        } else if (stop_after_failures > 0 && ++failures >= stop_after_failures) {
            break;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Newtonian comparison: H1 distance between the O3 flow and the
// Newtonian flow on one fixed mesh and space.
// ---------------------------------------------------------------------------
struct ComparisonPoint {
    double lambda1 = 0;
    double u_diff_h1 = 0;
    bool converged = false;
};

inline std::vector<ComparisonPoint> newtonian_comparison(
    const ProblemSpec& problem, const std::vector<double>& lambda1_grid,
    ConstitutiveModel model, const Mesh& mesh, double eta0 = 1.0,
    Method method = Method::SRTD, const SolveOptions& opts = {}) {
    const FlowSpaces spaces = make_flow_spaces(mesh);
    const FlowSolution nse =
        solve_flow(spaces, Method::NSE, {eta0, 0.0, 0.0}, problem, opts);
    std::vector<ComparisonPoint> out;
    for (double l1 : lambda1_grid) {
        const FlowSolution sol = solve_flow(
            spaces, method, model_params(model, eta0, l1), problem, opts);
        FEFunction diff(spaces.Vu);
        diff.coeffs = sol.u.coeffs - nse.u.coeffs;
        out.push_back({l1, function_norm(diff, NormType::H1),
                       sol.converged && nse.converged});
    }
    return out;
}

// Least-squares slope of log(diff) against log(lambda1) over the
// converged points with positive lambda1.
inline double loglog_slope(const std::vector<ComparisonPoint>& pts) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& p : pts) {
        if (!p.converged || p.lambda1 <= 0.0 || p.u_diff_h1 <= 0.0) continue;
        const double x = std::log(p.lambda1), y = std::log(p.u_diff_h1);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Wall-clock comparison of the two viscoelastic solvers, sequential.
// ---------------------------------------------------------------------------
struct TimingRow {
    double h = 0;
    int dofs_evss = 0;
    int repeats = 0;
    double srtd_mean = 0, srtd_std = 0;
    double evss_mean = 0, evss_std = 0;
    double ratio = 0;  // evss_mean / srtd_mean
    bool ok = false;
    std::string note;
};

inline std::vector<TimingRow> timing_comparison(
    const ProblemSpec& problem, const ModelParams& params,
    const std::vector<Mesh>& meshes, int repeats = 3,
    const SolveOptions& opts = {}) {
    using clock = std::chrono::steady_clock;
    std::vector<TimingRow> rows;
    for (const auto& mesh : meshes) {
        const FlowSpaces spaces = make_flow_spaces(mesh);
        TimingRow row;
        row.h = mesh.h_char;
        row.dofs_evss = spaces.Vu.n_dofs + spaces.Qp.n_dofs + spaces.St.n_dofs +
                        spaces.Sd.n_dofs;
        row.repeats = repeats;
        bool ok = true;
        for (Method m : {Method::SRTD, Method::EVSS}) {
            double sum = 0, sumsq = 0;
            for (int r = 0; r < repeats; ++r) {
                const auto t0 = clock::now();
                const FlowSolution sol = solve_flow(spaces, m, params, problem, opts);
                const double dt =
                    std::chrono::duration<double>(clock::now() - t0).count();
                if (!sol.converged) {
                    ok = false;
                    row.note = std::string(to_string(m)) + " did not converge";
                    break;
                }
                sum += dt;
                sumsq += dt * dt;
            }
            if (!ok) break;
            const double mean = sum / repeats;
            const double var =
                repeats > 1 ? std::max(0.0, (sumsq - repeats * mean * mean) /
                                                (repeats - 1))
                            : 0.0;
            if (m == Method::SRTD) {
                row.srtd_mean = mean;
                row.srtd_std = std::sqrt(var);
            } else {
                row.evss_mean = mean;
                row.evss_std = std::sqrt(var);
            }
        }
        row.ok = ok;
        if (ok && row.srtd_mean > 0.0) row.ratio = row.evss_mean / row.srtd_mean;
        rows.push_back(row);
        if (!ok) break;
    }
    return rows;
}

}  // namespace visco2d

#endif
