#ifndef VISCO2D_LINALG_HPP
#define VISCO2D_LINALG_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace visco2d {

struct Triplet {
    int row, col;
    double value;
};

class SingularMatrixError : public std::runtime_error {
  public:
    explicit SingularMatrixError(const std::string& what)
        : std::runtime_error(what) {}
};

// Compressed-row sparse matrix (column indices sorted and unique within
// each row).  Backed by Eigen.
struct SparseMatrix {
    Eigen::SparseMatrix<double, Eigen::RowMajor> m;

    int n_rows() const { return (int)m.rows(); }
    int n_cols() const { return (int)m.cols(); }
    const int* row_offsets() const { return m.outerIndexPtr(); }
    const int* col_indices() const { return m.innerIndexPtr(); }
    const double* values() const { return m.valuePtr(); }

    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const { return m * x; }
};

// Duplicate (i, j) entries are summed.
inline SparseMatrix triplet_assemble(int n_rows, int n_cols,
                                     const std::vector<Triplet>& triplets) {
    std::vector<Eigen::Triplet<double>> ts;
    ts.reserve(triplets.size());
    for (const auto& t : triplets) {
        if (t.row < 0 || t.row >= n_rows || t.col < 0 || t.col >= n_cols)
            throw std::out_of_range("triplet_assemble: index (" +
                                    std::to_string(t.row) + ", " +
                                    std::to_string(t.col) + ") out of range");
        ts.emplace_back(t.row, t.col, t.value);
    }
    SparseMatrix A;
    A.m.resize(n_rows, n_cols);
    A.m.setFromTriplets(ts.begin(), ts.end());
    A.m.makeCompressed();
    return A;
}

using SparseLUSolver =
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;

inline Eigen::VectorXd lu_solve(const SparseMatrix& A, const Eigen::VectorXd& b) {
    if (A.n_rows() != A.n_cols())
        throw std::invalid_argument("lu_solve: matrix not square");
    SparseLUSolver solver;
    Eigen::SparseMatrix<double> Acol = A.m;
    solver.compute(Acol);
    if (solver.info() != Eigen::Success)
        throw SingularMatrixError("lu_solve: singular or structurally deficient matrix");
    Eigen::VectorXd x = solver.solve(b);
    if (!x.allFinite())
        throw SingularMatrixError("lu_solve: non-finite solution (singular pivot)");
    return x;
}

struct NewtonReport {
    int iterations = 0;
    std::vector<double> residual_history;  // length iterations + 1
    bool converged = false;
};

struct NewtonCallbacks {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
    std::function<SparseMatrix(const Eigen::VectorXd&)> jacobian;
};

// Full-step Newton, relative-residual convergence test with an absolute
// floor for zero-RHS edge cases.  Divergence (residual above 1e6 x
// initial, or non-finite) is reported, not thrown; a singular Jacobian
// propagates the lu_solve error.
inline std::pair<Eigen::VectorXd, NewtonReport> newton_solve(
    const NewtonCallbacks& cb, Eigen::VectorXd x, double rtol = 1e-9,
    int max_iter = 50) {
    constexpr double abs_floor = 1e-13;
    NewtonReport report;
    Eigen::VectorXd r = cb.residual(x);
    double rnorm = r.norm();
    report.residual_history.push_back(rnorm);
    const double r0 = rnorm;
    if (rnorm <= abs_floor) {
        report.converged = true;
        return {x, report};
    }

    SparseLUSolver solver;
    bool analyzed = false;
    while (report.iterations < max_iter) {
        SparseMatrix J = cb.jacobian(x);
        Eigen::SparseMatrix<double> Jcol = J.m;
        J.m.resize(0, 0);  // keep only one copy alive through factorization
        if (!analyzed) {
            solver.analyzePattern(Jcol);
            analyzed = true;
        }
        solver.factorize(Jcol);
        if (solver.info() != Eigen::Success)
            throw SingularMatrixError("newton_solve: singular Jacobian");
        const Eigen::VectorXd dx = solver.solve(r);
        if (!dx.allFinite())
            throw SingularMatrixError("newton_solve: singular Jacobian (non-finite step)");
        x -= dx;
        ++report.iterations;
        r = cb.residual(x);
        rnorm = r.allFinite() ? r.norm() : std::nan("");
        report.residual_history.push_back(rnorm);
        if (!std::isfinite(rnorm) || rnorm > 1e6 * r0) {
            report.converged = false;
            return {x, report};
        }
        if (rnorm <= rtol * r0 || rnorm <= abs_floor) {
            report.converged = true;
            return {x, report};
        }
    }
    report.converged = false;
    return {x, report};
}

// Row replacement with the prescribed value; column contributions moved
// to the right-hand side.
inline void apply_dirichlet(SparseMatrix& A, Eigen::VectorXd& rhs,
                            const std::vector<int>& dofs,
                            const std::vector<double>& values) {
    if (dofs.size() != values.size())
        throw std::invalid_argument("apply_dirichlet: dof/value size mismatch");
    std::vector<char> constrained(A.n_rows(), 0);
    std::vector<double> bc(A.n_rows(), 0.0);
    for (size_t k = 0; k < dofs.size(); ++k) {
        constrained[dofs[k]] = 1;
        bc[dofs[k]] = values[k];
    }
    for (int row = 0; row < A.n_rows(); ++row) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A.m, row);
             it; ++it) {
            if (constrained[row]) {
                it.valueRef() = 0.0;
            } else if (constrained[it.col()]) {
                rhs[row] -= it.value() * bc[it.col()];
                it.valueRef() = 0.0;
            }
        }
    }
    A.m.prune(0.0);
    for (size_t k = 0; k < dofs.size(); ++k) {
        A.m.coeffRef(dofs[k], dofs[k]) = 1.0;
        rhs[dofs[k]] = values[k];
    }
    A.m.makeCompressed();
}

}  // namespace visco2d

#endif
