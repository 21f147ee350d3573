#pragma once

// Assembly and solution of the truncated block moment system. The matrix
// entry at row monomial a and column monomial b is the g moment at the
// exponent sum a+b, so A is symmetric and block-Hankel (a classical Hankel
// matrix in one dimension). Multiplicities and the 1/j! factors live inside
// the unknowns, so no combinatorial factor appears in the matrix itself.
//
// The solve is LAPACK's Bunch-Kaufman factorization (dsytrf/dsytrs): A is
// symmetric but from finite samples not guaranteed definite. The report
// carries a 1-norm condition estimate from the factorization and the
// residual of the unregularized system.

#include <lapacke.h>

#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "momentpoly/errors.hpp"
#include "momentpoly/moment_engine.hpp"
#include "momentpoly/tensor_index.hpp"

namespace momentpoly {

/// Dense symmetric system A * F = rhs over the monomial basis of orders
/// 0..degree. `matrix` is column-major with both triangles filled.
struct MomentSystem {
    int dimension = 0;
    int degree = 0;
    std::shared_ptr<const MonomialBasis> basis;
    std::vector<double> matrix;
    std::vector<double> rhs;

    std::size_t size() const { return rhs.size(); }
};

struct SolveReport {
    std::vector<double> solution;
    double condition_estimate = 0.0;  // 1-norm estimate of the factored matrix
    double lambda = 0.0;
    double residual_norm = 0.0;  // ||A x - rhs||_2 against the lambda=0 system
};

/// Build the truncated system from combined moments: A[a,b] = g^(a+b),
/// rhs[a] = h^a.
inline MomentSystem assemble(const CombinedMoments& cm, int degree) {
    if (degree < 0) throw InputError("degree must be >= 0");
    if (degree > cm.degree)
        throw OrderError("combined moments carry g up to order " + std::to_string(2 * cm.degree) +
                         "; cannot assemble a degree-" + std::to_string(degree) + " system");

    MomentSystem sys;
    sys.dimension = cm.dimension;
    sys.degree = degree;
    sys.basis = degree == cm.degree
                    ? cm.h_basis
                    : std::make_shared<const MonomialBasis>(cm.dimension, degree);
    const std::size_t m = sys.basis->size();
    sys.matrix.assign(m * m, 0.0);
    sys.rhs.assign(m, 0.0);

    const MonomialBasis& gb = *cm.g_basis;
    const int d = cm.dimension;
    std::vector<int> combined(static_cast<std::size_t>(d));
    for (std::size_t a = 0; a < m; ++a) {
        const auto ea = sys.basis->exponents(a);
        for (std::size_t b = a; b < m; ++b) {
            const auto eb = sys.basis->exponents(b);
            for (int i = 0; i < d; ++i)
                combined[static_cast<std::size_t>(i)] =
                    ea[static_cast<std::size_t>(i)] + eb[static_cast<std::size_t>(i)];
            const double v = cm.g[gb.position(combined)];
            sys.matrix[a + b * m] = v;
            sys.matrix[b + a * m] = v;
        }
        sys.rhs[a] = cm.h[a];
    }
    return sys;
}

namespace detail {

inline double one_norm(const std::vector<double>& a, std::size_t m) {
    double best = 0;
    for (std::size_t c = 0; c < m; ++c) {
        double s = 0;
        for (std::size_t r = 0; r < m; ++r) s += std::fabs(a[r + c * m]);
        best = std::max(best, s);
    }
    return best;
}

}  // namespace detail

/// Solve (A + lambda*I) x = rhs. Throws SingularSystemError when the
/// factorization hits an exactly singular pivot, which at lambda = 0 means
/// the truncated system is rank deficient to working precision.
inline SolveReport solve(const MomentSystem& sys, double lambda = 0.0) {
    if (lambda < 0) throw InputError("ridge parameter lambda must be >= 0");
    const std::size_t m = sys.size();
    if (m == 0) throw InputError("cannot solve an empty system");
    for (double v : sys.matrix)
        if (!std::isfinite(v)) throw InputError("system matrix contains non-finite entries");
    for (double v : sys.rhs)
        if (!std::isfinite(v)) throw InputError("system rhs contains non-finite entries");

    const lapack_int n = static_cast<lapack_int>(m);
    std::vector<double> factored = sys.matrix;
    if (lambda > 0)
        for (std::size_t i = 0; i < m; ++i) factored[i + i * m] += lambda;
    const double anorm = detail::one_norm(factored, m);

    std::vector<lapack_int> ipiv(m);
    lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, factored.data(), n, ipiv.data());
    if (info > 0)
        throw SingularSystemError(
            "moment matrix is singular to working precision (zero pivot at index " +
            std::to_string(info) + "); retry with a ridge parameter lambda > 0");
    if (info < 0) throw Error("dsytrf: illegal argument " + std::to_string(-info));

    double rcond = 0.0;
    info = LAPACKE_dsycon(LAPACK_COL_MAJOR, 'L', n, factored.data(), n, ipiv.data(), anorm,
                          &rcond);
    if (info != 0) throw Error("dsycon failed with info " + std::to_string(info));

    SolveReport report;
    report.lambda = lambda;
    report.condition_estimate =
        rcond > 0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    report.solution = sys.rhs;
    info = LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, 1, factored.data(), n, ipiv.data(),
                          report.solution.data(), n);
    if (info != 0) throw Error("dsytrs failed with info " + std::to_string(info));

    // residual of the unregularized system
    double rss = 0;
    for (std::size_t r = 0; r < m; ++r) {
        double ax = 0;
        for (std::size_t c = 0; c < m; ++c) ax += sys.matrix[r + c * m] * report.solution[c];
        const double diff = ax - sys.rhs[r];
        rss += diff * diff;
    }
    report.residual_norm = std::sqrt(rss);
    return report;
}

/// One-dimensional specialization: the Hankel system A[a,b] = g[a+b],
/// rhs[a] = h[a], built directly from scalar moment arrays.
inline SolveReport solve_1d(std::span<const double> g_moments, std::span<const double> h_moments,
                            int degree, double lambda = 0.0) {
    if (degree < 0) throw InputError("degree must be >= 0");
    const std::size_t m = static_cast<std::size_t>(degree) + 1;
    if (g_moments.size() < 2 * m - 1)
        throw OrderError("solve_1d needs g moments up to order " + std::to_string(2 * degree));
    if (h_moments.size() < m)
        throw OrderError("solve_1d needs h moments up to order " + std::to_string(degree));

    MomentSystem sys;
    sys.dimension = 1;
    sys.degree = degree;
    sys.basis = std::make_shared<const MonomialBasis>(1, degree);
    sys.matrix.resize(m * m);
    sys.rhs.assign(h_moments.begin(), h_moments.begin() + static_cast<std::ptrdiff_t>(m));
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) sys.matrix[a + b * m] = g_moments[a + b];
    return solve(sys, lambda);
}

}  // namespace momentpoly
