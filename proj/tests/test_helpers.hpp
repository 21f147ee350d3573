#pragma once

// Shared oracles for the test suites. Everything here is deliberately naive
// and independent of the library's code paths: dense tensors carry all d^k
// entries, enumeration goes through explicit tuple generation, and least
// squares goes through Householder QR on the design matrix.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace testutil {

// All tuples in [1..d]^k via odometer, keep the sorted ones, sort the
// survivors lexically. Independent oracle for lexical enumeration ranks.
inline std::vector<std::vector<int>> naive_canonical_tuples(int d, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(k), 1);
    for (;;) {
        if (std::is_sorted(cur.begin(), cur.end())) out.push_back(cur);
        int i = k - 1;
        while (i >= 0 && cur[static_cast<std::size_t>(i)] == d) {
            cur[static_cast<std::size_t>(i)] = 1;
            --i;
        }
        if (i < 0) break;
        ++cur[static_cast<std::size_t>(i)];
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Dense symmetric moment tensors: tensor[k] holds all d^k entries of
// <prod_i x_{nu_i}> in odometer order of the tuple (nu_1..nu_k), nu_i in 0..d-1.
struct DenseMoments {
    int d = 0;
    int max_order = 0;
    std::vector<std::vector<double>> tensor;  // [k][flat tuple]
};

inline std::size_t dense_tuple_index(const std::vector<int>& tuple, int d) {
    std::size_t idx = 0;
    for (int v : tuple) idx = idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(v);
    return idx;
}

inline DenseMoments dense_moments(const std::vector<std::vector<double>>& points,
                                  const std::vector<double>& weights, int d, int max_order) {
    DenseMoments out;
    out.d = d;
    out.max_order = max_order;
    out.tensor.resize(static_cast<std::size_t>(max_order) + 1);
    double wtot = 0;
    for (double w : weights) wtot += w;
    for (int k = 0; k <= max_order; ++k) {
        std::size_t n = 1;
        for (int i = 0; i < k; ++i) n *= static_cast<std::size_t>(d);
        out.tensor[static_cast<std::size_t>(k)].assign(n, 0.0);
        std::vector<int> tuple(static_cast<std::size_t>(k), 0);
        for (std::size_t flat = 0; flat < n; ++flat) {
            double acc = 0;
            for (std::size_t e = 0; e < points.size(); ++e) {
                double v = weights[e];
                for (int i = 0; i < k; ++i)
                    v *= points[e][static_cast<std::size_t>(tuple[static_cast<std::size_t>(i)])];
                acc += v;
            }
            out.tensor[static_cast<std::size_t>(k)][flat] = acc / wtot;
            for (int i = k - 1; i >= 0; --i) {
                if (++tuple[static_cast<std::size_t>(i)] < d) break;
                tuple[static_cast<std::size_t>(i)] = 0;
            }
        }
    }
    return out;
}

// Least squares min ||X c - y||_2 via Householder QR. Columns of X must be
// linearly independent.
inline std::vector<double> qr_least_squares(std::vector<std::vector<double>> X,
                                            std::vector<double> y) {
    const std::size_t m = X.size();
    const std::size_t n = m ? X[0].size() : 0;
    if (m < n) throw std::invalid_argument("underdetermined system");
    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0;
        for (std::size_t i = j; i < m; ++i) norm += X[i][j] * X[i][j];
        norm = std::sqrt(norm);
        if (norm == 0) throw std::invalid_argument("rank-deficient design matrix");
        double alpha = X[j][j] > 0 ? -norm : norm;
        std::vector<double> v(m, 0.0);
        for (std::size_t i = j; i < m; ++i) v[i] = X[i][j];
        v[j] -= alpha;
        double vnorm2 = 0;
        for (std::size_t i = j; i < m; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 == 0) continue;
        for (std::size_t c = j; c < n; ++c) {
            double dot = 0;
            for (std::size_t i = j; i < m; ++i) dot += v[i] * X[i][c];
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = j; i < m; ++i) X[i][c] -= f * v[i];
        }
        double dot = 0;
        for (std::size_t i = j; i < m; ++i) dot += v[i] * y[i];
        const double f = 2.0 * dot / vnorm2;
        for (std::size_t i = j; i < m; ++i) y[i] -= f * v[i];
    }
    std::vector<double> c(n, 0.0);
    for (std::size_t j = n; j-- > 0;) {
        double s = y[j];
        for (std::size_t l = j + 1; l < n; ++l) s -= X[j][l] * c[l];
        c[j] = s / X[j][j];
    }
    return c;
}

// Regularized upper incomplete gamma Q(a, x), series + continued fraction.
inline double gamma_q(double a, double x) {
    if (x < 0 || a <= 0) throw std::invalid_argument("gamma_q domain");
    if (x == 0) return 1.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
    }
    double b = x + 1.0 - a, c = 1e300, dd = 1.0 / b, h = dd;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        dd = an * dd + b;
        if (std::fabs(dd) < 1e-300) dd = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        dd = 1.0 / dd;
        const double del = dd * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

// Chi-squared upper tail probability with k degrees of freedom.
inline double chi2_pvalue(double chi2, double dof) { return gamma_q(dof / 2.0, chi2 / 2.0); }

}  // namespace testutil
