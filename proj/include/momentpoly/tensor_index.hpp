#pragma once

// Compact storage combinatorics for symmetric tensors.
//
// A symmetric tensor of order k in d dimensions has only C(k+d-1, k) free
// components out of d^k. Each free component is labelled by a canonical
// (non-decreasing) index vector (mu_1 <= ... <= mu_k, values in 1..d), or
// equivalently by its monomial: the exponent vector (m_1, ..., m_d) counting
// how often each coordinate appears. Components are stored serially in
// lexical order of the canonical index vectors, and the rank of a vector in
// that order has a closed form:
//
//   pos(mu) = C(k+d-1, k) - sum_{i=1..k} C((k-i+1) + (d-mu_i) - 1, k-i+1)
//
// with pos({1,...,1}) = 1. Everything here is a pure function of immutable
// values; MonomialBasis bundles the tables needed by the hot loops.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "momentpoly/errors.hpp"

namespace momentpoly {

namespace detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r;
    if (__builtin_mul_overflow(a, b, &r))
        throw OverflowError("64-bit overflow in combinatorial count");
    return r;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r;
    if (__builtin_add_overflow(a, b, &r))
        throw OverflowError("64-bit overflow in combinatorial count");
    return r;
}

}  // namespace detail

/// C(n, k) with overflow checking. Exact at every step: the running product
/// after multiplying by (n-k+i) is divisible by i.
inline std::uint64_t binomial(std::int64_t n, std::int64_t k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::int64_t i = 1; i <= k; ++i)
        r = detail::checked_mul(r, static_cast<std::uint64_t>(n - k + i)) /
            static_cast<std::uint64_t>(i);
    return r;
}

/// Canonical index vector of one free symmetric-tensor component:
/// entries mu_1 <= ... <= mu_k with values in 1..d. The empty vector is the
/// order-0 (scalar) component. Non-canonical input is rejected, not sorted.
class IndexVector {
public:
    IndexVector(int dimension, std::vector<int> values)
        : dim_(dimension), vals_(std::move(values)) {
        if (dim_ < 1) throw InvalidIndexError("index vector dimension must be >= 1");
        for (std::size_t i = 0; i < vals_.size(); ++i) {
            if (vals_[i] < 1 || vals_[i] > dim_)
                throw InvalidIndexError("index entry " + std::to_string(vals_[i]) +
                                        " outside 1.." + std::to_string(dim_));
            if (i > 0 && vals_[i] < vals_[i - 1])
                throw InvalidIndexError("index vector is not in canonical (non-decreasing) form");
        }
    }

    int dimension() const { return dim_; }
    int order() const { return static_cast<int>(vals_.size()); }
    const std::vector<int>& values() const { return vals_; }

    bool operator==(const IndexVector& o) const { return dim_ == o.dim_ && vals_ == o.vals_; }

    std::string str() const {
        std::ostringstream os;
        os << '{';
        for (std::size_t i = 0; i < vals_.size(); ++i) os << (i ? "," : "") << vals_[i];
        os << '}';
        return os.str();
    }

private:
    int dim_;
    std::vector<int> vals_;
};

/// Exponent-vector label of a monomial: m_i is the multiplicity of
/// coordinate i in the underlying index vector; order = sum m_i.
class MonomialIndex {
public:
    explicit MonomialIndex(std::vector<int> multiplicities)
        : mults_(std::move(multiplicities)) {
        if (mults_.empty()) throw InvalidIndexError("monomial index needs dimension >= 1");
        for (int m : mults_)
            if (m < 0) throw InvalidIndexError("monomial multiplicities must be non-negative");
    }

    int dimension() const { return static_cast<int>(mults_.size()); }
    int order() const { return std::accumulate(mults_.begin(), mults_.end(), 0); }
    const std::vector<int>& multiplicities() const { return mults_; }

    bool operator==(const MonomialIndex& o) const { return mults_ == o.mults_; }

private:
    std::vector<int> mults_;
};

/// Number of free components of a symmetric order-k tensor in d dimensions,
/// C(k+d-1, k). num_free_components(d, 0) == 1.
inline std::uint64_t num_free_components(int dimension, int order) {
    if (dimension < 1) throw InputError("dimension must be >= 1");
    if (order < 0) throw InputError("order must be >= 0");
    return binomial(static_cast<std::int64_t>(order) + dimension - 1, order);
}

/// 1-based rank of a canonical index vector in the lexical enumeration of
/// its (dimension, order) block.
inline std::uint64_t position_of(const IndexVector& idx) {
    const int d = idx.dimension();
    const int k = idx.order();
    std::uint64_t pos = num_free_components(d, k);
    const auto& mu = idx.values();
    for (int i = 1; i <= k; ++i) {
        const int suborder = k - i + 1;
        const int subdim = d - mu[i - 1];
        pos -= binomial(static_cast<std::int64_t>(suborder) + subdim - 1, suborder);
    }
    return pos;
}

/// Inverse of position_of: the canonical index vector at a 1-based position.
inline IndexVector index_at(std::uint64_t position, int dimension, int order) {
    const std::uint64_t total = num_free_components(dimension, order);
    if (position < 1 || position > total)
        throw RangeError("position " + std::to_string(position) + " outside 1.." +
                         std::to_string(total) + " for d=" + std::to_string(dimension) +
                         ", k=" + std::to_string(order));
    std::vector<int> vals(static_cast<std::size_t>(order));
    std::uint64_t p = position;
    int lo = 1;
    for (int i = 0; i < order; ++i) {
        const int remaining = order - i - 1;
        for (int v = lo; v <= dimension; ++v) {
            // completions with entry i fixed to v: suffix lives in v..d
            const std::uint64_t cnt = num_free_components(dimension - v + 1, remaining);
            if (p <= cnt) {
                vals[static_cast<std::size_t>(i)] = v;
                lo = v;
                break;
            }
            p -= cnt;
        }
    }
    return IndexVector(dimension, std::move(vals));
}

/// Count coordinate occurrences: the monomial identifying an index vector.
inline MonomialIndex monomial_of(const IndexVector& idx) {
    std::vector<int> m(static_cast<std::size_t>(idx.dimension()), 0);
    for (int v : idx.values()) ++m[static_cast<std::size_t>(v - 1)];
    return MonomialIndex(std::move(m));
}

/// Canonical index vector of a monomial (coordinate i repeated m_i times).
inline IndexVector index_of(const MonomialIndex& m) {
    std::vector<int> vals;
    vals.reserve(static_cast<std::size_t>(m.order()));
    for (int v = 1; v <= m.dimension(); ++v)
        vals.insert(vals.end(), static_cast<std::size_t>(m.multiplicities()[v - 1]), v);
    return IndexVector(m.dimension(), std::move(vals));
}

/// Multinomial coefficient n!/(m_1! ... m_d!): the number of dense-tensor
/// entries sharing one monomial. Computed as a product of binomials so every
/// intermediate stays integral.
inline std::uint64_t multiplicity(const MonomialIndex& m) {
    std::uint64_t result = 1;
    std::int64_t seen = 0;
    for (int mi : m.multiplicities()) {
        seen += mi;
        result = detail::checked_mul(result, binomial(seen, mi));
    }
    return result;
}

/// All canonical index vectors of one (dimension, order) block, in lexical
/// order. enumerate_indices(d, 0) yields the single empty vector.
inline std::vector<IndexVector> enumerate_indices(int dimension, int order) {
    const std::uint64_t total = num_free_components(dimension, order);
    std::vector<IndexVector> out;
    out.reserve(static_cast<std::size_t>(total));
    std::vector<int> cur(static_cast<std::size_t>(order), 1);
    for (;;) {
        out.emplace_back(dimension, cur);
        int i = order - 1;
        while (i >= 0 && cur[static_cast<std::size_t>(i)] == dimension) --i;
        if (i < 0) break;
        const int v = ++cur[static_cast<std::size_t>(i)];
        std::fill(cur.begin() + i + 1, cur.end(), v);
    }
    return out;
}

/// All monomials of order 0..max_order in d dimensions, stored order-major
/// (all order-0 components, then order-1, ...) and lexically within each
/// order -- the serialization used for moment vectors and the block system.
///
/// Carries the tables the hot paths need: per-monomial exponents, a Pascal
/// table for O(order) position lookups, and parent links so all monomial
/// values of an input vector are evaluated by one multiply each.
class MonomialBasis {
public:
    MonomialBasis(int dimension, int max_order)
        : dim_(dimension), max_order_(max_order) {
        if (dim_ < 1) throw InputError("basis dimension must be >= 1");
        if (max_order_ < 0) throw InputError("basis max order must be >= 0");

        std::uint64_t total = 0;
        for (int k = 0; k <= max_order_; ++k)
            total = detail::checked_add(total, num_free_components(dim_, k));
        if (total > (std::uint64_t{1} << 26))
            throw InputError("monomial basis with " + std::to_string(total) +
                             " components is beyond the supported size");

        build_pascal();

        offsets_.resize(static_cast<std::size_t>(max_order_) + 2, 0);
        exps_.reserve(static_cast<std::size_t>(total) * static_cast<std::size_t>(dim_));
        parent_.resize(static_cast<std::size_t>(total), 0);
        last_var_.resize(static_cast<std::size_t>(total), 0);

        std::size_t flat = 0;
        for (int k = 0; k <= max_order_; ++k) {
            offsets_[static_cast<std::size_t>(k)] = flat;
            for (const IndexVector& iv : enumerate_indices(dim_, k)) {
                const MonomialIndex m = monomial_of(iv);
                exps_.insert(exps_.end(), m.multiplicities().begin(), m.multiplicities().end());
                if (k > 0) {
                    const int last = iv.values().back();
                    std::vector<int> pm = m.multiplicities();
                    --pm[static_cast<std::size_t>(last - 1)];
                    parent_[flat] = static_cast<std::uint32_t>(position(pm));
                    last_var_[flat] = static_cast<std::uint32_t>(last - 1);
                }
                ++flat;
            }
        }
        offsets_[static_cast<std::size_t>(max_order_) + 1] = flat;
    }

    int dimension() const { return dim_; }
    int max_order() const { return max_order_; }
    std::size_t size() const { return offsets_.back(); }

    /// Flat offset of the first order-k monomial.
    std::size_t order_begin(int k) const { return offsets_[static_cast<std::size_t>(k)]; }
    std::size_t order_end(int k) const { return offsets_[static_cast<std::size_t>(k) + 1]; }

    std::span<const int> exponents(std::size_t flat) const {
        return {exps_.data() + flat * static_cast<std::size_t>(dim_),
                static_cast<std::size_t>(dim_)};
    }

    int order_of(std::size_t flat) const {
        const auto e = exponents(flat);
        return std::accumulate(e.begin(), e.end(), 0);
    }

    /// Flat position of a monomial given by its exponent vector. O(order).
    std::size_t position(std::span<const int> exponents) const {
        if (exponents.size() != static_cast<std::size_t>(dim_))
            throw InputError("exponent vector length does not match basis dimension");
        int k = 0;
        for (int e : exponents) {
            if (e < 0) throw InvalidIndexError("negative exponent");
            k += e;
        }
        if (k > max_order_)
            throw OrderError("monomial order " + std::to_string(k) +
                             " exceeds basis max order " + std::to_string(max_order_));
        std::uint64_t pos = pascal(k + dim_ - 1, k);
        int i = 1;
        for (int v = 1; v <= dim_; ++v)
            for (int c = 0; c < exponents[static_cast<std::size_t>(v - 1)]; ++c, ++i)
                pos -= pascal(k - i + 1 + dim_ - v - 1, k - i + 1);
        return offsets_[static_cast<std::size_t>(k)] + static_cast<std::size_t>(pos) - 1;
    }

    /// Evaluate every basis monomial at x. out[p] = prod_i x_i^{m_i(p)};
    /// each value extends its order-(k-1) parent by one multiply.
    void eval_monomials(std::span<const double> x, std::span<double> out) const {
        out[0] = 1.0;
        for (std::size_t p = 1; p < size(); ++p)
            out[p] = out[parent_[p]] * x[last_var_[p]];
    }

    std::uint32_t parent(std::size_t flat) const { return parent_[flat]; }
    std::uint32_t last_variable(std::size_t flat) const { return last_var_[flat]; }

private:
    void build_pascal() {
        const int n = max_order_ + dim_;  // need C(r, c) for r <= max_order + dim - 1
        pascal_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
        for (int r = 0; r < n; ++r) {
            at(r, 0) = 1;
            for (int c = 1; c <= r; ++c) {
                const std::uint64_t a = at(r - 1, c - 1), b = c <= r - 1 ? at(r - 1, c) : 0;
                // saturate on overflow; entries that large are never reachable
                // from a basis small enough to construct
                at(r, c) = (a == kSat || b == kSat || a > kSat - b) ? kSat : a + b;
            }
        }
    }

    std::uint64_t& at(int r, int c) {
        return pascal_[static_cast<std::size_t>(r) * static_cast<std::size_t>(max_order_ + dim_) +
                       static_cast<std::size_t>(c)];
    }

    std::uint64_t pascal(int r, int c) const {
        if (c < 0 || c > r || r < 0) return 0;
        const std::uint64_t v =
            pascal_[static_cast<std::size_t>(r) * static_cast<std::size_t>(max_order_ + dim_) +
                    static_cast<std::size_t>(c)];
        if (v == kSat) throw OverflowError("64-bit overflow in position lookup");
        return v;
    }

    static constexpr std::uint64_t kSat = ~std::uint64_t{0};

    int dim_;
    int max_order_;
    std::vector<int> exps_;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> last_var_;
    std::vector<std::uint64_t> pascal_;
};

}  // namespace momentpoly
