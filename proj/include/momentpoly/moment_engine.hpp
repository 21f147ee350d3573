#pragma once

// Streaming accumulation of raw monomial moments. An accumulator keeps one
// compensated sum per basis monomial, so merge() of shards matches a single
// pass up to reassociation. Normalizing by the total weight turns the sums
// into expectation values <x^m>; the g/h combinations feed the block system.

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "momentpoly/errors.hpp"
#include "momentpoly/tensor_index.hpp"

namespace momentpoly {

/// One observation: feature vector, class tag or regression target, weight.
/// Binary classification uses label +1 (signal) / -1 (background).
struct Event {
    std::vector<double> features;
    double label = 0.0;
    double weight = 1.0;
};

/// Weighted sums sum_e w_e * x_e^m over all monomials |m| <= max_order,
/// stored in the basis's serial order. Neumaier-compensated per component;
/// the order-0 slot is the total weight.
class MomentAccumulator {
public:
    explicit MomentAccumulator(std::shared_ptr<const MonomialBasis> basis)
        : basis_(std::move(basis)),
          sum_(basis_->size(), 0.0),
          comp_(basis_->size(), 0.0),
          scratch_(basis_->size()) {}

    MomentAccumulator(int dimension, int max_order)
        : MomentAccumulator(std::make_shared<const MonomialBasis>(dimension, max_order)) {}

    const MonomialBasis& basis() const { return *basis_; }
    std::shared_ptr<const MonomialBasis> basis_ptr() const { return basis_; }
    int dimension() const { return basis_->dimension(); }
    int max_order() const { return basis_->max_order(); }
    std::size_t component_count() const { return sum_.size(); }

    /// Add one observation. `weight` may be negative here: the regression
    /// path feeds w*y as the effective weight. Inputs are assumed finite;
    /// event-level screening happens in accumulate().
    void add(std::span<const double> x, double weight = 1.0) {
        if (x.size() != static_cast<std::size_t>(dimension()))
            throw InputError("event dimension " + std::to_string(x.size()) +
                             " does not match accumulator dimension " +
                             std::to_string(dimension()));
        basis_->eval_monomials(x, scratch_);
        for (std::size_t p = 0; p < sum_.size(); ++p)
            add_compensated(p, weight * scratch_[p]);
    }

    /// Componentwise sum of two accumulators over the same basis shape.
    void merge(const MomentAccumulator& other) {
        if (other.dimension() != dimension() || other.max_order() != max_order())
            throw InputError("cannot merge accumulators of different shape");
        if (&other == this) {  // self-merge would read sums mid-update
            merge(MomentAccumulator(*this));
            return;
        }
        for (std::size_t p = 0; p < sum_.size(); ++p) {
            add_compensated(p, other.sum_[p]);
            add_compensated(p, other.comp_[p]);
        }
        rejected_ += other.rejected_;
    }

    /// Current compensated value of component p.
    double sum(std::size_t p) const { return sum_[p] + comp_[p]; }
    double total_weight() const { return sum(0); }

    std::size_t rejected() const { return rejected_; }
    void count_rejected(std::size_t n = 1) { rejected_ += n; }

private:
    void add_compensated(std::size_t p, double v) {
        const double s = sum_[p] + v;
        if (std::fabs(sum_[p]) >= std::fabs(v))
            comp_[p] += (sum_[p] - s) + v;
        else
            comp_[p] += (v - s) + sum_[p];
        sum_[p] = s;
    }

    std::shared_ptr<const MonomialBasis> basis_;
    std::vector<double> sum_;
    std::vector<double> comp_;
    std::vector<double> scratch_;
    std::size_t rejected_ = 0;
};

/// Normalized moment components <x^m> = (sum w x^m) / W. Order-0 is exactly 1.
class MomentSet {
public:
    MomentSet(std::shared_ptr<const MonomialBasis> basis, std::vector<double> values)
        : basis_(std::move(basis)), values_(std::move(values)) {}

    const MonomialBasis& basis() const { return *basis_; }
    std::shared_ptr<const MonomialBasis> basis_ptr() const { return basis_; }
    int dimension() const { return basis_->dimension(); }
    int max_order() const { return basis_->max_order(); }
    double value(std::size_t p) const { return values_[p]; }
    const std::vector<double>& values() const { return values_; }

private:
    std::shared_ptr<const MonomialBasis> basis_;
    std::vector<double> values_;
};

/// The g/h moment pair of the block system: g to order 2*degree, h to
/// order `degree`, both in serial basis order.
struct CombinedMoments {
    int dimension = 0;
    int degree = 0;
    std::shared_ptr<const MonomialBasis> g_basis;  // orders 0..2*degree
    std::shared_ptr<const MonomialBasis> h_basis;  // orders 0..degree
    std::vector<double> g;
    std::vector<double> h;
};

/// Screen and accumulate an event stream into an existing accumulator.
/// Dimension mismatches and negative weights are hard errors; non-finite
/// values reject the event and bump the accumulator's rejected counter.
inline void accumulate_into(MomentAccumulator& acc, std::span<const Event> events) {
    const int dimension = acc.dimension();
    for (const Event& e : events) {
        if (e.features.size() != static_cast<std::size_t>(dimension))
            throw InputError("event dimension " + std::to_string(e.features.size()) +
                             " does not match configured dimension " +
                             std::to_string(dimension));
        if (e.weight < 0) throw InputError("event weight must be non-negative");
        bool finite = std::isfinite(e.weight);
        for (double v : e.features) finite = finite && std::isfinite(v);
        if (!finite) {
            acc.count_rejected();
            continue;
        }
        acc.add(e.features, e.weight);
    }
}

inline MomentAccumulator accumulate(std::span<const Event> events, int dimension,
                                    int max_order) {
    MomentAccumulator acc(dimension, max_order);
    accumulate_into(acc, events);
    return acc;
}

/// Divide by the total weight. The order-0 component becomes exactly 1.
inline MomentSet normalize(const MomentAccumulator& acc) {
    const double w = acc.total_weight();
    if (!(w > 0)) throw EmptySampleError("cannot normalize an empty sample (total weight 0)");
    std::vector<double> values(acc.component_count());
    values[0] = 1.0;
    for (std::size_t p = 1; p < values.size(); ++p) values[p] = acc.sum(p) / w;
    return MomentSet(acc.basis_ptr(), std::move(values));
}

/// Binary-mode combination: g^m = pi_s <x^m>_s + pi_b <x^m>_b for |m| <= 2N,
/// h^m = pi_s <x^m>_s - pi_b <x^m>_b for |m| <= N. With per-class normalized
/// inputs and unit priors, h^0 = 0 and g^0 = 2 exactly.
inline CombinedMoments combine_binary(const MomentSet& signal, const MomentSet& background,
                                      int degree, double prior_signal = 1.0,
                                      double prior_background = 1.0) {
    if (signal.dimension() != background.dimension())
        throw InputError("signal/background moment sets differ in dimension");
    if (degree < 0) throw InputError("degree must be >= 0");
    if (signal.max_order() < 2 * degree || background.max_order() < 2 * degree)
        throw OrderError("combine_binary needs moments up to order " +
                         std::to_string(2 * degree) + ", have " +
                         std::to_string(std::min(signal.max_order(), background.max_order())));

    CombinedMoments cm;
    cm.dimension = signal.dimension();
    cm.degree = degree;
    cm.g_basis = std::make_shared<const MonomialBasis>(cm.dimension, 2 * degree);
    cm.h_basis = std::make_shared<const MonomialBasis>(cm.dimension, degree);
    cm.g.resize(cm.g_basis->size());
    cm.h.resize(cm.h_basis->size());
    // order-major layout: a lower-order basis is a prefix of a higher-order one
    for (std::size_t p = 0; p < cm.g.size(); ++p)
        cm.g[p] = prior_signal * signal.value(p) + prior_background * background.value(p);
    for (std::size_t p = 0; p < cm.h.size(); ++p)
        cm.h[p] = prior_signal * signal.value(p) - prior_background * background.value(p);
    return cm;
}

/// Regression-mode combination from one pass over a single sample:
/// g^m = <x^m> (plain channel, orders <= 2N) and h^m = <y x^m> (target
/// channel accumulated with effective weight w*y, orders <= N). Both are
/// normalized by the plain channel's total weight.
inline CombinedMoments combine_regression(const MomentAccumulator& plain,
                                          const MomentAccumulator& target, int degree) {
    if (plain.dimension() != target.dimension())
        throw InputError("plain/target accumulators differ in dimension");
    if (degree < 0) throw InputError("degree must be >= 0");
    if (plain.max_order() < 2 * degree)
        throw OrderError("regression needs plain moments up to order " +
                         std::to_string(2 * degree));
    if (target.max_order() < degree)
        throw OrderError("regression needs target moments up to order " + std::to_string(degree));
    const double w = plain.total_weight();
    if (!(w > 0)) throw EmptySampleError("cannot combine an empty sample (total weight 0)");

    CombinedMoments cm;
    cm.dimension = plain.dimension();
    cm.degree = degree;
    cm.g_basis = std::make_shared<const MonomialBasis>(cm.dimension, 2 * degree);
    cm.h_basis = std::make_shared<const MonomialBasis>(cm.dimension, degree);
    cm.g.resize(cm.g_basis->size());
    cm.h.resize(cm.h_basis->size());
    cm.g[0] = 1.0;
    for (std::size_t p = 1; p < cm.g.size(); ++p) cm.g[p] = plain.sum(p) / w;
    for (std::size_t p = 0; p < cm.h.size(); ++p) cm.h[p] = target.sum(p) / w;
    return cm;
}

/// Accumulate the two regression channels in one pass: plain moments to
/// order 2*degree weighted by w, target moments to order `degree` weighted
/// by w*y. Rejections are counted on the plain accumulator.
inline void accumulate_regression_into(MomentAccumulator& plain, MomentAccumulator& target,
                                       std::span<const Event> events) {
    const int dimension = plain.dimension();
    for (const Event& e : events) {
        if (e.features.size() != static_cast<std::size_t>(dimension))
            throw InputError("event dimension does not match configured dimension");
        if (e.weight < 0) throw InputError("event weight must be non-negative");
        bool finite = std::isfinite(e.weight) && std::isfinite(e.label);
        for (double v : e.features) finite = finite && std::isfinite(v);
        if (!finite) {
            plain.count_rejected();
            continue;
        }
        plain.add(e.features, e.weight);
        target.add(e.features, e.weight * e.label);
    }
}

inline std::pair<MomentAccumulator, MomentAccumulator> accumulate_regression(
    std::span<const Event> events, int dimension, int degree) {
    MomentAccumulator plain(dimension, 2 * degree);
    MomentAccumulator target(dimension, degree);
    accumulate_regression_into(plain, target, events);
    return {std::move(plain), std::move(target)};
}

}  // namespace momentpoly
