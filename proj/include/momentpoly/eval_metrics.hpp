#pragma once

// Classifier quality metrics: response histograms, the binned purity curve,
// tie-aware weighted AUC, Spearman monotonicity, isotonic violations and the
// deviation from the ideal calibration line purity = (F+1)/2.
//
// evaluate_model bins the purity statistics over a quantile-trimmed response
// range (0.5%..99.5% plus padding): an unregularized high-degree fit can
// produce a handful of wild responses where training data was thin, and a
// single such outlier would otherwise stretch the equal-width bins into
// uselessness. Out-of-range responses land in the under/overflow slots and
// the full observed range is still reported.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <json.hpp>

#include "momentpoly/errors.hpp"
#include "momentpoly/moment_engine.hpp"
#include "momentpoly/poly_model.hpp"
#include "momentpoly/synth_data.hpp"

namespace momentpoly {

struct LabeledResponse {
    double response = 0;
    double weight = 1.0;
    bool is_signal = false;
};

struct ResponseHistogram {
    double lo = 0, hi = 1;
    std::vector<double> signal;      // weighted counts per bin
    std::vector<double> background;
    double under_signal = 0, under_background = 0;
    double over_signal = 0, over_background = 0;

    int bins() const { return static_cast<int>(signal.size()); }
    double edge(int i) const { return lo + (hi - lo) * i / bins(); }
};

struct PurityBin {
    double lo = 0, hi = 0, center = 0;
    double signal_weight = 0, background_weight = 0;
    bool populated = false;
    double purity = 0;

    double total_weight() const { return signal_weight + background_weight; }
};

struct PurityCurve {
    double lo = 0, hi = 1;
    double min_occupancy = 0;
    std::vector<PurityBin> bins;

    std::size_t populated_count() const {
        std::size_t n = 0;
        for (const auto& b : bins) n += b.populated ? 1 : 0;
        return n;
    }
};

struct EvalReport {
    double auc = 0;
    double spearman = 0;
    double max_isotonic_violation = 0;          // largest purity drop between populated bins
    double max_isotonic_violation_sigmas = 0;   // same, in units of the pooled binomial sigma
    double rms_vs_ideal = 0;                    // occupancy-weighted, ideal clipped to [0,1]
    double response_min = 0, response_max = 0;
    double purity_range_lo = 0, purity_range_hi = 0;  // trimmed binning range
    double purity_out_of_range_weight = 0;            // weight outside the trimmed range
    std::size_t n_signal = 0, n_background = 0;
    std::size_t populated_bins = 0;
    int bins = 0;
    double min_occupancy = 0;
    std::optional<double> bayes_auc;
    std::optional<double> auc_gap;
};

namespace detail {

inline std::pair<double, double> checked_range(std::span<const LabeledResponse> data,
                                               std::optional<std::pair<double, double>> range) {
    if (data.empty()) throw EmptySampleError("no responses to bin");
    double lo, hi;
    if (range) {
        lo = range->first;
        hi = range->second;
        if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
            throw InputError("invalid histogram range");
    } else {
        lo = std::numeric_limits<double>::infinity();
        hi = -lo;
        for (const auto& r : data) {
            lo = std::min(lo, r.response);
            hi = std::max(hi, r.response);
        }
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw InputError("responses contain non-finite values");
    }
    if (hi <= lo) {  // all responses identical: give the single value a width
        lo -= 0.5;
        hi += 0.5;
    }
    return {lo, hi};
}

}  // namespace detail

/// Per-class weighted histogram; under/overflow tracked separately. Default
/// range is the observed min/max across both classes.
inline ResponseHistogram response_histogram(std::span<const LabeledResponse> data, int n_bins,
                                            std::optional<std::pair<double, double>> range = {}) {
    if (n_bins < 1) throw InputError("need at least one histogram bin");
    ResponseHistogram h;
    std::tie(h.lo, h.hi) = detail::checked_range(data, range);
    h.signal.assign(static_cast<std::size_t>(n_bins), 0.0);
    h.background.assign(static_cast<std::size_t>(n_bins), 0.0);
    const double width = (h.hi - h.lo) / n_bins;
    for (const auto& r : data) {
        if (r.response < h.lo) {
            (r.is_signal ? h.under_signal : h.under_background) += r.weight;
            continue;
        }
        if (r.response > h.hi) {
            (r.is_signal ? h.over_signal : h.over_background) += r.weight;
            continue;
        }
        const int b = std::min(n_bins - 1, static_cast<int>((r.response - h.lo) / width));
        (r.is_signal ? h.signal : h.background)[static_cast<std::size_t>(b)] += r.weight;
    }
    return h;
}

/// Binned signal purity. Bins whose total weight reaches min_occupancy are
/// flagged populated; only those enter the downstream statistics.
inline PurityCurve purity_curve(std::span<const LabeledResponse> data, int n_bins,
                                double min_occupancy,
                                std::optional<std::pair<double, double>> range = {}) {
    bool saw_signal = false, saw_background = false;
    for (const auto& r : data) (r.is_signal ? saw_signal : saw_background) = true;
    if (!saw_signal || !saw_background)
        throw EmptySampleError("purity curve needs both classes present");

    const auto h = response_histogram(data, n_bins, range);
    PurityCurve curve;
    curve.lo = h.lo;
    curve.hi = h.hi;
    curve.min_occupancy = min_occupancy;
    curve.bins.resize(static_cast<std::size_t>(n_bins));
    for (int i = 0; i < n_bins; ++i) {
        auto& b = curve.bins[static_cast<std::size_t>(i)];
        b.lo = h.edge(i);
        b.hi = h.edge(i + 1);
        b.center = 0.5 * (b.lo + b.hi);
        b.signal_weight = h.signal[static_cast<std::size_t>(i)];
        b.background_weight = h.background[static_cast<std::size_t>(i)];
        const double total = b.total_weight();
        b.populated = total >= std::max(min_occupancy, 1e-300);
        b.purity = total > 0 ? b.signal_weight / total : 0.0;
    }
    if (curve.populated_count() == 0)
        throw DegenerateCurveError("no bin reaches the occupancy threshold of " +
                                   std::to_string(min_occupancy));
    return curve;
}

/// Tie-aware weighted AUC by the rank statistic: each signal/background pair
/// contributes its weight product, ties count half.
inline double weighted_auc(std::span<const LabeledResponse> data) {
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return data[a].response < data[b].response; });
    double ws = 0, wb = 0;
    for (const auto& r : data) (r.is_signal ? ws : wb) += r.weight;
    if (!(ws > 0) || !(wb > 0)) throw EmptySampleError("AUC needs weight in both classes");

    double num = 0, below_b = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        double tie_s = 0, tie_b = 0;
        while (j < idx.size() && data[idx[j]].response == data[idx[i]].response) {
            (data[idx[j]].is_signal ? tie_s : tie_b) += data[idx[j]].weight;
            ++j;
        }
        num += tie_s * (below_b + 0.5 * tie_b);
        below_b += tie_b;
        i = j;
    }
    return num / (ws * wb);
}

/// Spearman rank correlation with average ranks for ties. NaN when fewer
/// than two points.
inline double spearman_rank_correlation(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size()) throw InputError("spearman inputs differ in length");
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        std::size_t i = 0;
        while (i < idx.size()) {
            std::size_t j = i;
            while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
            const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j - 1));
            for (std::size_t k = i; k < j; ++k) r[idx[k]] = avg;
            i = j;
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

inline double ideal_purity(double response_center) {
    return std::clamp(0.5 * (response_center + 1.0), 0.0, 1.0);
}

namespace detail {

/// Weighted quantile of responses (nearest-rank on cumulative weight).
inline double weighted_quantile(std::vector<std::pair<double, double>>& sorted_resp_w, double q,
                                double total) {
    double cum = 0;
    for (const auto& [r, w] : sorted_resp_w) {
        cum += w;
        if (cum >= q * total) return r;
    }
    return sorted_resp_w.back().first;
}

}  // namespace detail

struct EvalOutput {
    EvalReport report;
    PurityCurve curve;
    ResponseHistogram histogram;
    std::vector<double> responses;
};

/// Full evaluation of a trained model on labeled events. When `spec` is
/// given, also computes the Bayes AUC of the analytic optimal response on
/// the same inputs and the gap to it. The histogram spans the observed
/// range; purity statistics use the trimmed range (see file comment).
inline EvalOutput evaluate_model(const PolyModel& model, std::span<const Event> events,
                                 const MixtureSpec* spec = nullptr, int n_bins = 20,
                                 double min_occupancy = 25.0) {
    if (events.empty()) throw EmptySampleError("no events to evaluate");
    EvalOutput out;
    out.responses = model.evaluate_all(events);

    std::vector<LabeledResponse> data(events.size());
    double total_w = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        data[i] = {out.responses[i], events[i].weight, events[i].label > 0};
        total_w += events[i].weight;
        (events[i].label > 0 ? out.report.n_signal : out.report.n_background) += 1;
    }

    out.report.bins = n_bins;
    out.report.min_occupancy = min_occupancy;
    out.report.auc = weighted_auc(data);
    if (spec) {
        const auto bayes = optimal_responses(*spec, events);
        std::vector<LabeledResponse> bdata(data);
        for (std::size_t i = 0; i < bdata.size(); ++i) bdata[i].response = bayes[i];
        out.report.bayes_auc = weighted_auc(bdata);
        out.report.auc_gap = *out.report.bayes_auc - out.report.auc;
    }

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : data) {
        lo = std::min(lo, r.response);
        hi = std::max(hi, r.response);
    }
    out.report.response_min = lo;
    out.report.response_max = hi;

    // trimmed range for purity statistics
    std::vector<std::pair<double, double>> sorted;
    sorted.reserve(data.size());
    for (const auto& r : data) sorted.emplace_back(r.response, r.weight);
    std::sort(sorted.begin(), sorted.end());
    const double qlo = detail::weighted_quantile(sorted, 0.005, total_w);
    const double qhi = detail::weighted_quantile(sorted, 0.995, total_w);
    const double pad = 0.05 * (qhi - qlo);
    const double blo = std::max(lo, qlo - pad);
    const double bhi = std::min(hi, qhi + pad);

    out.histogram = response_histogram(data, n_bins);
    out.curve = purity_curve(data, n_bins, min_occupancy, std::make_pair(blo, bhi));
    out.report.purity_range_lo = blo;
    out.report.purity_range_hi = bhi;
    for (const auto& r : data)
        if (r.response < blo || r.response > bhi) out.report.purity_out_of_range_weight += r.weight;

    std::vector<double> centers, purities;
    const PurityBin* prev = nullptr;
    double max_viol = 0, max_viol_sigmas = 0, rms_num = 0, rms_den = 0;
    for (const auto& b : out.curve.bins) {
        if (!b.populated) continue;
        centers.push_back(b.center);
        purities.push_back(b.purity);
        const double ideal = ideal_purity(b.center);
        rms_num += b.total_weight() * (b.purity - ideal) * (b.purity - ideal);
        rms_den += b.total_weight();
        if (prev) {
            const double drop = prev->purity - b.purity;
            if (drop > max_viol) max_viol = drop;
            const double pooled = (prev->signal_weight + b.signal_weight) /
                                  (prev->total_weight() + b.total_weight());
            const double var = pooled * (1.0 - pooled) *
                               (1.0 / prev->total_weight() + 1.0 / b.total_weight());
            if (drop > 0) {
                const double sig = std::sqrt(var);
                max_viol_sigmas = std::max(
                    max_viol_sigmas,
                    sig > 0 ? drop / sig : std::numeric_limits<double>::infinity());
            }
        }
        prev = &b;
    }
    out.report.populated_bins = centers.size();
    out.report.spearman = spearman_rank_correlation(centers, purities);
    out.report.max_isotonic_violation = max_viol;
    out.report.max_isotonic_violation_sigmas = max_viol_sigmas;
    out.report.rms_vs_ideal = rms_den > 0 ? std::sqrt(rms_num / rms_den) : 0.0;
    return out;
}

/// Histogram table in the shared CSV schema. Purity is left empty for bins
/// with no weight.
inline void write_histogram_csv(std::ostream& os, const ResponseHistogram& h) {
    os << "bin_lo,bin_hi,n_signal,n_background,purity,ideal_purity\n";
    char buf[512];
    for (int i = 0; i < h.bins(); ++i) {
        const double s = h.signal[static_cast<std::size_t>(i)];
        const double b = h.background[static_cast<std::size_t>(i)];
        const double center = 0.5 * (h.edge(i) + h.edge(i + 1));
        if (s + b > 0)
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", h.edge(i),
                          h.edge(i + 1), s, b, s / (s + b), ideal_purity(center));
        else
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,,%.17g\n", h.edge(i),
                          h.edge(i + 1), s, b, ideal_purity(center));
        os << buf;
    }
}

/// Purity table: populated bins only, same schema.
inline void write_purity_csv(std::ostream& os, const PurityCurve& curve) {
    os << "bin_lo,bin_hi,n_signal,n_background,purity,ideal_purity\n";
    char buf[512];
    for (const auto& b : curve.bins) {
        if (!b.populated) continue;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", b.lo, b.hi,
                      b.signal_weight, b.background_weight, b.purity, ideal_purity(b.center));
        os << buf;
    }
}

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json j{{"auc", r.auc},
                     {"spearman", r.spearman},
                     {"max_isotonic_violation", r.max_isotonic_violation},
                     {"max_isotonic_violation_sigmas", r.max_isotonic_violation_sigmas},
                     {"rms_vs_ideal", r.rms_vs_ideal},
                     {"response_min", r.response_min},
                     {"response_max", r.response_max},
                     {"purity_range", {r.purity_range_lo, r.purity_range_hi}},
                     {"purity_out_of_range_weight", r.purity_out_of_range_weight},
                     {"n_signal", r.n_signal},
                     {"n_background", r.n_background},
                     {"populated_bins", r.populated_bins},
                     {"bins", r.bins},
                     {"min_occupancy", r.min_occupancy}};
    if (r.bayes_auc) {
        j["bayes_auc"] = *r.bayes_auc;
        j["auc_gap"] = *r.auc_gap;
    }
    return j;
}

}  // namespace momentpoly
