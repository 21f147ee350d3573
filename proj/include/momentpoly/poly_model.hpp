#pragma once

// The trained model: preprocessing parameters, the folded coefficient vector
// (multiplicities and 1/j! absorbed, so F(x) = sum_m F_m x^m), evaluation,
// the end-to-end fit pipeline, and a versioned JSON document format.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "momentpoly/errors.hpp"
#include "momentpoly/moment_engine.hpp"
#include "momentpoly/system_solver.hpp"
#include "momentpoly/tensor_index.hpp"

namespace momentpoly {

enum class PreprocMode { none, affine, squash };

inline std::string to_string(PreprocMode m) {
    switch (m) {
        case PreprocMode::none: return "none";
        case PreprocMode::affine: return "affine";
        case PreprocMode::squash: return "squash";
    }
    throw Error("unknown preprocessor mode");
}

inline PreprocMode preproc_mode_from(const std::string& s) {
    if (s == "none") return PreprocMode::none;
    if (s == "affine") return PreprocMode::affine;
    if (s == "squash") return PreprocMode::squash;
    throw InputError("unknown preprocessor mode '" + s + "'");
}

/// Per-feature map into a compact range, fitted on the training sample.
///   none:   identity
///   affine: z = (x - offset)/scale, calibrated so the training range maps
///           onto [-1,1]; inputs are clamped to the calibration box, since
///           the polynomial is meaningless outside its fitted domain
///   squash: z = tanh((x - offset)/scale), for genuinely unbounded features
struct Preprocessor {
    PreprocMode mode = PreprocMode::none;
    std::vector<double> offset;
    std::vector<double> scale;

    void apply(std::span<const double> x, std::span<double> z) const {
        switch (mode) {
            case PreprocMode::none:
                std::copy(x.begin(), x.end(), z.begin());
                return;
            case PreprocMode::affine:
                for (std::size_t i = 0; i < x.size(); ++i)
                    z[i] = std::clamp((x[i] - offset[i]) / scale[i], -1.0, 1.0);
                return;
            case PreprocMode::squash:
                for (std::size_t i = 0; i < x.size(); ++i)
                    z[i] = std::tanh((x[i] - offset[i]) / scale[i]);
                return;
        }
    }

    static Preprocessor fit(PreprocMode mode, std::span<const Event> events, int dimension) {
        Preprocessor p;
        p.mode = mode;
        if (mode == PreprocMode::none) return p;
        const std::size_t d = static_cast<std::size_t>(dimension);
        for (const Event& e : events)
            if (e.features.size() != d)
                throw InputError("inconsistent event dimensions in calibration sample");
        p.offset.assign(d, 0.0);
        p.scale.assign(d, 1.0);
        if (mode == PreprocMode::affine) {
            std::vector<double> lo(d, std::numeric_limits<double>::infinity());
            std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
            for (const Event& e : events)
                for (std::size_t i = 0; i < d; ++i) {
                    if (!std::isfinite(e.features[i])) continue;
                    lo[i] = std::min(lo[i], e.features[i]);
                    hi[i] = std::max(hi[i], e.features[i]);
                }
            for (std::size_t i = 0; i < d; ++i) {
                if (!(lo[i] <= hi[i])) throw EmptySampleError("no finite values for feature " +
                                                              std::to_string(i));
                p.offset[i] = 0.5 * (lo[i] + hi[i]);
                const double half = 0.5 * (hi[i] - lo[i]);
                p.scale[i] = half > 0 ? half : 1.0;  // constant feature maps to 0
            }
        } else {  // squash: center on mean, scale by twice the spread
            std::vector<double> sum(d, 0.0), sq(d, 0.0);
            double n = 0;
            for (const Event& e : events) {
                bool finite = true;
                for (std::size_t i = 0; i < d; ++i) finite = finite && std::isfinite(e.features[i]);
                if (!finite) continue;
                for (std::size_t i = 0; i < d; ++i) {
                    sum[i] += e.features[i];
                    sq[i] += e.features[i] * e.features[i];
                }
                n += 1;
            }
            if (n == 0) throw EmptySampleError("no finite events to calibrate preprocessor");
            for (std::size_t i = 0; i < d; ++i) {
                p.offset[i] = sum[i] / n;
                const double var = std::max(0.0, sq[i] / n - p.offset[i] * p.offset[i]);
                const double sd = std::sqrt(var);
                p.scale[i] = sd > 0 ? 2.0 * sd : 1.0;
            }
        }
        return p;
    }
};

struct ModelMetadata {
    std::uint64_t n_signal = 0;
    std::uint64_t n_background = 0;
    double lambda = 0.0;
    double condition_estimate = 0.0;
    std::uint64_t seed = 0;
};

/// Immutable trained classifier/regressor. Evaluation walks the shared
/// lexical basis with one multiply per monomial, identical to the scheme
/// the accumulator uses.
class PolyModel {
public:
    PolyModel(int dimension, int degree, Preprocessor pre, std::vector<double> coefficients,
              ModelMetadata meta = {})
        : dim_(dimension),
          degree_(degree),
          pre_(std::move(pre)),
          basis_(std::make_shared<const MonomialBasis>(dimension, degree)),
          coeff_(std::move(coefficients)),
          meta_(meta) {
        if (coeff_.size() != basis_->size())
            throw InputError("coefficient count " + std::to_string(coeff_.size()) +
                             " does not match basis size " + std::to_string(basis_->size()));
    }

    int dimension() const { return dim_; }
    int degree() const { return degree_; }
    const Preprocessor& preprocessor() const { return pre_; }
    const MonomialBasis& basis() const { return *basis_; }
    const std::vector<double>& coefficients() const { return coeff_; }
    const ModelMetadata& metadata() const { return meta_; }

    double evaluate(std::span<const double> x) const {
        if (x.size() != static_cast<std::size_t>(dim_))
            throw InputError("input dimension " + std::to_string(x.size()) +
                             " does not match model dimension " + std::to_string(dim_));
        for (double v : x)
            if (!std::isfinite(v)) throw InputError("non-finite input to evaluate");
        std::vector<double> z(x.size());
        std::vector<double> vals(basis_->size());
        pre_.apply(x, z);
        basis_->eval_monomials(z, vals);
        double acc = 0;
        for (std::size_t p = 0; p < vals.size(); ++p) acc += coeff_[p] * vals[p];
        return acc;
    }

    /// Bulk evaluation reusing scratch buffers.
    std::vector<double> evaluate_all(std::span<const Event> events) const {
        std::vector<double> out(events.size());
        std::vector<double> z(static_cast<std::size_t>(dim_));
        std::vector<double> vals(basis_->size());
        for (std::size_t i = 0; i < events.size(); ++i) {
            const auto& x = events[i].features;
            if (x.size() != static_cast<std::size_t>(dim_))
                throw InputError("event dimension does not match model dimension");
            for (double v : x)
                if (!std::isfinite(v))
                    throw InputError("non-finite feature in event " + std::to_string(i));
            pre_.apply(x, z);
            basis_->eval_monomials(z, vals);
            double acc = 0;
            for (std::size_t p = 0; p < vals.size(); ++p) acc += coeff_[p] * vals[p];
            out[i] = acc;
        }
        return out;
    }

private:
    int dim_;
    int degree_;
    Preprocessor pre_;
    std::shared_ptr<const MonomialBasis> basis_;
    std::vector<double> coeff_;
    ModelMetadata meta_;
};

enum class FitMode { binary, regression };

struct FitConfig {
    int degree = 3;
    double lambda = 0.0;
    PreprocMode preproc = PreprocMode::affine;
    FitMode mode = FitMode::binary;
    std::uint64_t seed = 0;
    int threads = 1;  // shard count for accumulation
};

struct FitResult {
    PolyModel model;
    SolveReport report;
    std::size_t n_signal = 0;
    std::size_t n_background = 0;
    std::size_t rejected = 0;
    double accumulate_seconds = 0.0;
    double assemble_seconds = 0.0;
    double solve_seconds = 0.0;
};

namespace detail {

/// Run add_to(shard, contiguous subrange) across `threads` workers. Shards
/// and their merge order are fixed by the thread count, so a fixed count
/// gives a fixed result.
template <typename AddTo>
void sharded_accumulate(std::span<const Event> events, int threads, AddTo add_to) {
    const int t = std::max(1, threads);
    if (t == 1 || events.size() < 2048) {
        add_to(0, events);
        return;
    }
    const std::size_t shards = static_cast<std::size_t>(t);
    std::vector<std::thread> pool;
    const std::size_t chunk = (events.size() + shards - 1) / shards;
    for (std::size_t s = 0; s < shards; ++s) {
        const std::size_t begin = std::min(s * chunk, events.size());
        const std::size_t end = std::min(begin + chunk, events.size());
        pool.emplace_back([&, s, begin, end] { add_to(s, events.subspan(begin, end - begin)); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// End-to-end training: preprocess, accumulate per class (or per channel),
/// normalize, combine, assemble, solve, package. Deterministic for a fixed
/// config and thread count.
inline FitResult fit(std::span<const Event> events, const FitConfig& config) {
    if (config.degree < 0) throw InputError("degree must be >= 0");
    if (events.empty()) throw EmptySampleError("cannot fit on an empty event list");
    const int d = static_cast<int>(events.front().features.size());
    if (d < 1) throw InputError("events must have at least one feature");
    for (const Event& e : events)
        if (e.features.size() != static_cast<std::size_t>(d))
            throw InputError("inconsistent event dimensions in training sample");

    const Preprocessor pre = Preprocessor::fit(config.preproc, events, d);

    // preprocess once into a transformed copy
    std::vector<Event> transformed(events.begin(), events.end());
    for (Event& e : transformed) {
        std::vector<double> z(e.features.size());
        bool finite = true;
        for (double v : e.features) finite = finite && std::isfinite(v);
        if (!finite) continue;  // screened later by the accumulators
        pre.apply(e.features, z);
        e.features = std::move(z);
    }

    const int threads = std::max(1, config.threads);
    const auto t0 = std::chrono::steady_clock::now();

    CombinedMoments cm;
    std::size_t n_signal = 0, n_background = 0, rejected = 0;

    if (config.mode == FitMode::binary) {
        std::vector<Event> signal, background;
        for (Event& e : transformed) {
            if (!std::isfinite(e.label)) {
                ++rejected;
                continue;
            }
            (e.label > 0 ? signal : background).push_back(std::move(e));
        }
        n_signal = signal.size();
        n_background = background.size();
        if (signal.empty()) throw EmptySampleError("no signal events (label > 0) in sample");
        if (background.empty())
            throw EmptySampleError("no background events (label <= 0) in sample");

        const auto acc_basis = std::make_shared<const MonomialBasis>(d, 2 * config.degree);
        auto accumulate_class = [&](std::span<const Event> evs) {
            std::vector<MomentAccumulator> parts(static_cast<std::size_t>(threads),
                                                 MomentAccumulator(acc_basis));
            detail::sharded_accumulate(evs, threads,
                                       [&](std::size_t shard, std::span<const Event> span) {
                                           accumulate_into(parts[shard], span);
                                       });
            MomentAccumulator total(acc_basis);
            for (const auto& p : parts) total.merge(p);
            return total;
        };
        const auto acc_s = accumulate_class(signal);
        const auto acc_b = accumulate_class(background);
        rejected += acc_s.rejected() + acc_b.rejected();
        cm = combine_binary(normalize(acc_s), normalize(acc_b), config.degree);
    } else {
        const auto plain_basis = std::make_shared<const MonomialBasis>(d, 2 * config.degree);
        const auto target_basis = std::make_shared<const MonomialBasis>(d, config.degree);
        std::vector<MomentAccumulator> plain_parts(static_cast<std::size_t>(threads),
                                                   MomentAccumulator(plain_basis));
        std::vector<MomentAccumulator> target_parts(static_cast<std::size_t>(threads),
                                                    MomentAccumulator(target_basis));
        detail::sharded_accumulate(
            std::span<const Event>(transformed), threads,
            [&](std::size_t shard, std::span<const Event> span) {
                accumulate_regression_into(plain_parts[shard], target_parts[shard], span);
            });
        MomentAccumulator plain(plain_basis);
        MomentAccumulator target(target_basis);
        for (const auto& p : plain_parts) plain.merge(p);
        for (const auto& t : target_parts) target.merge(t);
        n_signal = transformed.size();
        rejected += plain.rejected();
        cm = combine_regression(plain, target, config.degree);
    }

    const auto t1 = std::chrono::steady_clock::now();
    const auto sys = assemble(cm, config.degree);
    const auto t2 = std::chrono::steady_clock::now();
    SolveReport report = solve(sys, config.lambda);
    const auto t3 = std::chrono::steady_clock::now();

    ModelMetadata meta;
    meta.n_signal = n_signal;
    meta.n_background = n_background;
    meta.lambda = config.lambda;
    meta.condition_estimate = report.condition_estimate;
    meta.seed = config.seed;

    FitResult result{PolyModel(d, config.degree, pre, report.solution, meta), std::move(report),
                     n_signal, n_background, rejected,
                     std::chrono::duration<double>(t1 - t0).count(),
                     std::chrono::duration<double>(t2 - t1).count(),
                     std::chrono::duration<double>(t3 - t2).count()};
    return result;
}

inline constexpr int kModelFormatVersion = 1;

/// Serialize to the versioned model document. nlohmann emits shortest
/// round-trip doubles, so save/load reproduces evaluation bit-exactly.
inline nlohmann::json save(const PolyModel& model) {
    nlohmann::json doc;
    doc["format_version"] = kModelFormatVersion;
    doc["dimension"] = model.dimension();
    doc["degree"] = model.degree();
    doc["ordering"] = "lexical";
    doc["preprocessor"] = {{"mode", to_string(model.preprocessor().mode)},
                           {"offsets", model.preprocessor().offset},
                           {"scales", model.preprocessor().scale}};
    doc["coefficients"] = model.coefficients();
    const auto& m = model.metadata();
    const double cond = std::isfinite(m.condition_estimate)
                            ? m.condition_estimate
                            : std::numeric_limits<double>::max();
    doc["metadata"] = {{"n_signal", m.n_signal},
                       {"n_background", m.n_background},
                       {"lambda", m.lambda},
                       {"condition_estimate", cond},
                       {"seed", m.seed}};
    return doc;
}

inline PolyModel load(const nlohmann::json& doc) {
    if (!doc.is_object()) throw LoadError("model document is not a JSON object");
    if (!doc.contains("format_version") || !doc["format_version"].is_number_integer())
        throw LoadError("model document lacks an integer format_version");
    const int version = doc["format_version"].get<int>();
    if (version != kModelFormatVersion)
        throw LoadError("unsupported model format_version " + std::to_string(version) +
                        " (expected " + std::to_string(kModelFormatVersion) + ")");
    for (const char* key : {"dimension", "degree", "preprocessor", "coefficients"})
        if (!doc.contains(key)) throw LoadError(std::string("model document lacks '") + key + "'");
    if (doc.contains("ordering") && doc["ordering"].get<std::string>() != "lexical")
        throw LoadError("unsupported basis ordering '" + doc["ordering"].get<std::string>() + "'");

    const int dimension = doc["dimension"].get<int>();
    const int degree = doc["degree"].get<int>();
    if (dimension < 1 || degree < 0) throw LoadError("invalid dimension or degree");

    Preprocessor pre;
    try {
        const auto& pj = doc["preprocessor"];
        pre.mode = preproc_mode_from(pj.at("mode").get<std::string>());
        pre.offset = pj.value("offsets", std::vector<double>{});
        pre.scale = pj.value("scales", std::vector<double>{});
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("malformed preprocessor block: ") + e.what());
    } catch (const InputError& e) {
        throw LoadError(std::string("malformed preprocessor block: ") + e.what());
    }
    if (pre.mode != PreprocMode::none &&
        (pre.offset.size() != static_cast<std::size_t>(dimension) ||
         pre.scale.size() != static_cast<std::size_t>(dimension)))
        throw LoadError("preprocessor parameter arrays do not match the dimension");
    for (double s : pre.scale)
        if (!(s > 0)) throw LoadError("preprocessor scales must be positive");

    std::vector<double> coeff;
    try {
        coeff = doc["coefficients"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("malformed coefficient array: ") + e.what());
    }
    const std::uint64_t expected = [&] {
        std::uint64_t total = 0;
        for (int k = 0; k <= degree; ++k) total += num_free_components(dimension, k);
        return total;
    }();
    if (coeff.size() != expected)
        throw LoadError("coefficient count " + std::to_string(coeff.size()) +
                        " does not match basis size " + std::to_string(expected) + " for d=" +
                        std::to_string(dimension) + ", degree=" + std::to_string(degree));

    ModelMetadata meta;
    if (doc.contains("metadata")) {
        const auto& mj = doc["metadata"];
        meta.n_signal = mj.value("n_signal", std::uint64_t{0});
        meta.n_background = mj.value("n_background", std::uint64_t{0});
        meta.lambda = mj.value("lambda", 0.0);
        meta.condition_estimate = mj.value("condition_estimate", 0.0);
        meta.seed = mj.value("seed", std::uint64_t{0});
    }
    return PolyModel(dimension, degree, std::move(pre), std::move(coeff), meta);
}

}  // namespace momentpoly
