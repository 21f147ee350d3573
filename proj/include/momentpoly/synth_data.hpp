#pragma once

// Seeded Gaussian-mixture generators for the two benchmark setups, plus the
// analytic optimal response (s-b)/(s+b) used as ground truth. Sampling is
// per class with an exact count; disjoint RNG streams are derived from the
// user seed with splitmix64 (stream i uses splitmix64(seed + i)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "momentpoly/errors.hpp"
#include "momentpoly/moment_engine.hpp"

namespace momentpoly {

/// One Gaussian mixture component. Either `sigma` (per-axis standard
/// deviations, diagonal covariance) or `cov` (full row-major d x d
/// covariance) must be set, not both.
struct GaussianComponent {
    std::vector<double> mean;
    std::vector<double> sigma;  // diagonal case
    std::vector<double> cov;    // full case, row-major
    double weight = 1.0;
};

/// Uniform density on an axis-aligned box.
struct UniformComponent {
    std::vector<double> lo;
    std::vector<double> hi;
    double weight = 1.0;
};

struct ClassMixture {
    std::vector<GaussianComponent> gaussians;
    std::vector<UniformComponent> uniforms;
};

struct MixtureSpec {
    int dimension = 1;
    ClassMixture signal;
    ClassMixture background;
};

/// Documented stream-split function: derives independent sub-seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

namespace detail {

/// Lower-triangular Cholesky factor of a small SPD matrix (row-major).
inline std::vector<double> cholesky(const std::vector<double>& a, std::size_t d) {
    std::vector<double> l(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * d + j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i * d + k] * l[j * d + k];
            if (i == j) {
                if (!(s > 0)) throw SpecError("covariance matrix is not positive definite");
                l[i * d + i] = std::sqrt(s);
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    return l;
}

/// One mixture component in sampling/evaluation form.
struct CompiledComponent {
    bool is_gaussian = true;
    double weight = 0;
    std::vector<double> mean;
    std::vector<double> chol;     // lower triangular, row-major
    double log_norm = 0;          // -log((2 pi)^{d/2} |Sigma|^{1/2}) or -log(volume)
    std::vector<double> lo, hi;   // uniform support
};

struct CompiledMixture {
    int d = 0;
    std::vector<CompiledComponent> comps;

    double pdf(std::span<const double> x) const {
        double total = 0;
        std::vector<double> y(static_cast<std::size_t>(d));
        for (const auto& c : comps) {
            if (c.is_gaussian) {
                // solve L y = x - mean, then quadratic form is |y|^2
                for (std::size_t i = 0; i < y.size(); ++i) {
                    double s = x[i] - c.mean[i];
                    for (std::size_t k = 0; k < i; ++k)
                        s -= c.chol[i * y.size() + k] * y[k];
                    y[i] = s / c.chol[i * y.size() + i];
                }
                double q = 0;
                for (double v : y) q += v * v;
                total += c.weight * std::exp(c.log_norm - 0.5 * q);
            } else {
                bool inside = true;
                for (std::size_t i = 0; i < y.size(); ++i)
                    inside = inside && x[i] >= c.lo[i] && x[i] <= c.hi[i];
                if (inside) total += c.weight * std::exp(c.log_norm);
            }
        }
        return total;
    }
};

inline CompiledMixture compile(const ClassMixture& cls, int d) {
    if (cls.gaussians.empty() && cls.uniforms.empty())
        throw SpecError("a class mixture needs at least one component");
    CompiledMixture out;
    out.d = d;
    const std::size_t dd = static_cast<std::size_t>(d);
    double wsum = 0;
    for (const auto& g : cls.gaussians) {
        if (!(g.weight > 0)) throw SpecError("component weights must be positive");
        if (g.mean.size() != dd) throw SpecError("gaussian mean has wrong dimension");
        CompiledComponent c;
        c.is_gaussian = true;
        c.weight = g.weight;
        c.mean = g.mean;
        if (!g.cov.empty()) {
            if (!g.sigma.empty()) throw SpecError("specify sigma or cov, not both");
            if (g.cov.size() != dd * dd) throw SpecError("covariance has wrong shape");
            c.chol = cholesky(g.cov, dd);
        } else {
            if (g.sigma.size() != dd) throw SpecError("sigma has wrong dimension");
            c.chol.assign(dd * dd, 0.0);
            for (std::size_t i = 0; i < dd; ++i) {
                if (!(g.sigma[i] > 0)) throw SpecError("sigma entries must be positive");
                c.chol[i * dd + i] = g.sigma[i];
            }
        }
        double log_det_half = 0;
        for (std::size_t i = 0; i < dd; ++i) log_det_half += std::log(c.chol[i * dd + i]);
        c.log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi) - log_det_half;
        wsum += c.weight;
        out.comps.push_back(std::move(c));
    }
    for (const auto& u : cls.uniforms) {
        if (!(u.weight > 0)) throw SpecError("component weights must be positive");
        if (u.lo.size() != dd || u.hi.size() != dd)
            throw SpecError("uniform bounds have wrong dimension");
        CompiledComponent c;
        c.is_gaussian = false;
        c.weight = u.weight;
        c.lo = u.lo;
        c.hi = u.hi;
        double log_vol = 0;
        for (std::size_t i = 0; i < dd; ++i) {
            if (!(u.hi[i] > u.lo[i])) throw SpecError("uniform support box is degenerate");
            log_vol += std::log(u.hi[i] - u.lo[i]);
        }
        c.log_norm = -log_vol;
        wsum += c.weight;
        out.comps.push_back(std::move(c));
    }
    for (auto& c : out.comps) c.weight /= wsum;  // normalize class weights to 1
    return out;
}

}  // namespace detail

inline void validate(const MixtureSpec& spec) {
    if (spec.dimension < 1) throw SpecError("mixture dimension must be >= 1");
    detail::compile(spec.signal, spec.dimension);
    detail::compile(spec.background, spec.dimension);
}

/// Draw exactly n events per class. Signal events carry label +1 and come
/// first, background events carry label -1. Deterministic per seed: signal
/// uses stream splitmix64(seed), background splitmix64(seed + 1).
inline std::vector<Event> sample(const MixtureSpec& spec, std::size_t n_per_class,
                                 std::uint64_t seed) {
    if (n_per_class < 1) throw InputError("need at least one event per class");
    validate(spec);
    std::vector<Event> out;
    out.reserve(2 * n_per_class);
    const std::size_t d = static_cast<std::size_t>(spec.dimension);

    auto draw_class = [&](const ClassMixture& cls, double label, std::uint64_t stream_seed) {
        const auto mix = detail::compile(cls, spec.dimension);
        std::mt19937_64 rng(splitmix64(stream_seed));
        std::vector<double> cw;
        for (const auto& c : mix.comps) cw.push_back(c.weight);
        std::discrete_distribution<std::size_t> pick(cw.begin(), cw.end());
        std::normal_distribution<double> n01(0.0, 1.0);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const auto& c = mix.comps[pick(rng)];
            Event e;
            e.features.resize(d);
            e.label = label;
            if (c.is_gaussian) {
                std::vector<double> z(d);
                for (auto& v : z) v = n01(rng);
                for (std::size_t r = 0; r < d; ++r) {
                    double s = c.mean[r];
                    for (std::size_t k = 0; k <= r; ++k) s += c.chol[r * d + k] * z[k];
                    e.features[r] = s;
                }
            } else {
                for (std::size_t r = 0; r < d; ++r)
                    e.features[r] = c.lo[r] + (c.hi[r] - c.lo[r]) * u01(rng);
            }
            out.push_back(std::move(e));
        }
    };
    draw_class(spec.signal, +1.0, seed);
    draw_class(spec.background, -1.0, seed + 1);
    return out;
}

/// Analytic optimal response F(x) = (s - b)/(s + b) = 2 P(s|x) - 1.
inline double optimal_response(const MixtureSpec& spec, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(spec.dimension))
        throw InputError("query point dimension does not match the mixture spec");
    const auto s_mix = detail::compile(spec.signal, spec.dimension);
    const auto b_mix = detail::compile(spec.background, spec.dimension);
    const double s = s_mix.pdf(x);
    const double b = b_mix.pdf(x);
    if (s + b <= 0)
        throw UndefinedPointError("both class densities vanish at the query point");
    return (s - b) / (s + b);
}

/// Batch variant compiling the densities once.
inline std::vector<double> optimal_responses(const MixtureSpec& spec,
                                             std::span<const Event> events) {
    const auto s_mix = detail::compile(spec.signal, spec.dimension);
    const auto b_mix = detail::compile(spec.background, spec.dimension);
    std::vector<double> out(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& x = events[i].features;
        if (x.size() != static_cast<std::size_t>(spec.dimension))
            throw InputError("event dimension does not match the mixture spec");
        const double s = s_mix.pdf(x);
        const double b = b_mix.pdf(x);
        if (s + b <= 0)
            throw UndefinedPointError("both class densities vanish at an event");
        out[i] = (s - b) / (s + b);
    }
    return out;
}

/// 1D benchmark: central Gaussian signal between two background peaks.
inline MixtureSpec fig1_spec() {
    MixtureSpec spec;
    spec.dimension = 1;
    spec.signal.gaussians.push_back({{0.0}, {0.5}, {}, 1.0});
    spec.background.gaussians.push_back({{-2.0}, {0.7}, {}, 0.5});
    spec.background.gaussians.push_back({{+2.0}, {0.7}, {}, 0.5});
    return spec;
}

/// 3D benchmark: twelve non-overlapping anisotropic Gaussian peaks on a
/// shuffled 3x2x2 grid inside the unit cube, over a flat background. The
/// construction is a fixed deterministic function (internal seed), so the
/// spec is the same for every run; the user seed only drives sampling.
inline MixtureSpec sec3_spec() {
    MixtureSpec spec;
    spec.dimension = 3;
    std::vector<std::vector<double>> means;
    for (double x : {1.0 / 6, 3.0 / 6, 5.0 / 6})
        for (double y : {0.25, 0.75})
            for (double z : {0.25, 0.75}) means.push_back({x, y, z});
    std::mt19937_64 rng(splitmix64(0x5ec3));
    std::shuffle(means.begin(), means.end(), rng);
    std::uniform_real_distribution<double> usig(0.02, 0.06);
    for (auto& m : means) {
        std::vector<double> sigma = {usig(rng), usig(rng), usig(rng)};
        spec.signal.gaussians.push_back({m, sigma, {}, 1.0 / 12});
    }
    spec.background.uniforms.push_back({{0, 0, 0}, {1, 1, 1}, 1.0});
    return spec;
}

/// Look up a built-in spec by name or parse a JSON spec document.
inline MixtureSpec builtin_spec(const std::string& name) {
    if (name == "fig1") return fig1_spec();
    if (name == "sec3") return sec3_spec();
    throw SpecError("unknown built-in spec '" + name + "' (expected fig1 or sec3)");
}

inline void to_json(nlohmann::json& j, const GaussianComponent& g) {
    j = {{"type", "gaussian"}, {"mean", g.mean}, {"weight", g.weight}};
    if (!g.cov.empty())
        j["cov"] = g.cov;
    else
        j["sigma"] = g.sigma;
}

inline void to_json(nlohmann::json& j, const UniformComponent& u) {
    j = {{"type", "uniform"}, {"lo", u.lo}, {"hi", u.hi}, {"weight", u.weight}};
}

inline void to_json(nlohmann::json& j, const ClassMixture& c) {
    j = nlohmann::json::array();
    for (const auto& g : c.gaussians) j.push_back(g);
    for (const auto& u : c.uniforms) j.push_back(u);
}

inline void to_json(nlohmann::json& j, const MixtureSpec& s) {
    j = {{"dimension", s.dimension}, {"signal", s.signal}, {"background", s.background}};
}

inline void from_json(const nlohmann::json& j, ClassMixture& c) {
    c = {};
    for (const auto& comp : j) {
        const std::string type = comp.value("type", "gaussian");
        if (type == "gaussian") {
            GaussianComponent g;
            g.mean = comp.at("mean").get<std::vector<double>>();
            g.sigma = comp.value("sigma", std::vector<double>{});
            g.cov = comp.value("cov", std::vector<double>{});
            g.weight = comp.value("weight", 1.0);
            c.gaussians.push_back(std::move(g));
        } else if (type == "uniform") {
            UniformComponent u;
            u.lo = comp.at("lo").get<std::vector<double>>();
            u.hi = comp.at("hi").get<std::vector<double>>();
            u.weight = comp.value("weight", 1.0);
            c.uniforms.push_back(std::move(u));
        } else {
            throw SpecError("unknown component type '" + type + "'");
        }
    }
}

inline void from_json(const nlohmann::json& j, MixtureSpec& s) {
    try {
        s.dimension = j.at("dimension").get<int>();
        s.signal = j.at("signal").get<ClassMixture>();
        s.background = j.at("background").get<ClassMixture>();
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("malformed mixture spec: ") + e.what());
    }
    validate(s);
}

}  // namespace momentpoly
