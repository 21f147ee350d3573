// Command-line front end: data generation, training, evaluation and model
// inspection. Exit codes are part of the contract: 0 success, 2 input or
// config error, 3 numerical failure.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "momentpoly/momentpoly.hpp"

namespace {

using namespace momentpoly;

int effective_threads() {
    const int hw = std::max(1u, std::thread::hardware_concurrency());
    const char* env = std::getenv("MOMENTPOLY_THREADS");
    if (!env) return hw;
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || cap < 1)
        throw InputError("MOMENTPOLY_THREADS must be a positive integer, got '" +
                         std::string(env) + "'");
    return static_cast<int>(std::min<long>(hw, cap));
}

MixtureSpec resolve_spec(const std::string& ref) {
    if (ref == "fig1" || ref == "sec3") return builtin_spec(ref);
    std::ifstream is(ref);
    if (!is) throw InputError("spec '" + ref + "' is neither a built-in name nor a readable file");
    try {
        return nlohmann::json::parse(is).get<MixtureSpec>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError("failed to parse spec file '" + ref + "': " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open '" + path + "' for writing");
    os << text;
    if (!os) throw InputError("failed while writing '" + path + "'");
}

std::string monomial_name(std::span<const int> exps) {
    std::string out;
    for (std::size_t i = 0; i < exps.size(); ++i) {
        if (exps[i] == 0) continue;
        if (!out.empty()) out += "*";
        out += "x" + std::to_string(i + 1);
        if (exps[i] > 1) out += "^" + std::to_string(exps[i]);
    }
    return out.empty() ? "1" : out;
}

struct GenArgs {
    std::string spec;
    std::size_t n = 10000;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_gen(const GenArgs& a) {
    const MixtureSpec spec = resolve_spec(a.spec);
    const auto train = sample(spec, a.n, a.seed);
    const auto test = sample(spec, a.n, splitmix64(a.seed ^ 0x7e57));
    const std::string train_path = a.out + "_train.csv";
    const std::string test_path = a.out + "_test.csv";
    write_events_csv(train_path, train, spec.dimension);
    write_events_csv(test_path, test, spec.dimension);

    nlohmann::json echo{{"command", "gen"},
                        {"spec", a.spec},
                        {"dimension", spec.dimension},
                        {"n_per_class", a.n},
                        {"seed", a.seed},
                        {"files", {train_path, test_path}}};
    std::cout << echo.dump(2) << "\n";
    return 0;
}

struct TrainArgs {
    std::string data;
    std::string out;
    int degree = 3;
    double lambda = 0.0;
    std::string preproc = "affine";
    std::string mode = "binary";
    std::uint64_t seed = 0;
};

int cmd_train(const TrainArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto table = read_events_csv(a.data);

    FitConfig cfg;
    cfg.degree = a.degree;
    cfg.lambda = a.lambda;
    cfg.preproc = preproc_mode_from(a.preproc);
    cfg.mode = [&] {
        if (a.mode == "binary") return FitMode::binary;
        if (a.mode == "regression") return FitMode::regression;
        throw InputError("unknown mode '" + a.mode + "' (expected binary or regression)");
    }();
    cfg.seed = a.seed;
    cfg.threads = effective_threads();

    const auto result = fit(table.events, cfg);
    write_text_file(a.out, save(result.model).dump(2) + "\n");
    const auto t1 = std::chrono::steady_clock::now();

    nlohmann::json report{
        {"command", "train"},
        {"config",
         {{"data", a.data},
          {"out", a.out},
          {"degree", a.degree},
          {"lambda", a.lambda},
          {"preproc", a.preproc},
          {"mode", a.mode},
          {"seed", a.seed},
          {"threads", cfg.threads}}},
        {"M", result.model.coefficients().size()},
        {"condition_estimate", result.report.condition_estimate},
        {"residual_norm", result.report.residual_norm},
        {"lambda", result.report.lambda},
        {"n_signal", result.n_signal},
        {"n_background", result.n_background},
        {"rejected", result.rejected},
        {"coefficients", result.model.coefficients()},
        {"accumulate_seconds", result.accumulate_seconds},
        {"assemble_seconds", result.assemble_seconds},
        {"solve_seconds", result.solve_seconds},
        {"wall_seconds", std::chrono::duration<double>(t1 - t0).count()}};
    std::cout << report.dump(2) << "\n";
    return 0;
}

struct EvalArgs {
    std::string model;
    std::string data;
    std::string out;
    std::string spec;
    int bins = 20;
};

int cmd_eval(const EvalArgs& a) {
    std::ifstream is(a.model);
    if (!is) throw InputError("cannot open model '" + a.model + "'");
    PolyModel model = [&] {
        try {
            return load(nlohmann::json::parse(is));
        } catch (const nlohmann::json::exception& e) {
            throw LoadError("model document '" + a.model + "' is not valid JSON: " + e.what());
        }
    }();
    const auto table = read_events_csv(a.data);
    if (table.dimension != model.dimension())
        throw InputError("data dimension " + std::to_string(table.dimension) +
                         " does not match model dimension " + std::to_string(model.dimension()));

    std::optional<MixtureSpec> spec;
    if (!a.spec.empty()) spec = resolve_spec(a.spec);

    // default occupancy threshold, scaled down for samples too small for it
    const double occupancy = std::min(
        25.0, std::max(1.0, static_cast<double>(table.events.size()) / (2.0 * a.bins)));
    const auto out = evaluate_model(model, table.events, spec ? &*spec : nullptr, a.bins,
                                    occupancy);

    std::ostringstream hist_os, pur_os;
    write_histogram_csv(hist_os, out.histogram);
    write_purity_csv(pur_os, out.curve);
    write_text_file(a.out + "_hist.csv", hist_os.str());
    write_text_file(a.out + "_purity.csv", pur_os.str());

    nlohmann::json report = to_json(out.report);
    report["command"] = "eval";
    report["config"] = {{"model", a.model},
                        {"data", a.data},
                        {"out", a.out},
                        {"spec", a.spec},
                        {"bins", a.bins}};
    write_text_file(a.out + "_report.json", report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_inspect(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open model '" + path + "'");
    PolyModel model = [&] {
        try {
            return load(nlohmann::json::parse(is));
        } catch (const nlohmann::json::exception& e) {
            throw LoadError("model document '" + path + "' is not valid JSON: " + e.what());
        }
    }();

    const auto& meta = model.metadata();
    std::cout << "model: " << path << "\n"
              << "dimension: " << model.dimension() << "\n"
              << "degree: " << model.degree() << "\n"
              << "coefficients (M): " << model.coefficients().size() << "\n"
              << "preprocessor: " << to_string(model.preprocessor().mode) << "\n"
              << "trained on: " << meta.n_signal << " signal / " << meta.n_background
              << " background events\n"
              << "lambda: " << meta.lambda << "\n"
              << "condition estimate: " << meta.condition_estimate << "\n"
              << "seed: " << meta.seed << "\n";

    std::vector<std::size_t> order(model.coefficients().size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::fabs(model.coefficients()[x]) > std::fabs(model.coefficients()[y]);
    });
    const std::size_t top = std::min<std::size_t>(10, order.size());
    std::cout << "largest coefficients:\n";
    for (std::size_t i = 0; i < top; ++i) {
        const std::size_t p = order[i];
        std::cout << "  " << monomial_name(model.basis().exponents(p)) << " = "
                  << model.coefficients()[p] << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"momentpoly: polynomial classification from distribution moments"};
    app.require_subcommand(1);

    GenArgs gen_args;
    auto* gen = app.add_subcommand("gen", "generate a seeded mixture sample as train/test CSVs");
    gen->add_option("--spec", gen_args.spec, "built-in spec name (fig1, sec3) or JSON spec file")
        ->required();
    gen->add_option("--n", gen_args.n, "events per class")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_args.seed, "RNG seed");
    gen->add_option("--out", gen_args.out, "output prefix (writes PREFIX_train.csv and PREFIX_test.csv)")
        ->required();

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "fit a polynomial model on an event CSV");
    train->add_option("data", train_args.data, "training event CSV")->required();
    train->add_option("--degree", train_args.degree, "polynomial degree N_F")->required();
    train->add_option("--lambda", train_args.lambda, "ridge parameter (default 0)");
    train->add_option("--preproc", train_args.preproc, "preprocessor: none, affine, squash");
    train->add_option("--mode", train_args.mode, "binary or regression");
    train->add_option("--seed", train_args.seed, "seed recorded in the model metadata");
    train->add_option("--out", train_args.out, "model document path")->required();

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "evaluate a model on labeled events");
    eval->add_option("model", eval_args.model, "model document")->required();
    eval->add_option("data", eval_args.data, "test event CSV")->required();
    eval->add_option("--spec", eval_args.spec,
                     "mixture spec for the Bayes-optimal comparison (name or file)");
    eval->add_option("--bins", eval_args.bins, "histogram/purity bins")->check(CLI::PositiveNumber);
    eval->add_option("--out", eval_args.out,
                     "output prefix (writes _hist.csv, _purity.csv, _report.json)")
        ->required();

    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect", "print a human-readable model summary");
    inspect->add_option("model", inspect_path, "model document")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_args);
        if (train->parsed()) return cmd_train(train_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (inspect->parsed()) return cmd_inspect(inspect_path);
        return 2;
    } catch (const SingularSystemError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const OverflowError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
