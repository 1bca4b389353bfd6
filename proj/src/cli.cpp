#include "mfcf/cli.hpp"

#include "mfcf/error.hpp"
#include "mfcf/metrics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mfcf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config

namespace {

template <class T>
T get_field(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <class T>
void read_if_present(const json& j, const char* key, T& target, const std::string& where) {
    if (j.contains(key)) {
        target = get_field<T>(j, key, where);
    }
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where + " must be an object");
    }
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

Grid parse_grid(const json& j, Grid grid, const std::string& where) {
    check_keys(j,
               {"factors", "iterations", "learning_rate", "regularization", "bnmf_alpha",
                "bnmf_beta"},
               where);
    read_if_present(j, "factors", grid.factors, where);
    read_if_present(j, "iterations", grid.iterations, where);
    read_if_present(j, "learning_rate", grid.learning_rate, where);
    read_if_present(j, "regularization", grid.regularization, where);
    read_if_present(j, "bnmf_alpha", grid.bnmf_alpha, where);
    read_if_present(j, "bnmf_beta", grid.bnmf_beta, where);
    return grid;
}

DatasetFormat parse_format(const json& j, DatasetFormat f, const std::string& where) {
    check_keys(j,
               {"delimiter", "has_header", "user_column", "item_column", "rating_column",
                "min_score", "max_score", "step", "threshold", "skip_ratings"},
               where);
    read_if_present(j, "delimiter", f.delimiter, where);
    read_if_present(j, "has_header", f.has_header, where);
    read_if_present(j, "user_column", f.user_column, where);
    read_if_present(j, "item_column", f.item_column, where);
    read_if_present(j, "rating_column", f.rating_column, where);
    read_if_present(j, "min_score", f.scale.min_score, where);
    read_if_present(j, "max_score", f.scale.max_score, where);
    read_if_present(j, "step", f.scale.step, where);
    read_if_present(j, "threshold", f.scale.threshold, where);
    read_if_present(j, "skip_ratings", f.skip_ratings, where);
    f.scale.validate();
    return f;
}

DatasetSpec parse_dataset(const json& j, std::size_t index) {
    const std::string where = "datasets[" + std::to_string(index) + "]";
    check_keys(j, {"name", "preset", "path", "format", "threshold"}, where);
    DatasetSpec spec;
    if (j.contains("preset")) {
        const auto& preset = dataset_preset(get_field<std::string>(j, "preset", where));
        spec.name = preset.name;
        spec.path = preset.default_path;
        spec.format = preset.format;
    } else if (!j.contains("path")) {
        throw ConfigError(where + " needs a preset or a path");
    }
    read_if_present(j, "name", spec.name, where);
    read_if_present(j, "path", spec.path, where);
    if (j.contains("format")) {
        spec.format = parse_format(j.at("format"), spec.format, where + ".format");
    }
    read_if_present(j, "threshold", spec.format.scale.threshold, where);
    spec.format.scale.validate();
    if (spec.name.empty()) {
        spec.name = fs::path(spec.path).stem().string();
    }
    return spec;
}

ModelConfig parse_model(const json& j, ModelConfig c, const std::string& where) {
    check_keys(j,
               {"model", "factors", "iterations", "learning_rate", "regularization",
                "bnmf_alpha", "bnmf_beta", "seed"},
               where);
    if (j.contains("model")) {
        c.kind = parse_model_kind(get_field<std::string>(j, "model", where));
    }
    read_if_present(j, "factors", c.factors, where);
    read_if_present(j, "iterations", c.iterations, where);
    read_if_present(j, "learning_rate", c.learning_rate, where);
    read_if_present(j, "regularization", c.regularization, where);
    read_if_present(j, "bnmf_alpha", c.bnmf_alpha, where);
    read_if_present(j, "bnmf_beta", c.bnmf_beta, where);
    read_if_present(j, "seed", c.seed, where);
    return c;
}

} // namespace

ExperimentPlan RunConfig::plan_for(ModelKind kind) const {
    ExperimentPlan plan;
    plan.model = kind;
    const auto it = model_grids.find(kind);
    plan.grid = it != model_grids.end() ? it->second : grid;
    plan.folds = folds;
    plan.master_seed = seed;
    plan.max_n = max_n;
    plan.sampling = sampling;
    return plan;
}

RunConfig parse_run_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(root, {"schema_version", "datasets", "plan", "model", "output"}, "config");
    if (!root.contains("schema_version") || root["schema_version"] != 1) {
        throw ConfigError("config needs \"schema_version\": 1");
    }
    RunConfig config;
    if (root.contains("datasets")) {
        const auto& list = root["datasets"];
        if (!list.is_array()) {
            throw ConfigError("datasets must be an array");
        }
        for (std::size_t i = 0; i < list.size(); ++i) {
            config.datasets.push_back(parse_dataset(list[i], i));
        }
    }
    if (root.contains("plan")) {
        const auto& plan = root["plan"];
        check_keys(plan, {"models", "grid", "model_grids", "folds", "seed", "max_n", "sampling"},
                   "plan");
        if (plan.contains("models")) {
            config.models.clear();
            for (const auto& name : get_field<std::vector<std::string>>(plan, "models", "plan")) {
                config.models.push_back(parse_model_kind(name));
            }
        }
        if (plan.contains("grid")) {
            config.grid = parse_grid(plan["grid"], config.grid, "plan.grid");
        }
        if (plan.contains("model_grids")) {
            if (!plan["model_grids"].is_object()) {
                throw ConfigError("plan.model_grids must be an object");
            }
            // each entry starts from the shared grid and replaces what it names
            for (const auto& item : plan["model_grids"].items()) {
                config.model_grids[parse_model_kind(item.key())] =
                    parse_grid(item.value(), config.grid, "plan.model_grids." + item.key());
            }
        }
        read_if_present(plan, "folds", config.folds, "plan");
        read_if_present(plan, "seed", config.seed, "plan");
        read_if_present(plan, "max_n", config.max_n, "plan");
        if (plan.contains("sampling")) {
            const auto& s = plan["sampling"];
            check_keys(s, {"mode", "count", "seed"}, "plan.sampling");
            const auto mode = get_field<std::string>(s, "mode", "plan.sampling");
            if (mode != "full" && mode != "random") {
                throw ConfigError("plan.sampling.mode must be \"full\" or \"random\"");
            }
            config.sampling.random = mode == "random";
            read_if_present(s, "count", config.sampling.count, "plan.sampling");
            read_if_present(s, "seed", config.sampling.seed, "plan.sampling");
        }
    }
    config.model.seed = config.seed;
    if (root.contains("model")) {
        config.model = parse_model(root["model"], config.model, "model");
    }
    if (root.contains("output")) {
        const auto& out = root["output"];
        check_keys(out, {"directory", "formats"}, "output");
        read_if_present(out, "directory", config.output_directory, "output");
        if (out.contains("formats")) {
            const auto formats = get_field<std::vector<std::string>>(out, "formats", "output");
            config.write_csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
            config.write_json = std::find(formats.begin(), formats.end(), "json") != formats.end();
            for (const auto& f : formats) {
                if (f != "csv" && f != "json") {
                    throw ConfigError("unknown output format '" + f + "'");
                }
            }
        }
    }
    return config;
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
}

} // namespace

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_file(path));
}

DatasetSpec resolve_dataset(const std::string& name_or_path, const std::string& format_preset) {
    const auto names = dataset_preset_names();
    if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
        const auto& preset = dataset_preset(name_or_path);
        return {preset.name, preset.default_path, preset.format};
    }
    const auto& preset = dataset_preset(format_preset);
    return {fs::path(name_or_path).stem().string(), name_or_path, preset.format};
}

// ---------------------------------------------------------------- commands

namespace {

struct Options {
    std::string config_path;
    std::vector<std::string> datasets;
    std::string format = "movielens";
    std::vector<std::string> models;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> folds;
    std::size_t jobs = 1;
    std::optional<std::string> out;
    // single-config hyperparameters
    std::optional<std::size_t> factors;
    std::optional<std::size_t> iterations;
    std::optional<double> learning_rate;
    std::optional<double> regularization;
    std::optional<double> bnmf_alpha;
    std::optional<double> bnmf_beta;
    std::optional<std::size_t> max_n;
    std::string view = "average";
    bool quiet = false;
};

RunConfig effective_config(const Options& o) {
    RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
    if (!o.datasets.empty()) {
        c.datasets.clear();
        for (const auto& d : o.datasets) {
            c.datasets.push_back(resolve_dataset(d, o.format));
        }
    }
    if (!o.models.empty()) {
        c.models.clear();
        for (const auto& m : o.models) {
            c.models.push_back(parse_model_kind(m));
        }
        c.model.kind = c.models.front();
    }
    if (o.seed) {
        c.seed = *o.seed;
        c.model.seed = *o.seed;
    }
    if (o.folds) c.folds = *o.folds;
    if (o.max_n) c.max_n = *o.max_n;
    if (o.out) c.output_directory = *o.out;
    if (o.factors) c.model.factors = *o.factors;
    if (o.iterations) c.model.iterations = *o.iterations;
    if (o.learning_rate) c.model.learning_rate = *o.learning_rate;
    if (o.regularization) c.model.regularization = *o.regularization;
    if (o.bnmf_alpha) c.model.bnmf_alpha = *o.bnmf_alpha;
    if (o.bnmf_beta) c.model.bnmf_beta = *o.bnmf_beta;
    return c;
}

const DatasetSpec& single_dataset(const RunConfig& c) {
    if (c.datasets.size() != 1) {
        throw ConfigError("this command needs exactly one dataset (--dataset)");
    }
    return c.datasets.front();
}

std::string score_range(const ScoreScale& s) {
    std::ostringstream out;
    out << format_number(s.min_score) << " to " << format_number(s.max_score);
    if (s.step != 1.0) {
        out << " step " << format_number(s.step);
    }
    return out.str();
}

int cmd_stats(const Options& o, std::ostream& out) {
    const RunConfig c = effective_config(o);
    if (c.datasets.empty()) {
        throw ConfigError("stats needs --dataset or a config with datasets");
    }
    char line[256];
    std::snprintf(line, sizeof(line), "%-16s %8s %8s %10s  %-18s %9s\n", "dataset", "users",
                  "items", "ratings", "scores", "sparsity%");
    out << line;
    for (const auto& spec : c.datasets) {
        const auto ds = load_ratings(spec.path, spec.format);
        const auto s = dataset_stats(ds);
        std::snprintf(line, sizeof(line), "%-16s %8zu %8zu %10zu  %-18s %9.2f\n",
                      spec.name.c_str(), s.num_users, s.num_items, s.num_ratings,
                      score_range(ds.scale()).c_str(), s.sparsity_percent);
        out << line;
    }
    return kOk;
}

int cmd_train(const Options& o, std::ostream& out) {
    const RunConfig c = effective_config(o);
    const auto& spec = single_dataset(c);
    if (!o.out) {
        throw ConfigError("train needs --out <model file>");
    }
    const auto ds = load_ratings(spec.path, spec.format);
    const auto start = std::chrono::steady_clock::now();
    const auto model = fit(c.model, ds);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    save_model_file(*model, *o.out);
    out << "model " << to_string(model->kind()) << " trained on " << spec.name << " ("
        << ds.num_ratings() << " ratings)\n";
    out << "training objective " << format_number(model->training_loss(ds)) << '\n';
    char buf[64];
    std::snprintf(buf, sizeof(buf), "wall time %.3f s\n", seconds);
    out << buf;
    out << "saved to " << *o.out << '\n';
    return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
    const RunConfig c = effective_config(o);
    const auto& spec = single_dataset(c);
    ExperimentPlan plan = c.plan_for(c.model.kind);
    // a single-point grid made of the chosen hyperparameters
    plan.grid.factors = {c.model.factors};
    plan.grid.iterations = {c.model.iterations};
    plan.grid.learning_rate = {c.model.learning_rate};
    plan.grid.regularization = {c.model.regularization};
    plan.grid.bnmf_alpha = {c.model.bnmf_alpha};
    plan.grid.bnmf_beta = {c.model.bnmf_beta};
    plan.sampling = {};
    plan.master_seed = c.model.seed;

    const auto data = ExperimentData::build(spec.name, load_ratings(spec.path, spec.format),
                                            plan.folds, plan.master_seed);
    RunOptions options;
    options.jobs = o.jobs;
    options.eval.threshold = data.dataset.scale().threshold;
    const auto result = run_experiment(plan, data, options);
    if (result.diverged_trials == result.trials.size()) {
        throw DivergenceError(result.trials.front().message);
    }
    const auto& m = result.configs.front().metrics;
    out << to_string(plan.model) << " on " << spec.name << ", " << plan.folds
        << "-fold cross-validation";
    if (result.diverged_trials > 0) {
        out << " (" << result.diverged_trials << " folds diverged)";
    }
    out << "\nMAE " << (m.mae ? format_number(*m.mae) : "-") << '\n';
    char buf[64];
    out << "N  ";
    for (ListMetric metric : kListMetrics) {
        std::snprintf(buf, sizeof(buf), " %10s", std::string(to_string(metric)).c_str());
        out << buf;
    }
    out << '\n';
    for (std::size_t n = 1; n <= plan.max_n; ++n) {
        std::snprintf(buf, sizeof(buf), "%-3zu", n);
        out << buf;
        for (ListMetric metric : kListMetrics) {
            const auto v = m.at(metric, n);
            if (v) {
                std::snprintf(buf, sizeof(buf), " %10.4f", *v);
            } else {
                std::snprintf(buf, sizeof(buf), " %10s", "-");
            }
            out << buf;
        }
        out << '\n';
    }
    return kOk;
}

int cmd_benchmark(const Options& o, std::ostream& out, std::ostream& err) {
    const RunConfig c = effective_config(o);
    if (c.datasets.empty()) {
        throw ConfigError("benchmark needs datasets in the config or via --dataset");
    }
    if (c.models.empty()) {
        throw ConfigError("benchmark needs at least one model");
    }
    for (ModelKind kind : c.models) {
        c.plan_for(kind).validate();
    }
    const fs::path dir = c.output_directory;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    }
    ProgressLog progress((dir / "progress.jsonl").string());

    std::vector<AggregateResult> results;
    std::vector<std::string> failures;
    for (const auto& spec : c.datasets) {
        const auto data = ExperimentData::build(spec.name, load_ratings(spec.path, spec.format),
                                                c.folds, c.seed);
        for (ModelKind kind : c.models) {
            const ExperimentPlan plan = c.plan_for(kind);
            const std::size_t total = selected_grid_indices(plan).size() * plan.folds;
            std::size_t done = 0;
            RunOptions options;
            options.jobs = o.jobs;
            options.progress = &progress;
            options.eval.threshold = spec.format.scale.threshold;
            if (!o.quiet) {
                options.on_trial = [&](const TrialResult& t) {
                    ++done;
                    char buf[160];
                    std::snprintf(buf, sizeof(buf), "[%s %s] %zu/%zu config %zu fold %zu %s\n",
                                  spec.name.c_str(), std::string(to_string(kind)).c_str(), done,
                                  total, t.config_index, t.fold,
                                  t.status == TrialStatus::Ok ? "ok" : "diverged");
                    err << buf << std::flush;
                };
            }
            try {
                results.push_back(run_experiment(plan, data, options));
            } catch (const std::exception& e) {
                AggregateResult failed;
                failed.dataset = spec.name;
                failed.plan = plan;
                failed.failure = e.what();
                results.push_back(std::move(failed));
                failures.push_back(spec.name + "/" + std::string(to_string(kind)) + ": " +
                                   e.what());
            }
        }
    }

    if (c.write_csv) {
        write_file(dir / "trials.csv", trials_csv(results));
        for (ReportView view : {ReportView::Best, ReportView::GridAverage}) {
            const std::string v(to_string(view));
            write_file(dir / ("mae_" + v + ".csv"), mae_table_csv(results, view));
            write_file(dir / ("mae_" + v + ".md"), mae_table_markdown(results, view));
            for (const auto& spec : c.datasets) {
                const fs::path series_dir = dir / "series" / spec.name;
                fs::create_directories(series_dir, ec);
                if (ec) {
                    throw IoError("cannot create '" + series_dir.string() + "'");
                }
                for (ListMetric metric : kListMetrics) {
                    write_file(series_dir / (std::string(to_string(metric)) + "_" + v + ".csv"),
                               series_csv(results, spec.name, metric, view));
                }
            }
        }
    }
    if (c.write_json) {
        write_file(dir / "results.json", results_json(results));
    }

    out << "best-config MAE\n" << mae_table_markdown(results, ReportView::Best);
    out << "grid-average MAE\n" << mae_table_markdown(results, ReportView::GridAverage);
    for (const auto& r : results) {
        if (r.diverged_trials > 0) {
            out << r.dataset << '/' << to_string(r.model()) << ": " << r.diverged_trials << " of "
                << r.trials.size() << " trials diverged\n";
        }
    }
    out << "results written to " << dir.string() << '\n';
    if (!failures.empty()) {
        err << "failed experiments:\n";
        for (const auto& f : failures) {
            err << "  " << f << '\n';
        }
        return kPartialFailure;
    }
    return kOk;
}

std::vector<std::string> read_csv_lines(const fs::path& path) {
    std::istringstream in(read_file(path.string()));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        lines.push_back(line);
    }
    return lines;
}

int cmd_export(const Options& o, std::ostream& out) {
    if (!o.out) {
        throw ConfigError("export-plot-data needs --out <benchmark result directory>");
    }
    if (o.view != "average" && o.view != "best") {
        throw ConfigError("--view must be 'average' or 'best'");
    }
    const fs::path series_root = fs::path(*o.out) / "series";
    if (!fs::is_directory(series_root)) {
        throw IoError("no benchmark series under '" + series_root.string() + "'");
    }
    std::vector<std::string> datasets;
    for (const auto& entry : fs::directory_iterator(series_root)) {
        if (entry.is_directory()) {
            datasets.push_back(entry.path().filename().string());
        }
    }
    if (datasets.empty()) {
        throw IoError("no dataset series under '" + series_root.string() + "'");
    }
    std::sort(datasets.begin(), datasets.end());

    std::ostringstream csv;
    csv << "dataset,model,metric,N,value\n";
    for (const auto& dataset : datasets) {
        for (ListMetric metric : kListMetrics) {
            const std::string name = std::string(to_string(metric));
            const auto lines =
                read_csv_lines(series_root / dataset / (name + "_" + o.view + ".csv"));
            if (lines.empty()) {
                throw FormatError("empty series file for " + dataset + "/" + name);
            }
            const auto header = split_fields(lines.front(), ",");
            for (std::size_t col = 1; col < header.size(); ++col) {
                for (std::size_t row = 1; row < lines.size(); ++row) {
                    const auto fields = split_fields(lines[row], ",");
                    if (fields.size() != header.size()) {
                        throw FormatError("ragged row in series file for " + dataset + "/" + name);
                    }
                    csv << dataset << ',' << header[col] << ',' << name << ',' << fields[0] << ','
                        << fields[col] << '\n';
                }
            }
        }
    }
    out << csv.str();
    return kOk;
}

int classify(const std::exception& e) {
    if (dynamic_cast<const DivergenceError*>(&e)) return kDiverged;
    if (dynamic_cast<const ConfigError*>(&e)) return kUsageError;
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e)) return kIoError;
    return kInternalError;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Matrix factorization collaborative filtering toolkit"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", o.config_path, "JSON run config (schema_version 1)");
        cmd->add_option("--dataset", o.datasets, "dataset preset name or ratings file path");
        cmd->add_option("--format", o.format, "preset whose file format applies to a path dataset");
    };
    auto add_hyper = [&](CLI::App* cmd) {
        cmd->add_option("--model", o.models, "PMF, BiasedMF, NMF, BeMF, BNMF or URP");
        cmd->add_option("--seed", o.seed, "master seed");
        cmd->add_option("--factors,-k", o.factors, "latent factors");
        cmd->add_option("--iterations", o.iterations, "training sweeps");
        cmd->add_option("--lr", o.learning_rate, "learning rate (PMF, BiasedMF, BeMF)");
        cmd->add_option("--reg", o.regularization, "regularization (PMF, BiasedMF, BeMF)");
        cmd->add_option("--alpha", o.bnmf_alpha, "BNMF alpha prior, in (0, 1)");
        cmd->add_option("--beta", o.bnmf_beta, "BNMF beta prior, > 0");
    };

    auto* stats = app.add_subcommand("stats", "print dataset statistics");
    add_common(stats);

    auto* train = app.add_subcommand("train", "train one model on a whole dataset and save it");
    add_common(train);
    add_hyper(train);
    train->add_option("--out", o.out, "model file to write")->required();

    auto* evaluate_cmd =
        app.add_subcommand("evaluate", "cross-validate one hyperparameter setting");
    add_common(evaluate_cmd);
    add_hyper(evaluate_cmd);
    evaluate_cmd->add_option("--folds", o.folds, "cross-validation folds");
    evaluate_cmd->add_option("--max-n", o.max_n, "largest recommendation list size");
    evaluate_cmd->add_option("--jobs", o.jobs, "concurrent trials")->check(CLI::PositiveNumber);

    auto* benchmark = app.add_subcommand("benchmark", "run hyperparameter grids over datasets");
    add_common(benchmark);
    benchmark->add_option("--model", o.models, "restrict to these models");
    benchmark->add_option("--seed", o.seed, "master seed");
    benchmark->add_option("--folds", o.folds, "cross-validation folds");
    benchmark->add_option("--jobs", o.jobs, "concurrent trials")->check(CLI::PositiveNumber);
    benchmark->add_option("--out", o.out, "output directory");
    benchmark->add_flag("--quiet", o.quiet, "no per-trial progress on stderr");

    auto* export_cmd =
        app.add_subcommand("export-plot-data", "long-format CSV of the benchmark series");
    export_cmd->add_option("--out", o.out, "benchmark output directory")->required();
    export_cmd->add_option("--view", o.view, "average or best");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*stats) return cmd_stats(o, out);
        if (*train) return cmd_train(o, out);
        if (*evaluate_cmd) return cmd_evaluate(o, out);
        if (*benchmark) return cmd_benchmark(o, out, err);
        if (*export_cmd) return cmd_export(o, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return classify(e);
    }
    return kUsageError;
}

} // namespace mfcf::cli
