#include "mfcf/harness.hpp"

#include "mfcf/error.hpp"
#include "mfcf/random.hpp"
#include "model_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace mfcf {

using nlohmann::ordered_json;

bool uses_dimension(ModelKind kind, GridDimension dim) {
    switch (dim) {
    case GridDimension::Factors:
    case GridDimension::Iterations:
        return true;
    case GridDimension::LearningRate:
    case GridDimension::Regularization:
        return kind == ModelKind::PMF || kind == ModelKind::BiasedMF || kind == ModelKind::BeMF;
    case GridDimension::BnmfAlpha:
    case GridDimension::BnmfBeta:
        return kind == ModelKind::BNMF;
    }
    return false;
}

void ExperimentPlan::validate() const {
    auto require = [&](GridDimension dim, bool empty, const char* name) {
        if (uses_dimension(model, dim) && empty) {
            throw ConfigError(std::string("grid dimension '") + name + "' is empty");
        }
    };
    require(GridDimension::Factors, grid.factors.empty(), "factors");
    require(GridDimension::Iterations, grid.iterations.empty(), "iterations");
    require(GridDimension::LearningRate, grid.learning_rate.empty(), "learning_rate");
    require(GridDimension::Regularization, grid.regularization.empty(), "regularization");
    require(GridDimension::BnmfAlpha, grid.bnmf_alpha.empty(), "bnmf_alpha");
    require(GridDimension::BnmfBeta, grid.bnmf_beta.empty(), "bnmf_beta");
    if (folds < 2) {
        throw ConfigError("folds must be at least 2");
    }
    if (max_n == 0) {
        throw ConfigError("max_n must be at least 1");
    }
    if (sampling.random && sampling.count == 0) {
        throw ConfigError("random sampling needs a positive count");
    }
}

std::vector<ModelConfig> expand_full_grid(const ExperimentPlan& plan) {
    plan.validate();
    const ModelKind kind = plan.model;
    ModelConfig base;
    base.kind = kind;
    base.seed = plan.master_seed;

    // A dimension the model ignores contributes its default value once.
    auto values = [&](GridDimension dim, const auto& grid_values, auto fallback) {
        using T = typename std::decay_t<decltype(grid_values)>::value_type;
        return uses_dimension(kind, dim) ? grid_values : std::vector<T>{static_cast<T>(fallback)};
    };
    const auto ks = values(GridDimension::Factors, plan.grid.factors, base.factors);
    const auto its = values(GridDimension::Iterations, plan.grid.iterations, base.iterations);
    const auto lrs = values(GridDimension::LearningRate, plan.grid.learning_rate, base.learning_rate);
    const auto regs =
        values(GridDimension::Regularization, plan.grid.regularization, base.regularization);
    const auto alphas = values(GridDimension::BnmfAlpha, plan.grid.bnmf_alpha, base.bnmf_alpha);
    const auto betas = values(GridDimension::BnmfBeta, plan.grid.bnmf_beta, base.bnmf_beta);

    std::vector<ModelConfig> configs;
    for (auto k : ks)
        for (auto it : its)
            for (double lr : lrs)
                for (double reg : regs)
                    for (double a : alphas)
                        for (double b : betas) {
                            ModelConfig c = base;
                            c.factors = k;
                            c.iterations = it;
                            c.learning_rate = lr;
                            c.regularization = reg;
                            c.bnmf_alpha = a;
                            c.bnmf_beta = b;
                            configs.push_back(c);
                        }
    return configs;
}

std::vector<std::size_t> selected_grid_indices(const ExperimentPlan& plan) {
    const std::size_t total = expand_full_grid(plan).size();
    std::vector<std::size_t> indices(total);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (!plan.sampling.random || plan.sampling.count >= total) {
        return indices;
    }
    Rng rng(plan.sampling.seed);
    for (std::size_t j = 0; j < plan.sampling.count; ++j) {
        const std::size_t pick = j + static_cast<std::size_t>(rng.below(total - j));
        std::swap(indices[j], indices[pick]);
    }
    indices.resize(plan.sampling.count);
    std::sort(indices.begin(), indices.end());
    return indices;
}

std::vector<ModelConfig> expand_grid(const ExperimentPlan& plan) {
    const auto all = expand_full_grid(plan);
    std::vector<ModelConfig> selected;
    for (std::size_t i : selected_grid_indices(plan)) {
        selected.push_back(all[i]);
    }
    return selected;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t config_index, std::size_t fold) {
    return derive_seed(master_seed, config_index, fold);
}

ExperimentData ExperimentData::build(std::string name, RatingDataset dataset, std::size_t folds,
                                     std::uint64_t master_seed) {
    ExperimentData data;
    data.name = std::move(name);
    data.folds = kfold_split(dataset, folds, master_seed);
    for (const auto& f : data.folds) {
        data.tests.push_back(f.train.subset(f.test));
        data.distances.emplace_back(f.train);
    }
    data.dataset = std::move(dataset);
    return data;
}

// ---------------------------------------------------------------- JSON

namespace {

ordered_json optional_number(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<double> read_optional(const ordered_json& j) {
    if (j.is_null()) {
        return std::nullopt;
    }
    return j.get<double>();
}

ordered_json config_json(const ModelConfig& c) {
    ordered_json j;
    j["model"] = std::string(to_string(c.kind));
    j["factors"] = c.factors;
    j["iterations"] = c.iterations;
    j["learning_rate"] = c.learning_rate;
    j["regularization"] = c.regularization;
    j["bnmf_alpha"] = c.bnmf_alpha;
    j["bnmf_beta"] = c.bnmf_beta;
    j["seed"] = c.seed;
    return j;
}

ordered_json report_json(const MetricReport& r) {
    ordered_json j;
    j["mae"] = optional_number(r.mae);
    for (ListMetric m : kListMetrics) {
        ordered_json values = ordered_json::array();
        ordered_json users = ordered_json::array();
        ordered_json skipped = ordered_json::array();
        for (const auto& v : r.series[static_cast<std::size_t>(m)]) {
            values.push_back(optional_number(v.value));
            users.push_back(v.users);
            skipped.push_back(v.skipped);
        }
        j[std::string(to_string(m))] = {{"values", values}, {"users", users}, {"skipped", skipped}};
    }
    return j;
}

MetricReport report_from_json(const ordered_json& j) {
    MetricReport r;
    r.mae = read_optional(j.at("mae"));
    for (ListMetric m : kListMetrics) {
        const auto& entry = j.at(std::string(to_string(m)));
        const auto& values = entry.at("values");
        std::vector<MetricValue> series(values.size());
        for (std::size_t n = 0; n < values.size(); ++n) {
            series[n].value = read_optional(values[n]);
            series[n].users = entry.at("users")[n].get<std::size_t>();
            series[n].skipped = entry.at("skipped")[n].get<std::size_t>();
        }
        r.series.push_back(std::move(series));
    }
    return r;
}

ordered_json averaged_json(const AveragedMetrics& a) {
    ordered_json j;
    j["mae"] = optional_number(a.mae);
    for (ListMetric m : kListMetrics) {
        ordered_json values = ordered_json::array();
        for (const auto& v : a.series[static_cast<std::size_t>(m)]) {
            values.push_back(optional_number(v));
        }
        j[std::string(to_string(m))] = values;
    }
    return j;
}

std::string progress_key(const std::string& dataset, ModelKind model, std::size_t config_index,
                         std::size_t fold, const ModelConfig& config) {
    return ordered_json::array({dataset, std::string(to_string(model)), config_index, fold,
                                config_json(config)})
        .dump();
}

} // namespace

ProgressLog::ProgressLog(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
        // a torn last line from an interrupted run is ignored
        const auto j = ordered_json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("key")) {
            continue;
        }
        entries_[j["key"].dump()] = line;
    }
}

std::optional<TrialResult> ProgressLog::find(const std::string& dataset, ModelKind model,
                                             std::size_t config_index, std::size_t fold,
                                             const ModelConfig& config) const {
    const auto it = entries_.find(progress_key(dataset, model, config_index, fold, config));
    if (it == entries_.end()) {
        return std::nullopt;
    }
    const auto j = ordered_json::parse(it->second);
    TrialResult t;
    t.config_index = config_index;
    t.fold = fold;
    t.config = config;
    t.status = j.at("status") == "ok" ? TrialStatus::Ok : TrialStatus::Diverged;
    if (!j.at("report").is_null()) {
        t.report = report_from_json(j.at("report"));
    }
    t.message = j.at("message").get<std::string>();
    t.wall_seconds = j.at("wall_seconds").get<double>();
    return t;
}

void ProgressLog::append(const std::string& dataset, ModelKind model, const TrialResult& trial) {
    const std::string key =
        progress_key(dataset, model, trial.config_index, trial.fold, trial.config);
    ordered_json j;
    j["key"] = ordered_json::parse(key);
    j["status"] = trial.status == TrialStatus::Ok ? "ok" : "diverged";
    j["message"] = trial.message;
    j["wall_seconds"] = trial.wall_seconds;
    j["report"] = trial.report ? report_json(*trial.report) : ordered_json(nullptr);
    const std::string line = j.dump();
    std::ofstream out(path_, std::ios::app);
    out << line << '\n';
    out.flush();
    if (!out) {
        throw IoError("cannot append to progress log " + path_);
    }
    entries_[ordered_json::parse(key).dump()] = line;
}

// ---------------------------------------------------------------- running

namespace {

TrialResult run_trial(const ExperimentData& data, const ModelConfig& config,
                      std::size_t config_index, std::size_t fold, const EvalOptions& eval) {
    TrialResult t;
    t.config_index = config_index;
    t.fold = fold;
    t.config = config;
    const auto start = std::chrono::steady_clock::now();
    try {
        const auto model = fit(config, data.folds[fold].train);
        t.report = evaluate(*model, data.folds[fold].train, data.tests[fold],
                            data.distances[fold], eval);
    } catch (const DivergenceError& e) {
        t.status = TrialStatus::Diverged;
        t.message = e.what();
    }
    t.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return t;
}

struct Mean {
    double sum = 0.0;
    std::size_t count = 0;

    void add(const std::optional<double>& v) {
        if (v) {
            sum += *v;
            ++count;
        }
    }
    std::optional<double> get() const {
        return count ? std::optional<double>(sum / static_cast<double>(count)) : std::nullopt;
    }
};

AveragedMetrics average(const std::vector<const AveragedMetrics*>& parts, std::size_t max_n) {
    AveragedMetrics out;
    Mean mae;
    for (const auto* p : parts) {
        mae.add(p->mae);
    }
    out.mae = mae.get();
    out.series.assign(std::size(kListMetrics), std::vector<std::optional<double>>(max_n));
    for (std::size_t m = 0; m < out.series.size(); ++m) {
        for (std::size_t n = 0; n < max_n; ++n) {
            Mean mean;
            for (const auto* p : parts) {
                mean.add(p->series[m][n]);
            }
            out.series[m][n] = mean.get();
        }
    }
    return out;
}

AveragedMetrics from_report(const MetricReport& r) {
    AveragedMetrics a;
    a.mae = r.mae;
    for (const auto& s : r.series) {
        std::vector<std::optional<double>> values;
        for (const auto& v : s) {
            values.push_back(v.value);
        }
        a.series.push_back(std::move(values));
    }
    return a;
}

} // namespace

void aggregate(AggregateResult& result) {
    const std::size_t max_n = result.plan.max_n;
    result.configs.clear();
    result.diverged_trials = 0;
    result.best.reset();

    std::size_t begin = 0;
    while (begin < result.trials.size()) {
        std::size_t end = begin;
        while (end < result.trials.size() &&
               result.trials[end].config_index == result.trials[begin].config_index) {
            ++end;
        }
        ConfigResult c;
        c.config_index = result.trials[begin].config_index;
        c.config = result.trials[begin].config;
        c.config.seed = result.plan.master_seed;
        std::vector<AveragedMetrics> folds;
        for (std::size_t t = begin; t < end; ++t) {
            const auto& trial = result.trials[t];
            if (trial.status == TrialStatus::Diverged || !trial.report) {
                ++c.diverged;
                continue;
            }
            ++c.completed;
            folds.push_back(from_report(*trial.report));
        }
        std::vector<const AveragedMetrics*> parts;
        for (const auto& f : folds) {
            parts.push_back(&f);
        }
        c.metrics = average(parts, max_n);
        result.diverged_trials += c.diverged;
        result.configs.push_back(std::move(c));
        begin = end;
    }

    std::vector<const AveragedMetrics*> parts;
    for (std::size_t i = 0; i < result.configs.size(); ++i) {
        const auto& c = result.configs[i];
        if (c.completed == 0) {
            continue;
        }
        parts.push_back(&c.metrics);
        if (c.metrics.mae &&
            (!result.best || *c.metrics.mae < *result.configs[*result.best].metrics.mae)) {
            result.best = i;
        }
    }
    result.grid_average = average(parts, max_n);
}

AggregateResult run_experiment(const ExperimentPlan& plan, const ExperimentData& data,
                               const RunOptions& options) {
    plan.validate();
    if (data.folds.size() != plan.folds) {
        throw ConfigError("experiment data was split into a different number of folds");
    }
    const auto all = expand_full_grid(plan);
    const auto selected = selected_grid_indices(plan);

    struct Task {
        std::size_t config_index;
        std::size_t fold;
        ModelConfig config;
    };
    std::vector<Task> tasks;
    for (std::size_t ci : selected) {
        for (std::size_t f = 0; f < plan.folds; ++f) {
            ModelConfig c = all[ci];
            c.seed = trial_seed(plan.master_seed, ci, f);
            tasks.push_back({ci, f, c});
        }
    }

    EvalOptions eval = options.eval;
    eval.max_n = plan.max_n;

    std::vector<std::optional<TrialResult>> slots(tasks.size());
    std::mutex mutex;  // guards the progress log and the callback
    std::exception_ptr failure;
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) {
                return;
            }
            const Task& task = tasks[i];
            try {
                std::optional<TrialResult> done;
                if (options.progress) {
                    std::lock_guard lock(mutex);
                    done = options.progress->find(data.name, plan.model, task.config_index,
                                                  task.fold, task.config);
                }
                const bool resumed = done.has_value();
                if (!done) {
                    done = run_trial(data, task.config, task.config_index, task.fold, eval);
                }
                std::lock_guard lock(mutex);
                if (options.progress && !resumed) {
                    options.progress->append(data.name, plan.model, *done);
                }
                if (options.on_trial) {
                    options.on_trial(*done);
                }
                slots[i] = std::move(done);
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(tasks.size());
                return;
            }
        }
    };

    const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, tasks.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t j = 0; j < jobs; ++j) {
            threads.emplace_back(worker);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    AggregateResult result;
    result.dataset = data.name;
    result.plan = plan;
    for (auto& s : slots) {
        result.trials.push_back(std::move(*s));
    }
    aggregate(result);
    return result;
}

// ---------------------------------------------------------------- reports

std::string format_number(double v) { return io::format_double(v); }

std::string_view to_string(ReportView view) {
    return view == ReportView::Best ? "best" : "average";
}

namespace {

std::optional<double> view_mae(const AggregateResult& r, ReportView view) {
    if (r.failure) {
        return std::nullopt;
    }
    if (view == ReportView::Best) {
        const auto* best = r.best_config();
        return best ? best->metrics.mae : std::nullopt;
    }
    return r.grid_average.mae;
}

const AveragedMetrics* view_metrics(const AggregateResult& r, ReportView view) {
    if (r.failure) {
        return nullptr;
    }
    if (view == ReportView::Best) {
        const auto* best = r.best_config();
        return best ? &best->metrics : nullptr;
    }
    return r.configs.empty() ? nullptr : &r.grid_average;
}

std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

template <class T, class Key>
std::vector<T> unique_in_order(const std::vector<AggregateResult>& results, Key key) {
    std::vector<T> out;
    for (const auto& r : results) {
        const T k = key(r);
        if (std::find(out.begin(), out.end(), k) == out.end()) {
            out.push_back(k);
        }
    }
    return out;
}

struct MaeTable {
    std::vector<std::string> datasets;
    std::vector<ModelKind> models;
    std::vector<std::vector<std::optional<double>>> values;  // [dataset][model]
    std::vector<std::optional<std::size_t>> best;            // per dataset

    MaeTable(const std::vector<AggregateResult>& results, ReportView view) {
        datasets = unique_in_order<std::string>(results, [](const auto& r) { return r.dataset; });
        models = unique_in_order<ModelKind>(results, [](const auto& r) { return r.model(); });
        values.assign(datasets.size(), std::vector<std::optional<double>>(models.size()));
        for (const auto& r : results) {
            const auto d = std::find(datasets.begin(), datasets.end(), r.dataset) - datasets.begin();
            const auto m = std::find(models.begin(), models.end(), r.model()) - models.begin();
            values[d][m] = view_mae(r, view);
        }
        for (const auto& row : values) {
            std::optional<std::size_t> b;
            for (std::size_t m = 0; m < row.size(); ++m) {
                if (row[m] && (!b || *row[m] < *row[*b])) {
                    b = m;
                }
            }
            best.push_back(b);
        }
    }
};

} // namespace

std::string mae_table_csv(const std::vector<AggregateResult>& results, ReportView view) {
    const MaeTable t(results, view);
    std::ostringstream out;
    out << "dataset";
    for (ModelKind m : t.models) {
        out << ',' << to_string(m);
    }
    out << ",best\n";
    for (std::size_t d = 0; d < t.datasets.size(); ++d) {
        out << t.datasets[d];
        for (const auto& v : t.values[d]) {
            out << ',' << cell(v);
        }
        out << ',' << (t.best[d] ? to_string(t.models[*t.best[d]]) : "") << '\n';
    }
    return out.str();
}

std::string mae_table_markdown(const std::vector<AggregateResult>& results, ReportView view) {
    const MaeTable t(results, view);
    std::ostringstream out;
    out << "| Dataset |";
    for (ModelKind m : t.models) {
        out << ' ' << to_string(m) << " |";
    }
    out << "\n|---|";
    for (std::size_t m = 0; m < t.models.size(); ++m) {
        out << "---|";
    }
    out << '\n';
    for (std::size_t d = 0; d < t.datasets.size(); ++d) {
        out << "| " << t.datasets[d] << " |";
        for (std::size_t m = 0; m < t.models.size(); ++m) {
            const auto& v = t.values[d][m];
            char buf[32] = "-";
            if (v) {
                std::snprintf(buf, sizeof(buf), "%.4f", *v);
            }
            const bool bold = t.best[d] && *t.best[d] == m;
            out << ' ' << (bold ? "**" : "") << buf << (bold ? "**" : "") << " |";
        }
        out << '\n';
    }
    return out.str();
}

std::string series_csv(const std::vector<AggregateResult>& results, const std::string& dataset,
                       ListMetric metric, ReportView view) {
    std::vector<const AggregateResult*> rows;
    std::size_t max_n = 0;
    for (const auto& r : results) {
        if (r.dataset == dataset) {
            rows.push_back(&r);
            max_n = std::max(max_n, r.plan.max_n);
        }
    }
    std::ostringstream out;
    out << "N";
    for (const auto* r : rows) {
        out << ',' << to_string(r->model());
    }
    out << '\n';
    for (std::size_t n = 1; n <= max_n; ++n) {
        out << n;
        for (const auto* r : rows) {
            const auto* m = view_metrics(*r, view);
            out << ',' << (m && n <= r->plan.max_n ? cell(m->at(metric, n)) : "");
        }
        out << '\n';
    }
    return out.str();
}

std::string trials_csv(const std::vector<AggregateResult>& results) {
    std::ostringstream out;
    out << "dataset,model,config_index,fold,factors,iterations,learning_rate,regularization,"
           "bnmf_alpha,bnmf_beta,seed,status,mae,precision,recall,ndcg,novelty,diversity,n\n";
    for (const auto& r : results) {
        for (const auto& t : r.trials) {
            const auto& c = t.config;
            out << r.dataset << ',' << to_string(r.model()) << ',' << t.config_index << ','
                << t.fold << ',' << c.factors << ',' << c.iterations << ','
                << format_number(c.learning_rate) << ',' << format_number(c.regularization) << ','
                << format_number(c.bnmf_alpha) << ',' << format_number(c.bnmf_beta) << ','
                << c.seed << ',' << (t.status == TrialStatus::Ok ? "ok" : "diverged") << ',';
            if (t.report) {
                out << cell(t.report->mae);
                for (ListMetric m : kListMetrics) {
                    out << ',' << cell(t.report->at(m, r.plan.max_n).value);
                }
            } else {
                out << ",,,,,";
            }
            out << ',' << r.plan.max_n << '\n';
        }
    }
    return out.str();
}

std::string results_json(const std::vector<AggregateResult>& results) {
    ordered_json root;
    root["schema_version"] = 1;
    ordered_json experiments = ordered_json::array();
    for (const auto& r : results) {
        ordered_json e;
        e["dataset"] = r.dataset;
        e["model"] = std::string(to_string(r.model()));
        e["status"] = r.failure ? "failed" : "ok";
        e["error"] = r.failure ? ordered_json(*r.failure) : ordered_json(nullptr);
        e["folds"] = r.plan.folds;
        e["master_seed"] = r.plan.master_seed;
        e["max_n"] = r.plan.max_n;
        e["sampling"] = r.plan.sampling.random
                            ? ordered_json{{"mode", "random"},
                                           {"count", r.plan.sampling.count},
                                           {"seed", r.plan.sampling.seed}}
                            : ordered_json{{"mode", "full"}};
        e["trials"] = r.trials.size();
        e["diverged_trials"] = r.diverged_trials;
        e["best_config_index"] =
            r.best_config() ? ordered_json(r.best_config()->config_index) : ordered_json(nullptr);
        e["grid_average"] = r.configs.empty() ? ordered_json(nullptr) : averaged_json(r.grid_average);
        ordered_json configs = ordered_json::array();
        std::size_t t = 0;
        for (const auto& c : r.configs) {
            ordered_json cj;
            cj["config_index"] = c.config_index;
            cj["config"] = config_json(c.config);
            cj["completed"] = c.completed;
            cj["diverged"] = c.diverged;
            cj["metrics"] = averaged_json(c.metrics);
            ordered_json folds = ordered_json::array();
            for (; t < r.trials.size() && r.trials[t].config_index == c.config_index; ++t) {
                const auto& trial = r.trials[t];
                ordered_json fj;
                fj["fold"] = trial.fold;
                fj["seed"] = trial.config.seed;
                fj["status"] = trial.status == TrialStatus::Ok ? "ok" : "diverged";
                fj["message"] = trial.message;
                fj["metrics"] = trial.report ? report_json(*trial.report) : ordered_json(nullptr);
                folds.push_back(std::move(fj));
            }
            cj["folds"] = std::move(folds);
            configs.push_back(std::move(cj));
        }
        e["configs"] = std::move(configs);
        experiments.push_back(std::move(e));
    }
    root["experiments"] = std::move(experiments);
    return root.dump(1) + "\n";
}

} // namespace mfcf
