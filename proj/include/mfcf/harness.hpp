#pragma once

#include "mfcf/data.hpp"
#include "mfcf/metrics.hpp"
#include "mfcf/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mfcf {

/// Candidate values per hyperparameter. Dimensions a model does not use are
/// left out of its product.
struct Grid {
    std::vector<std::size_t> factors{4, 8, 12};
    std::vector<std::size_t> iterations{25, 50, 75, 100};
    std::vector<double> learning_rate{0.001, 0.01, 0.1, 1.0};
    std::vector<double> regularization{0.001, 0.01, 0.1, 1.0};
    std::vector<double> bnmf_alpha{0.2, 0.4, 0.6, 0.8};
    std::vector<double> bnmf_beta{5.0, 15.0, 25.0};
};

/// Whether a grid dimension takes part in the product for `kind`.
enum class GridDimension { Factors, Iterations, LearningRate, Regularization, BnmfAlpha, BnmfBeta };
bool uses_dimension(ModelKind kind, GridDimension dim);

struct Sampling {
    bool random = false;  // false: the full grid
    std::size_t count = 0;
    std::uint64_t seed = 0;
};

struct ExperimentPlan {
    ModelKind model = ModelKind::PMF;
    Grid grid;
    std::size_t folds = 4;
    std::uint64_t master_seed = 42;
    std::size_t max_n = 10;
    Sampling sampling;

    /// Throws ConfigError for empty used dimensions, folds < 2, max_n == 0 or
    /// a zero sample count.
    void validate() const;
};

/// Cartesian product in the order factors, iterations, learning_rate,
/// regularization, bnmf_alpha, bnmf_beta (first dimension varies slowest).
/// Every config carries master_seed.
std::vector<ModelConfig> expand_full_grid(const ExperimentPlan& plan);

/// Grid positions the plan runs: all of them, or `count` positions drawn
/// with the sampling seed and returned in ascending order.
std::vector<std::size_t> selected_grid_indices(const ExperimentPlan& plan);

/// The configs at selected_grid_indices(plan), in that order.
std::vector<ModelConfig> expand_grid(const ExperimentPlan& plan);

/// Seed handed to fit() for grid position `config_index` on fold `fold`.
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t config_index, std::size_t fold);

/// Folds plus the per-fold pieces every trial needs, built once per dataset
/// and shared read-only by all models.
struct ExperimentData {
    std::string name;
    RatingDataset dataset;
    std::vector<FoldSplit> folds;
    std::vector<RatingDataset> tests;
    std::vector<ItemDistance> distances;

    static ExperimentData build(std::string name, RatingDataset dataset, std::size_t folds,
                                std::uint64_t master_seed);
};

enum class TrialStatus { Ok, Diverged };

struct TrialResult {
    std::size_t config_index = 0;  // position in the full grid
    std::size_t fold = 0;
    ModelConfig config;  // with the trial seed
    TrialStatus status = TrialStatus::Ok;
    std::optional<MetricReport> report;  // absent when diverged
    std::string message;
    double wall_seconds = 0.0;  // never written to the deterministic outputs
};

/// Fold or grid average of MetricReports: each entry is the mean of the
/// values present, absent when none is.
struct AveragedMetrics {
    std::optional<double> mae;
    std::vector<std::vector<std::optional<double>>> series;  // [metric][n - 1]

    std::optional<double> at(ListMetric metric, std::size_t n) const {
        return series[static_cast<std::size_t>(metric)][n - 1];
    }
    friend bool operator==(const AveragedMetrics&, const AveragedMetrics&) = default;
};

struct ConfigResult {
    std::size_t config_index = 0;  // position in the full grid
    ModelConfig config;  // with master_seed
    std::size_t completed = 0;
    std::size_t diverged = 0;
    AveragedMetrics metrics;
};

struct AggregateResult {
    std::string dataset;
    ExperimentPlan plan;
    /// Set when the experiment stopped on an error other than divergence.
    std::optional<std::string> failure;
    std::vector<TrialResult> trials;  // config-major, fold-minor
    std::vector<ConfigResult> configs;
    /// Mean of the per-config fold averages.
    AveragedMetrics grid_average;
    /// Position in `configs` of the lowest fold-averaged MAE (first on ties).
    std::optional<std::size_t> best;
    std::size_t diverged_trials = 0;

    ModelKind model() const { return plan.model; }
    const ConfigResult* best_config() const { return best ? &configs[*best] : nullptr; }
};

/// Completed trials persisted as JSON lines so an interrupted run picks up
/// where it stopped. Lines are matched on dataset, model, grid position, fold
/// and the full config.
class ProgressLog {
public:
    explicit ProgressLog(std::string path);

    std::optional<TrialResult> find(const std::string& dataset, ModelKind model,
                                    std::size_t config_index, std::size_t fold,
                                    const ModelConfig& config) const;
    void append(const std::string& dataset, ModelKind model, const TrialResult& trial);

private:
    std::string path_;
    std::unordered_map<std::string, std::string> entries_;  // key -> JSON line
};

struct RunOptions {
    std::size_t jobs = 1;
    EvalOptions eval;  // max_n is taken from the plan
    ProgressLog* progress = nullptr;
    /// Called after each finished trial in completion order, one call at a
    /// time.
    std::function<void(const TrialResult&)> on_trial;
};

/// Runs every config on every fold. Divergent trials are counted and left
/// out of all averages; any other exception propagates.
AggregateResult run_experiment(const ExperimentPlan& plan, const ExperimentData& data,
                               const RunOptions& options);

/// Recomputes configs, grid_average, best and diverged_trials from trials.
void aggregate(AggregateResult& result);

// Report files. All numbers are written in shortest round-trip form and rows
// follow the input order, so equal inputs give byte-identical files.

enum class ReportView { GridAverage, Best };

/// One row per dataset, one column per model, plus the best model's name.
std::string mae_table_csv(const std::vector<AggregateResult>& results, ReportView view);
/// Same table as Markdown with the best cell of each row in bold.
std::string mae_table_markdown(const std::vector<AggregateResult>& results, ReportView view);
/// Rows N = 1..max_n, one column per model, for one dataset and metric.
std::string series_csv(const std::vector<AggregateResult>& results, const std::string& dataset,
                       ListMetric metric, ReportView view);
/// One row per trial with MAE and the list metrics at N = max_n.
std::string trials_csv(const std::vector<AggregateResult>& results);
/// Full structured dump (schema_version 1).
std::string results_json(const std::vector<AggregateResult>& results);

std::string format_number(double v);
std::string_view to_string(ReportView view);

} // namespace mfcf
