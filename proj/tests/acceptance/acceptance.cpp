// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//
//   acceptance [--only 1,3,4] [--work DIR]
//
// Run from the repository root so dataset presets and configs/ resolve.
// Exit status: 0 when every gating criterion passed or was skipped, 1 when
// one failed, 77 when every selected criterion was skipped.

#include "mfcf/bemf.hpp"
#include "mfcf/bnmf.hpp"
#include "mfcf/cli.hpp"
#include "mfcf/error.hpp"
#include "mfcf/factor_models.hpp"
#include "mfcf/harness.hpp"
#include "mfcf/mathfns.hpp"
#include "mfcf/metrics.hpp"
#include "mfcf/urp.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace mfcf;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct Verdict {
    Outcome outcome;
    std::string detail;
    bool gating = true;
};

Verdict fail(std::string d) { return {Outcome::Fail, std::move(d)}; }
Verdict skip(std::string d) { return {Outcome::Skip, std::move(d)}; }
Verdict check(bool ok, std::string d) { return {ok ? Outcome::Pass : Outcome::Fail, std::move(d)}; }

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2e", v);
    return buf;
}

// ---------------------------------------------------------------- shared benchmark runs

struct BenchmarkRun {
    std::vector<AggregateResult> results;
    double seconds = 0.0;
    std::size_t resumed = 0;  // trials already in the progress log
    std::size_t trials = 0;
};

/// Runs (or resumes) every model of a reduced config on its single dataset,
/// writing the usual report files to `work`.
std::optional<BenchmarkRun> run_reduced(const std::string& config_path, const fs::path& work,
                                        std::string& why_not) {
    const cli::RunConfig config = cli::load_run_config(config_path);
    const cli::DatasetSpec& spec = config.datasets.at(0);
    if (!fs::exists(spec.path)) {
        why_not = spec.path + " not found";
        return std::nullopt;
    }
    fs::create_directories(work);
    const auto start = std::chrono::steady_clock::now();
    const auto data = ExperimentData::build(spec.name, load_ratings(spec.path, spec.format),
                                            config.folds, config.seed);
    const fs::path progress_path = work / "progress.jsonl";
    std::size_t logged = 0;
    if (std::ifstream in(progress_path); in) {
        for (std::string line; std::getline(in, line);) logged += !line.empty();
    }
    ProgressLog progress(progress_path.string());
    BenchmarkRun run;
    for (ModelKind kind : config.models) {
        RunOptions opts;
        opts.eval.threshold = data.dataset.scale().threshold;
        opts.progress = &progress;
        const auto plan = config.plan_for(kind);
        auto r = run_experiment(plan, data, opts);
        run.trials += r.trials.size();
        std::cerr << "  " << spec.name << '/' << to_string(kind) << ": " << r.trials.size()
                  << " trials\n";
        run.results.push_back(std::move(r));
    }
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    run.resumed = std::min(logged, run.trials);

    std::ofstream(work / "mae_best.md") << mae_table_markdown(run.results, ReportView::Best);
    std::ofstream(work / "mae_average.md") << mae_table_markdown(run.results, ReportView::GridAverage);
    std::ofstream(work / "results.json") << results_json(run.results);
    for (ListMetric m : kListMetrics) {
        for (ReportView v : {ReportView::Best, ReportView::GridAverage}) {
            std::ofstream(work / (std::string(to_string(m)) + "_" + std::string(to_string(v)) + ".csv"))
                << series_csv(run.results, spec.name, m, v);
        }
    }
    return run;
}

const AggregateResult& result_for(const BenchmarkRun& run, ModelKind kind) {
    for (const auto& r : run.results) {
        if (r.model() == kind) return r;
    }
    throw std::runtime_error("model missing from benchmark run");
}

const AveragedMetrics* view_of(const AggregateResult& r, ReportView view) {
    if (view == ReportView::GridAverage) return r.configs.empty() ? nullptr : &r.grid_average;
    return r.best_config() ? &r.best_config()->metrics : nullptr;
}

std::optional<double> series_value(const BenchmarkRun& run, ModelKind kind, ReportView view,
                                   ListMetric metric, std::size_t n) {
    const auto* m = view_of(result_for(run, kind), view);
    return m ? m->at(metric, n) : std::nullopt;
}

// ---------------------------------------------------------------- criterion 1

Verdict criterion_table2_ml100k(const std::optional<BenchmarkRun>& run, const std::string& why) {
    if (!run) return skip(why);
    const std::map<ModelKind, double> paper{{ModelKind::PMF, 0.770},  {ModelKind::BiasedMF, 0.754},
                                            {ModelKind::NMF, 0.804},  {ModelKind::BeMF, 0.805},
                                            {ModelKind::BNMF, 0.748}, {ModelKind::URP, 0.837}};
    bool ok = true;
    std::string detail;
    for (const auto& [kind, target] : paper) {
        const auto* best = result_for(*run, kind).best_config();
        const double got = best ? *best->metrics.mae : NAN;
        const bool within = best && std::abs(got - target) <= 0.05;
        ok = ok && within;
        detail += std::string(to_string(kind)) + " " + fmt(got) + " vs " + fmt(target, 3) +
                  (within ? "" : " (out)") + "; ";
    }
    const bool fresh = run->resumed == 0;
    const bool fast = run->seconds < 30 * 60;
    if (fresh) ok = ok && fast;
    detail += "runtime " + fmt(run->seconds / 60.0, 1) + " min" +
              (fresh ? "" : " (" + std::to_string(run->resumed) + " of " +
                                std::to_string(run->trials) + " trials resumed, not timed)");
    return check(ok, detail);
}

// ---------------------------------------------------------------- criterion 2

Verdict criterion_table2_filmtrust(const fs::path& work) {
    std::string why;
    const auto run = run_reduced("configs/filmtrust_reduced.json", work / "filmtrust", why);
    if (!run) return skip(why + " (dataset not redistributable; place it there to enable)");
    auto best = [&](ModelKind k) {
        const auto* c = result_for(*run, k).best_config();
        return c ? *c->metrics.mae : NAN;
    };
    const double biased = best(ModelKind::BiasedMF), bnmf = best(ModelKind::BNMF);
    const double pmf = best(ModelKind::PMF), nmf = best(ModelKind::NMF);
    const bool order = std::max(biased, bnmf) < std::min(pmf, nmf);
    const bool value = std::abs(biased - 0.652) <= 0.05;
    const bool fast = run->resumed > 0 || run->seconds < 10 * 60;
    return check(order && value && fast,
                 "BiasedMF " + fmt(biased) + ", BNMF " + fmt(bnmf) + ", PMF " + fmt(pmf) + ", NMF " +
                     fmt(nmf) + "; ordering " + (order ? "holds" : "broken") +
                     "; BiasedMF vs 0.652 " + (value ? "within" : "outside") + " 0.05; runtime " +
                     fmt(run->seconds / 60.0, 1) + " min");
}

// ---------------------------------------------------------------- criterion 3

// Counts the N at which every model of `upper` beats every model of `lower`.
std::size_t tier_wins(const BenchmarkRun& run, ReportView view, ListMetric metric,
                      const std::vector<std::vector<ModelKind>>& tiers, std::size_t max_n) {
    std::size_t wins = 0;
    for (std::size_t n = 1; n <= max_n; ++n) {
        bool ok = true;
        for (std::size_t t = 0; t + 1 < tiers.size(); ++t) {
            for (ModelKind hi : tiers[t]) {
                for (ModelKind lo : tiers[t + 1]) {
                    const auto a = series_value(run, hi, view, metric, n);
                    const auto b = series_value(run, lo, view, metric, n);
                    ok = ok && a && b && *a > *b;
                }
            }
        }
        wins += ok;
    }
    return wins;
}

Verdict criterion_quality_ordering(const std::optional<BenchmarkRun>& run, const std::string& why) {
    if (!run) return skip(why);
    const std::vector<std::vector<ModelKind>> tiers{{ModelKind::PMF, ModelKind::BiasedMF},
                                                    {ModelKind::NMF, ModelKind::BNMF},
                                                    {ModelKind::BeMF, ModelKind::URP}};
    const std::size_t max_n = 10;
    bool any = false;
    std::string detail;
    for (ReportView view : {ReportView::GridAverage, ReportView::Best}) {
        const auto p = tier_wins(*run, view, ListMetric::Precision, tiers, max_n);
        const auto g = tier_wins(*run, view, ListMetric::NDCG, tiers, max_n);
        const bool ok = 2 * p > max_n && 2 * g > max_n;
        any = any || ok;
        detail += std::string(to_string(view)) + " view: precision " + std::to_string(p) + "/10, ndcg " +
                  std::to_string(g) + "/10 " + (ok ? "holds" : "fails") + "; ";
    }
    detail += "passes when either view holds";
    return check(any, detail);
}

// ---------------------------------------------------------------- criterion 4

Verdict criterion_recall_spread(const std::optional<BenchmarkRun>& run, const std::string& why) {
    if (!run) return skip(why);
    bool ok = true;
    std::string detail;
    for (ReportView view : {ReportView::GridAverage, ReportView::Best}) {
        double lo = INFINITY, hi = -INFINITY;
        for (ModelKind k : kAllModels) {
            const auto v = series_value(*run, k, view, ListMetric::Recall, 10);
            if (!v) {
                ok = false;
                continue;
            }
            lo = std::min(lo, *v);
            hi = std::max(hi, *v);
        }
        ok = ok && hi - lo < 0.1;
        detail += std::string(to_string(view)) + " spread " + fmt(hi - lo) + " (" + fmt(lo) + ".." +
                  fmt(hi) + "); ";
    }
    detail += "both views must be below 0.1";
    return check(ok, detail);
}

// ---------------------------------------------------------------- criterion 5

Verdict criterion_beyond_accuracy(const std::optional<BenchmarkRun>& run, const std::string& why) {
    if (!run) return {Outcome::Skip, why, false};
    bool any = false;
    std::string detail;
    for (ReportView view : {ReportView::GridAverage, ReportView::Best}) {
        std::vector<std::pair<double, ModelKind>> novelty, diversity;
        for (ModelKind k : kAllModels) {
            novelty.emplace_back(series_value(*run, k, view, ListMetric::Novelty, 10).value_or(-1), k);
            diversity.emplace_back(series_value(*run, k, view, ListMetric::Diversity, 10).value_or(-1), k);
        }
        std::sort(novelty.rbegin(), novelty.rend());
        std::sort(diversity.rbegin(), diversity.rend());
        const bool nmf_top = novelty[0].second == ModelKind::NMF;
        const bool biased_top2 = diversity[0].second == ModelKind::BiasedMF ||
                                 diversity[1].second == ModelKind::BiasedMF;
        any = any || (nmf_top && biased_top2);
        detail += std::string(to_string(view)) + " view: top novelty " +
                  std::string(to_string(novelty[0].second)) + ", top-2 diversity " +
                  std::string(to_string(diversity[0].second)) + "/" +
                  std::string(to_string(diversity[1].second)) + "; ";
    }
    detail += "distance = 1 - cosine of train item columns; non-gating";
    return {any ? Outcome::Pass : Outcome::Fail, detail, false};
}

// ---------------------------------------------------------------- criterion 6

double vector_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        diff += (a[j] - b[j]) * (a[j] - b[j]);
        na += a[j] * a[j];
        nb += b[j] * b[j];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

RatingDataset random_toy(std::mt19937_64& gen) {
    std::bernoulli_distribution take(0.6);
    std::uniform_int_distribution<int> score(1, 5);
    std::vector<Rating> ratings;
    for (Index u = 0; u < 5; ++u) {
        for (Index i = 0; i < 5; ++i) {
            if (take(gen)) ratings.push_back({u, i, static_cast<double>(score(gen))});
        }
    }
    if (ratings.empty()) ratings.push_back({0, 0, 3.0});
    return RatingDataset(5, 5, std::move(ratings), ScoreScale{1, 5, 1, 4});
}

// Central differences of `f` over every entry of the parameter list.
std::vector<double> numeric_gradient(const std::vector<double*>& params,
                                     const std::function<double()>& f) {
    const double h = 1e-5;
    std::vector<double> g;
    for (double* p : params) {
        const double saved = *p;
        *p = saved + h;
        const double up = f();
        *p = saved - h;
        const double down = f();
        *p = saved;
        g.push_back((up - down) / (2 * h));
    }
    return g;
}

Verdict criterion_gradients() {
    std::mt19937_64 gen(20240601);
    std::normal_distribution<double> normal(0.0, 0.5);
    double worst_pmf = 0, worst_biased = 0, worst_bemf = 0;
    for (int instance = 0; instance < 20; ++instance) {
        const auto ds = random_toy(gen);
        const std::size_t k = 3;
        Matrix p(5, k), q(5, k);
        for (double& v : p.values()) v = normal(gen);
        for (double& v : q.values()) v = normal(gen);
        std::vector<double*> pq;
        for (double& v : p.values()) pq.push_back(&v);
        for (double& v : q.values()) pq.push_back(&v);

        Matrix gp, gq;
        pmf::gradient(p, q, ds.ratings(), 0.05, gp, gq);
        std::vector<double> analytic(gp.values().begin(), gp.values().end());
        analytic.insert(analytic.end(), gq.values().begin(), gq.values().end());
        worst_pmf = std::max(worst_pmf, vector_relative_error(analytic, numeric_gradient(pq, [&] {
                                            return pmf::objective(p, q, ds.ratings(), 0.05);
                                        })));

        biasedmf::State s{p, q, BiasTerms{global_mean(ds), std::vector<double>(5), std::vector<double>(5)}};
        for (double& b : s.biases.user) b = normal(gen);
        for (double& b : s.biases.item) b = normal(gen);
        std::vector<double*> params;
        for (double& v : s.p.values()) params.push_back(&v);
        for (double& v : s.q.values()) params.push_back(&v);
        for (double& v : s.biases.user) params.push_back(&v);
        for (double& v : s.biases.item) params.push_back(&v);
        const auto g = biasedmf::gradient(s, ds.ratings(), 0.05);
        analytic.assign(g.p.values().begin(), g.p.values().end());
        analytic.insert(analytic.end(), g.q.values().begin(), g.q.values().end());
        analytic.insert(analytic.end(), g.biases.user.begin(), g.biases.user.end());
        analytic.insert(analytic.end(), g.biases.item.begin(), g.biases.item.end());
        worst_biased = std::max(worst_biased, vector_relative_error(analytic, numeric_gradient(params, [&] {
                                                  return biasedmf::objective(s, ds.ratings(), 0.05);
                                              })));

        for (std::size_t score = 0; score < 5; ++score) {
            bemf::gradient(p, q, ds, score, 0.05, gp, gq);
            analytic.assign(gp.values().begin(), gp.values().end());
            analytic.insert(analytic.end(), gq.values().begin(), gq.values().end());
            worst_bemf = std::max(worst_bemf, vector_relative_error(analytic, numeric_gradient(pq, [&] {
                                                  return bemf::log_likelihood(p, q, ds, score, 0.05);
                                              })));
        }
    }
    const bool ok = worst_pmf < 1e-4 && worst_biased < 1e-4 && worst_bemf < 1e-4;
    return check(ok, "20 random 5x5 instances, step 1e-5, worst relative error PMF " + sci(worst_pmf) +
                         ", BiasedMF " + sci(worst_biased) + ", BeMF " + sci(worst_bemf) +
                         " (bound 1e-4)");
}

// ---------------------------------------------------------------- criterion 7

double row_sum(std::span<const double> row) {
    double s = 0.0;
    for (double v : row) s += v;
    return s;
}

Verdict criterion_normalization() {
    const auto& preset = dataset_preset("movielens100k");
    if (!fs::exists(preset.default_path)) return skip(preset.default_path + " not found");
    const auto ds = load_ratings(preset.default_path, preset.format);
    const auto folds = kfold_split(ds, 4, 42);
    const RatingDataset& train = folds[0].train;
    std::vector<std::string> problems;
    auto require = [&](bool ok, const std::string& what) {
        if (!ok && problems.size() < 5) problems.push_back(what);
    };

    // BeMF: normalized distribution on 1,000 random seen pairs
    ModelConfig bc;
    bc.kind = ModelKind::BeMF;
    bc.factors = 8;
    bc.iterations = 25;
    bc.learning_rate = 0.01;
    bc.regularization = 0.01;
    const auto bemf_model = fit_bemf(bc, train);
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<Index> pick(0, static_cast<Index>(train.num_ratings() - 1));
    std::uniform_int_distribution<Index> any_item(0, static_cast<Index>(train.num_items() - 1));
    double worst_phi = 0.0;
    for (int n = 0; n < 1000;) {
        const Index u = train.ratings()[pick(gen)].user;
        const Index i = any_item(gen);
        if (train.item_ratings(i).empty()) continue;
        const auto d = bemf_model->distribution(u, i);
        worst_phi = std::max(worst_phi, std::abs(row_sum(d) - 1.0));
        const auto pred = bemf_model->predict_with_reliability(u, i);
        require(pred.reliability >= 0.2 - 1e-12 && pred.reliability <= 1.0, "BeMF reliability range");
        ++n;
    }
    require(worst_phi <= 1e-9, "BeMF distribution sum");

    // NMF: strictly positive factors after each of 50 iterations
    Rng rng(42);
    Matrix p = random_matrix(train.num_users(), 8, 0.1, 1.0, rng);
    Matrix q = random_matrix(train.num_items(), 8, 0.1, 1.0, rng);
    for (int it = 0; it < 50; ++it) {
        nmf::iterate(p, q, train);
        const bool pos = std::all_of(p.values().begin(), p.values().end(), [](double v) { return v > 0; }) &&
                         std::all_of(q.values().begin(), q.values().end(), [](double v) { return v > 0; });
        require(pos, "NMF nonnegativity at iteration " + std::to_string(it + 1));
    }

    // BNMF: simplex responsibilities and prior lower bounds after each of 50 iterations
    const double alpha = 0.4, beta = 15.0;
    auto post = bnmf::initialize(train, 8, alpha, beta, 42);
    double worst_lambda = 0.0;
    for (int it = 0; it < 50; ++it) {
        bnmf::update_responsibilities(post, train);
        bnmf::update_parameters(post, train, alpha, beta);
        for (std::size_t r = 0; r < post.lambda.rows(); ++r) {
            worst_lambda = std::max(worst_lambda, std::abs(row_sum(post.lambda.row(r)) - 1.0));
        }
        const auto& lam = post.lambda.values();
        require(std::all_of(lam.begin(), lam.end(), [](double v) { return v >= 0 && v <= 1; }),
                "BNMF lambda in [0, 1]");
        require(std::all_of(post.gamma.values().begin(), post.gamma.values().end(),
                            [&](double v) { return v >= alpha; }),
                "BNMF gamma >= alpha");
        for (const Matrix* e : {&post.eps_plus, &post.eps_minus}) {
            require(std::all_of(e->values().begin(), e->values().end(), [&](double v) { return v >= beta; }),
                    "BNMF eps >= beta");
        }
    }
    require(worst_lambda <= 1e-9, "BNMF lambda row sums");

    // URP: phi and beta rows are distributions after each of 10 iterations
    auto upost = urp::initialize(train, 8, 42);
    double worst_urp = 0.0;
    for (int it = 0; it < 10; ++it) {
        urp::iterate(upost, train);
        for (const Matrix* m : {&upost.phi, &upost.beta}) {
            for (std::size_t r = 0; r < m->rows(); ++r) {
                worst_urp = std::max(worst_urp, std::abs(row_sum(m->row(r)) - 1.0));
            }
            require(std::all_of(m->values().begin(), m->values().end(), [](double v) { return v >= 0; }),
                    "URP nonnegativity");
        }
    }
    require(worst_urp <= 1e-9, "URP row sums");

    std::string detail = "ML-100K fold 0; worst |sum - 1|: BeMF " + sci(worst_phi) + " (1000 pairs), BNMF " +
                         sci(worst_lambda) + " (50 iterations), URP " + sci(worst_urp) +
                         " (10 iterations); NMF positive for 50 iterations";
    for (const auto& p : problems) detail += "; violated: " + p;
    return check(problems.empty(), detail);
}

// ---------------------------------------------------------------- criterion 8

struct ReferenceMetrics {
    std::optional<double> precision, recall, ndcg;
};

// Per-user loops in ascending user order, ideal DCG by enumerating all
// orderings of the user's test gains.
ReferenceMetrics reference_metrics(const std::vector<std::vector<double>>& predicted,
                                   const RatingDataset& test, double threshold, std::size_t n) {
    double ps = 0, rs = 0, ns = 0;
    std::size_t pc = 0, rc = 0, nc = 0;
    for (Index u = 0; u < test.num_users(); ++u) {
        std::vector<std::pair<Index, double>> items;
        for (const Entry& e : test.user_ratings(u)) items.emplace_back(e.index, e.value);
        if (items.empty()) continue;
        auto ranked = items;
        std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
            const double sa = predicted[u][a.first], sb = predicted[u][b.first];
            return sa != sb ? sa > sb : a.first < b.first;
        });
        const std::size_t len = std::min(n, ranked.size());
        std::size_t hits = 0;
        double dcg = 0.0;
        for (std::size_t j = 0; j < len; ++j) {
            hits += ranked[j].second >= threshold;
            dcg += ranked[j].second / std::log2(static_cast<double>(j) + 2.0);
        }
        ps += static_cast<double>(hits) / static_cast<double>(len);
        ++pc;
        std::size_t relevant = 0;
        for (const auto& x : items) relevant += x.second >= threshold;
        if (relevant > 0) {
            rs += static_cast<double>(hits) / static_cast<double>(relevant);
            ++rc;
        }
        std::vector<double> gains;
        for (const auto& x : items) gains.push_back(x.second);
        std::sort(gains.begin(), gains.end());
        double idcg = 0.0;
        do {
            double d = 0.0;
            for (std::size_t j = 0; j < std::min(n, gains.size()); ++j) {
                d += gains[j] / std::log2(static_cast<double>(j) + 2.0);
            }
            idcg = std::max(idcg, d);
        } while (std::next_permutation(gains.begin(), gains.end()));
        if (idcg > 0.0) {
            ns += dcg / idcg;
            ++nc;
        }
    }
    ReferenceMetrics out;
    if (pc) out.precision = ps / static_cast<double>(pc);
    if (rc) out.recall = rs / static_cast<double>(rc);
    if (nc) out.ndcg = ns / static_cast<double>(nc);
    return out;
}

Verdict criterion_metric_oracles() {
    std::mt19937_64 gen(8);
    std::uniform_int_distribution<int> users_dist(1, 6), items_dist(1, 6), rating(1, 5), coarse(2, 10);
    std::bernoulli_distribution take(0.7);
    std::size_t comparisons = 0, mismatches = 0, ideal_failures = 0, monotone_failures = 0;
    for (int instance = 0; instance < 200; ++instance) {
        const std::size_t users = static_cast<std::size_t>(users_dist(gen));
        const std::size_t items = static_cast<std::size_t>(items_dist(gen));
        std::vector<Rating> ratings;
        std::vector<std::vector<double>> predicted(users, std::vector<double>(items));
        Matrix p(users, users), q(items, users);
        for (Index u = 0; u < users; ++u) {
            p(u, u) = 1.0;
            for (Index i = 0; i < items; ++i) {
                predicted[u][i] = 0.5 * coarse(gen);  // on [1, 5], so clamping is the identity
                q(i, u) = predicted[u][i];
                if (take(gen)) ratings.push_back({u, i, static_cast<double>(rating(gen))});
            }
        }
        const RatingDataset test(users, items, std::move(ratings), ScoreScale{1, 5, 1, 4});
        TrainingSupport sup;
        sup.scale = test.scale();
        sup.num_users = users;
        sup.num_items = items;
        sup.global_mean = 3.0;
        sup.user_seen.assign(users, 1);
        sup.item_seen.assign(items, 1);
        ModelConfig c;
        c.factors = users;
        const FactorModel model(c, sup, p, q);
        const auto lists = recommend_all(model, test, 6);

        double previous_recall = -1.0;
        for (std::size_t n = 1; n <= 6; ++n) {
            const auto ref = reference_metrics(predicted, test, 4.0, n);
            const auto pr = precision_at_n(lists, test, 4.0, n).value;
            const auto rc = recall_at_n(lists, test, 4.0, n).value;
            const auto nd = ndcg_at_n(lists, test, n).value;
            mismatches += pr != ref.precision;
            mismatches += rc != ref.recall;
            mismatches += nd != ref.ndcg;
            comparisons += 3;
            if (rc) {
                monotone_failures += *rc < previous_recall;
                previous_recall = *rc;
            }
        }
        // the ideal ordering of each user's test items scores exactly 1
        for (Index u = 0; u < users; ++u) {
            std::vector<Entry> entries(test.user_ratings(u).begin(), test.user_ratings(u).end());
            if (entries.empty()) continue;
            std::stable_sort(entries.begin(), entries.end(),
                             [](const Entry& a, const Entry& b) { return a.value > b.value; });
            RecommendationList ideal;
            ideal.user = u;
            for (const Entry& e : entries) ideal.items.push_back(e.index);
            ideal.scores.assign(ideal.items.size(), 0.0);
            for (std::size_t n = 1; n <= 6; ++n) {
                const std::vector<RecommendationList> one{ideal};
                ideal_failures += ndcg_at_n(one, test, n).value != std::optional<double>(1.0);
            }
        }
    }
    return check(mismatches == 0 && ideal_failures == 0 && monotone_failures == 0,
                 "200 random instances (<= 6 candidates per user), " + std::to_string(comparisons) +
                     " exact comparisons, " + std::to_string(mismatches) + " mismatches; ideal NDCG != 1: " +
                     std::to_string(ideal_failures) + "; recall decreases: " +
                     std::to_string(monotone_failures));
}

// ---------------------------------------------------------------- criterion 9

std::map<std::string, std::string> output_files(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        const auto ext = entry.path().extension();
        if (!entry.is_regular_file() || (ext != ".csv" && ext != ".json")) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[fs::relative(entry.path(), dir).string()] = ss.str();
    }
    return files;
}

Verdict criterion_determinism(const fs::path& work) {
    const fs::path dir = work / "determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string config = "configs/quick.json";
    std::string source = "configs/quick.json on ML-100K";
    if (!fs::exists(dataset_preset("movielens100k").default_path)) {
        // synthetic stand-in with the same config shape
        std::mt19937_64 gen(1);
        std::uniform_int_distribution<int> score(1, 5);
        std::bernoulli_distribution take(0.3);
        std::ofstream data(dir / "synthetic.csv");
        data << "userId,movieId,rating,timestamp\n";
        for (int u = 0; u < 60; ++u)
            for (int i = 0; i < 50; ++i)
                if (take(gen)) data << u << ',' << i << ',' << score(gen) << ",0\n";
        auto parsed = nlohmann::json::parse(std::ifstream("configs/quick.json"));
        parsed["datasets"] = nlohmann::json::array(
            {{{"name", "synthetic"}, {"path", (dir / "synthetic.csv").string()}}});
        config = (dir / "quick_synthetic.json").string();
        std::ofstream(config) << parsed.dump(2);
        source = "quick config on synthetic data (ML-100K not found)";
    }
    std::vector<std::map<std::string, std::string>> outputs;
    for (const char* jobs : {"1", "1", "3"}) {
        const auto out = (dir / ("run" + std::to_string(outputs.size()))).string();
        const char* argv[] = {"mfcf", "benchmark", "--config", config.c_str(), "--out", out.c_str(),
                              "--jobs", jobs, "--quiet"};
        std::ostringstream sink_out, sink_err;
        const int code = cli::run(9, argv, sink_out, sink_err);
        if (code != cli::kOk) return fail("benchmark exited " + std::to_string(code) + ": " + sink_err.str());
        outputs.push_back(output_files(out));
    }
    const bool same = outputs[0] == outputs[1] && outputs[0] == outputs[2];
    return check(same && !outputs[0].empty(),
                 source + "; 3 runs (--jobs 1, 1, 3), " + std::to_string(outputs[0].size()) +
                     " CSV/JSON files each, " + (same ? "byte-identical" : "differ"));
}

// ---------------------------------------------------------------- criterion 10

Verdict criterion_special_functions() {
    double worst_recurrence = 0.0, worst_roundtrip = 0.0, worst_forward = 0.0;
    const int samples = 20000;
    for (int s = 0; s <= samples; ++s) {
        const double x = std::pow(10.0, -2.0 + 5.0 * s / samples);  // 0.01 .. 1000
        worst_recurrence = std::max(worst_recurrence, std::abs(digamma(x + 1) - digamma(x) - 1 / x));
        const double y = digamma(x);
        const double back = inverse_digamma(y);
        worst_roundtrip = std::max(worst_roundtrip, std::abs(back - x) / x);
        worst_forward = std::max(worst_forward, std::abs(digamma(back) - y));
    }
    // psi(1) = -Euler-Mascheroni constant
    const double psi1_error = std::abs(digamma(1.0) - -0.57721566490153286061);
    const bool ok = worst_recurrence <= 1e-10 && worst_roundtrip <= 1e-7 && worst_forward <= 1e-8 &&
                    psi1_error <= 1e-12;
    return check(ok, "x in [0.01, 1000], " + std::to_string(samples + 1) +
                         " log-spaced points: recurrence " + sci(worst_recurrence) +
                         " (1e-10), inverse round trip rel " + sci(worst_roundtrip) +
                         " (1e-7), |psi(inv(y)) - y| " + sci(worst_forward) + " (1e-8); |psi(1) + gamma| " +
                         sci(psi1_error) + " (1e-12)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> only;
    std::string work = "build/acceptance";
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
    app.add_option("--work", work, "directory for benchmark outputs and resumable progress");
    CLI11_PARSE(app, argc, argv);

    std::set<int> selected(only.begin(), only.end());
    if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const fs::path work_dir(work);

    std::optional<BenchmarkRun> ml100k;
    std::string ml100k_missing;
    if (selected.count(1) || selected.count(3) || selected.count(4) || selected.count(5)) {
        std::cerr << "running the reduced ML-100K benchmark (resumes from " << (work_dir / "ml100k")
                  << ")\n";
        ml100k = run_reduced("configs/ml100k_reduced.json", work_dir / "ml100k", ml100k_missing);
    }

    const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
        {1, [&] { return criterion_table2_ml100k(ml100k, ml100k_missing); }},
        {2, [&] { return criterion_table2_filmtrust(work_dir); }},
        {3, [&] { return criterion_quality_ordering(ml100k, ml100k_missing); }},
        {4, [&] { return criterion_recall_spread(ml100k, ml100k_missing); }},
        {5, [&] { return criterion_beyond_accuracy(ml100k, ml100k_missing); }},
        {6, criterion_gradients},
        {7, criterion_normalization},
        {8, criterion_metric_oracles},
        {9, [&] { return criterion_determinism(work_dir); }},
        {10, criterion_special_functions},
    };

    std::size_t failed = 0, skipped = 0, ran = 0;
    for (const auto& [id, fn] : criteria) {
        if (!selected.count(id)) continue;
        ++ran;
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = fail(std::string("exception: ") + e.what());
        }
        const char* tag = v.outcome == Outcome::Pass ? "PASS" : v.outcome == Outcome::Fail ? "FAIL" : "SKIP";
        std::cout << tag << " criterion " << id << ": " << v.detail << std::endl;
        failed += v.outcome == Outcome::Fail && v.gating;
        skipped += v.outcome == Outcome::Skip;
    }
    if (failed) return 1;
    return ran > 0 && skipped == ran ? 77 : 0;
}
