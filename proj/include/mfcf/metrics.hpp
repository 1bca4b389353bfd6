#pragma once

#include "mfcf/data.hpp"
#include "mfcf/model.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mfcf {

/// Items in descending predicted score, ties by ascending item index.
struct RecommendationList {
    Index user = 0;
    std::vector<Index> items;
    std::vector<double> scores;
};

/// Ranks `candidates` by model.predict and keeps the first n.
RecommendationList recommend_top_n(const Model& model, Index user,
                                   std::span<const Index> candidates, std::size_t n);

/// One list per user of `test` (empty when the user has no test items),
/// candidates being that user's test items.
std::vector<RecommendationList> recommend_all(const Model& model, const RatingDataset& test,
                                              std::size_t n);

/// Mean absolute error of the clamped predictions. Throws ConfigError when
/// test is empty.
double mae(const Model& model, std::span<const Rating> test);

/// Item-item distance 1 - cosine of the item columns of the training matrix
/// (missing ratings are zeros). Items with no common rater, or an all-zero
/// column, are at distance 1.
class ItemDistance {
public:
    explicit ItemDistance(const RatingDataset& train);

    double operator()(Index a, Index b) const;
    std::size_t num_items() const { return n_; }

private:
    std::size_t n_ = 0;
    std::vector<double> distance_;
};

/// A metric averaged over the users it is defined for. Absent when no user
/// qualifies.
struct MetricValue {
    std::optional<double> value;
    std::size_t users = 0;
    std::size_t skipped = 0;

    friend bool operator==(const MetricValue&, const MetricValue&) = default;
};

// Every list metric below looks at the first min(n, list length) entries of
// each list and macro-averages in ascending user order.

/// Share of recommended items with test rating >= threshold. Users with an
/// empty list are skipped.
MetricValue precision_at_n(std::span<const RecommendationList> lists, const RatingDataset& test,
                           double threshold, std::size_t n);

/// Recommended relevant items over all relevant test items of the user.
/// Users without a relevant test item are skipped.
MetricValue recall_at_n(std::span<const RecommendationList> lists, const RatingDataset& test,
                        double threshold, std::size_t n);

/// DCG with raw ratings as gains and log2(pos + 1) discounts, over the DCG of
/// the user's test items in ideal order. Users with zero ideal DCG are skipped.
MetricValue ndcg_at_n(std::span<const RecommendationList> lists, const RatingDataset& test,
                      std::size_t n);

/// Mean distance from each recommended item to the items the user rated in
/// train. Users without train ratings or without recommendations are skipped.
MetricValue novelty_at_n(std::span<const RecommendationList> lists, const RatingDataset& train,
                         const ItemDistance& distance, std::size_t n);

/// Mean pairwise distance inside the list. Users with fewer than two
/// recommendations are skipped.
MetricValue diversity_at_n(std::span<const RecommendationList> lists,
                           const ItemDistance& distance, std::size_t n);

enum class ListMetric { Precision, Recall, NDCG, Novelty, Diversity };
inline constexpr ListMetric kListMetrics[] = {ListMetric::Precision, ListMetric::Recall,
                                              ListMetric::NDCG, ListMetric::Novelty,
                                              ListMetric::Diversity};
std::string_view to_string(ListMetric metric);

struct MetricReport {
    std::optional<double> mae;
    /// series[metric][n - 1] for n = 1..max_n
    std::vector<std::vector<MetricValue>> series;

    std::size_t max_n() const { return series.empty() ? 0 : series.front().size(); }
    const MetricValue& at(ListMetric metric, std::size_t n) const {
        return series[static_cast<std::size_t>(metric)][n - 1];
    }

    friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

struct EvalOptions {
    double threshold = 4.0;
    std::size_t max_n = 10;
};

/// Everything the harness records for one trained model on one fold.
MetricReport evaluate(const Model& model, const RatingDataset& train, const RatingDataset& test,
                      const ItemDistance& distance, const EvalOptions& options);

} // namespace mfcf
