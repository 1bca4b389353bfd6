#include "mfcf/metrics.hpp"

#include "mfcf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mfcf {

namespace {

std::size_t prefix(const RecommendationList& list, std::size_t n) {
    return std::min(n, list.items.size());
}

// Test rating of `item` for the user, which must be one of their test items.
double test_rating(const RatingDataset& test, Index user, Index item) {
    const auto entries = test.user_ratings(user);
    const auto it = std::lower_bound(entries.begin(), entries.end(), item,
                                     [](const Entry& e, Index i) { return e.index < i; });
    if (it == entries.end() || it->index != item) {
        throw ConfigError("recommended item is not a test item of the user");
    }
    return it->value;
}

struct Average {
    double sum = 0.0;
    MetricValue result;

    void add(double v) {
        sum += v;
        ++result.users;
    }
    void skip() { ++result.skipped; }
    MetricValue finish() {
        if (result.users > 0) {
            result.value = sum / static_cast<double>(result.users);
        }
        return result;
    }
};

} // namespace

RecommendationList recommend_top_n(const Model& model, Index user,
                                   std::span<const Index> candidates, std::size_t n) {
    std::vector<std::pair<double, Index>> scored;
    scored.reserve(candidates.size());
    for (Index item : candidates) {
        scored.emplace_back(model.predict(user, item), item);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    RecommendationList list;
    list.user = user;
    const std::size_t keep = std::min(n, scored.size());
    for (std::size_t j = 0; j < keep; ++j) {
        list.items.push_back(scored[j].second);
        list.scores.push_back(scored[j].first);
    }
    return list;
}

std::vector<RecommendationList> recommend_all(const Model& model, const RatingDataset& test,
                                              std::size_t n) {
    std::vector<RecommendationList> lists;
    lists.reserve(test.num_users());
    std::vector<Index> candidates;
    for (Index u = 0; u < test.num_users(); ++u) {
        candidates.clear();
        for (const Entry& e : test.user_ratings(u)) {
            candidates.push_back(e.index);
        }
        lists.push_back(recommend_top_n(model, u, candidates, n));
    }
    return lists;
}

double mae(const Model& model, std::span<const Rating> test) {
    if (test.empty()) {
        throw ConfigError("MAE of an empty test set");
    }
    double sum = 0.0;
    for (const Rating& r : test) {
        sum += std::abs(r.value - model.predict(r.user, r.item));
    }
    return sum / static_cast<double>(test.size());
}

ItemDistance::ItemDistance(const RatingDataset& train)
    : n_(train.num_items()), distance_(n_ * n_, 1.0) {
    std::vector<double> dots(n_ * n_, 0.0);
    std::vector<double> norm(n_, 0.0);
    for (Index u = 0; u < train.num_users(); ++u) {
        const auto entries = train.user_ratings(u);
        for (std::size_t a = 0; a < entries.size(); ++a) {
            const double ra = entries[a].value;
            norm[entries[a].index] += ra * ra;
            double* row = dots.data() + static_cast<std::size_t>(entries[a].index) * n_;
            for (std::size_t b = a + 1; b < entries.size(); ++b) {
                row[entries[b].index] += ra * entries[b].value;
            }
        }
    }
    for (std::size_t a = 0; a < n_; ++a) {
        if (norm[a] > 0.0) {
            distance_[a * n_ + a] = 0.0;
        }
        for (std::size_t b = a + 1; b < n_; ++b) {
            // lists are sorted by item, so every pair was accumulated at [min][max]
            const double d = dots[a * n_ + b];
            double dist = 1.0;
            if (d != 0.0 && norm[a] > 0.0 && norm[b] > 0.0) {
                dist = std::clamp(1.0 - d / std::sqrt(norm[a] * norm[b]), 0.0, 1.0);
            }
            distance_[a * n_ + b] = dist;
            distance_[b * n_ + a] = dist;
        }
    }
}

double ItemDistance::operator()(Index a, Index b) const {
    return distance_[static_cast<std::size_t>(a) * n_ + b];
}

MetricValue precision_at_n(std::span<const RecommendationList> lists, const RatingDataset& test,
                           double threshold, std::size_t n) {
    Average avg;
    for (const auto& list : lists) {
        const std::size_t len = prefix(list, n);
        if (len == 0) {
            avg.skip();
            continue;
        }
        std::size_t hits = 0;
        for (std::size_t j = 0; j < len; ++j) {
            hits += test_rating(test, list.user, list.items[j]) >= threshold;
        }
        avg.add(static_cast<double>(hits) / static_cast<double>(len));
    }
    return avg.finish();
}

MetricValue recall_at_n(std::span<const RecommendationList> lists, const RatingDataset& test,
                        double threshold, std::size_t n) {
    Average avg;
    for (const auto& list : lists) {
        std::size_t relevant = 0;
        for (const Entry& e : test.user_ratings(list.user)) {
            relevant += e.value >= threshold;
        }
        if (relevant == 0) {
            avg.skip();
            continue;
        }
        std::size_t hits = 0;
        for (std::size_t j = 0; j < prefix(list, n); ++j) {
            hits += test_rating(test, list.user, list.items[j]) >= threshold;
        }
        avg.add(static_cast<double>(hits) / static_cast<double>(relevant));
    }
    return avg.finish();
}

MetricValue ndcg_at_n(std::span<const RecommendationList> lists, const RatingDataset& test,
                      std::size_t n) {
    Average avg;
    std::vector<double> ideal;
    for (const auto& list : lists) {
        ideal.clear();
        for (const Entry& e : test.user_ratings(list.user)) {
            ideal.push_back(e.value);
        }
        std::sort(ideal.begin(), ideal.end(), std::greater<>());
        double idcg = 0.0;
        for (std::size_t j = 0; j < std::min(n, ideal.size()); ++j) {
            idcg += ideal[j] / std::log2(static_cast<double>(j) + 2.0);
        }
        if (!(idcg > 0.0)) {
            avg.skip();
            continue;
        }
        double dcg = 0.0;
        for (std::size_t j = 0; j < prefix(list, n); ++j) {
            dcg += test_rating(test, list.user, list.items[j]) / std::log2(static_cast<double>(j) + 2.0);
        }
        avg.add(dcg / idcg);
    }
    return avg.finish();
}

MetricValue novelty_at_n(std::span<const RecommendationList> lists, const RatingDataset& train,
                         const ItemDistance& distance, std::size_t n) {
    Average avg;
    for (const auto& list : lists) {
        const auto known = train.user_ratings(list.user);
        const std::size_t len = prefix(list, n);
        if (known.empty() || len == 0) {
            avg.skip();
            continue;
        }
        double total = 0.0;
        for (std::size_t j = 0; j < len; ++j) {
            double per_item = 0.0;
            for (const Entry& e : known) {
                per_item += distance(list.items[j], e.index);
            }
            total += per_item / static_cast<double>(known.size());
        }
        avg.add(total / static_cast<double>(len));
    }
    return avg.finish();
}

MetricValue diversity_at_n(std::span<const RecommendationList> lists,
                           const ItemDistance& distance, std::size_t n) {
    Average avg;
    for (const auto& list : lists) {
        const std::size_t len = prefix(list, n);
        if (len < 2) {
            avg.skip();
            continue;
        }
        double total = 0.0;
        for (std::size_t a = 0; a < len; ++a) {
            for (std::size_t b = a + 1; b < len; ++b) {
                total += distance(list.items[a], list.items[b]);
            }
        }
        avg.add(total / static_cast<double>(len * (len - 1) / 2));
    }
    return avg.finish();
}

std::string_view to_string(ListMetric metric) {
    switch (metric) {
    case ListMetric::Precision: return "precision";
    case ListMetric::Recall: return "recall";
    case ListMetric::NDCG: return "ndcg";
    case ListMetric::Novelty: return "novelty";
    case ListMetric::Diversity: return "diversity";
    }
    return "?";
}

MetricReport evaluate(const Model& model, const RatingDataset& train, const RatingDataset& test,
                      const ItemDistance& distance, const EvalOptions& options) {
    MetricReport report;
    if (!test.empty()) {
        report.mae = mae(model, test.ratings());
    }
    const auto lists = recommend_all(model, test, options.max_n);
    report.series.assign(std::size(kListMetrics), std::vector<MetricValue>(options.max_n));
    for (std::size_t n = 1; n <= options.max_n; ++n) {
        report.series[0][n - 1] = precision_at_n(lists, test, options.threshold, n);
        report.series[1][n - 1] = recall_at_n(lists, test, options.threshold, n);
        report.series[2][n - 1] = ndcg_at_n(lists, test, n);
        report.series[3][n - 1] = novelty_at_n(lists, train, distance, n);
        report.series[4][n - 1] = diversity_at_n(lists, distance, n);
    }
    return report;
}

} // namespace mfcf
