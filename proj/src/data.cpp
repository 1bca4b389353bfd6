#include "mfcf/data.hpp"

#include "mfcf/error.hpp"
#include "mfcf/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>

namespace mfcf {

namespace {

constexpr double kGridTolerance = 1e-6;

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view text, double& out) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

std::string describe(const std::string& path, std::size_t line) {
    return path + ":" + std::to_string(line) + ": ";
}

} // namespace

void ScoreScale::validate() const {
    if (!(step > 0.0) || !(max_score >= min_score)) {
        throw ConfigError("score scale needs step > 0 and max_score >= min_score");
    }
    const double steps = (max_score - min_score) / step;
    if (std::abs(steps - std::round(steps)) > kGridTolerance) {
        throw ConfigError("score scale range is not a whole number of steps");
    }
    if (threshold < min_score || threshold > max_score) {
        throw ConfigError("relevance threshold lies outside the score scale");
    }
}

std::size_t ScoreScale::num_scores() const {
    return static_cast<std::size_t>(std::llround((max_score - min_score) / step)) + 1;
}

bool ScoreScale::contains(double value) const {
    const double t = (value - min_score) / step;
    const double r = std::round(t);
    return std::abs(t - r) <= kGridTolerance && r >= 0.0
        && r < static_cast<double>(num_scores());
}

std::size_t ScoreScale::index_of(double value) const {
    if (!contains(value)) {
        throw FormatError("score " + std::to_string(value) + " is not on the scale grid");
    }
    return static_cast<std::size_t>(std::llround((value - min_score) / step));
}

double ScoreScale::clamp(double value) const {
    return std::clamp(value, min_score, max_score);
}

Index IdMap::add(std::string_view id) {
    const auto it = lookup_.find(std::string(id));
    if (it != lookup_.end()) {
        return it->second;
    }
    const auto index = static_cast<Index>(ids_.size());
    ids_.emplace_back(id);
    lookup_.emplace(ids_.back(), index);
    return index;
}

std::int64_t IdMap::find(std::string_view id) const {
    const auto it = lookup_.find(std::string(id));
    return it == lookup_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

RatingDataset::RatingDataset(std::size_t num_users, std::size_t num_items,
                             std::vector<Rating> ratings, ScoreScale scale,
                             std::shared_ptr<const IdMap> user_ids,
                             std::shared_ptr<const IdMap> item_ids)
    : num_users_(num_users), num_items_(num_items), ratings_(std::move(ratings)),
      scale_(scale), user_ids_(std::move(user_ids)), item_ids_(std::move(item_ids)) {
    scale_.validate();
    std::vector<std::size_t> user_count(num_users_, 0);
    std::vector<std::size_t> item_count(num_items_, 0);
    for (const Rating& r : ratings_) {
        if (r.user >= num_users_ || r.item >= num_items_) {
            throw FormatError("rating index out of range");
        }
        if (!scale_.contains(r.value)) {
            throw FormatError("rating " + std::to_string(r.value) + " is outside the declared scale");
        }
        ++user_count[r.user];
        ++item_count[r.item];
    }

    user_offsets_.assign(num_users_ + 1, 0);
    item_offsets_.assign(num_items_ + 1, 0);
    std::partial_sum(user_count.begin(), user_count.end(), user_offsets_.begin() + 1);
    std::partial_sum(item_count.begin(), item_count.end(), item_offsets_.begin() + 1);

    by_user_.resize(ratings_.size());
    by_item_.resize(ratings_.size());
    std::vector<std::size_t> user_fill(user_offsets_.begin(), user_offsets_.end() - 1);
    std::vector<std::size_t> item_fill(item_offsets_.begin(), item_offsets_.end() - 1);
    for (const Rating& r : ratings_) {
        by_user_[user_fill[r.user]++] = Entry{r.item, r.value};
        by_item_[item_fill[r.item]++] = Entry{r.user, r.value};
    }

    const auto by_index = [](const Entry& a, const Entry& b) { return a.index < b.index; };
    const auto same_index = [](const Entry& a, const Entry& b) { return a.index == b.index; };
    for (std::size_t u = 0; u < num_users_; ++u) {
        auto first = by_user_.begin() + static_cast<std::ptrdiff_t>(user_offsets_[u]);
        auto last = by_user_.begin() + static_cast<std::ptrdiff_t>(user_offsets_[u + 1]);
        std::sort(first, last, by_index);
        if (std::adjacent_find(first, last, same_index) != last) {
            throw FormatError("duplicate rating for user index " + std::to_string(u));
        }
    }
    for (std::size_t i = 0; i < num_items_; ++i) {
        auto first = by_item_.begin() + static_cast<std::ptrdiff_t>(item_offsets_[i]);
        auto last = by_item_.begin() + static_cast<std::ptrdiff_t>(item_offsets_[i + 1]);
        std::sort(first, last, by_index);
    }
}

std::span<const Entry> RatingDataset::user_ratings(Index user) const {
    return std::span<const Entry>(by_user_).subspan(user_offsets_[user],
                                                   user_offsets_[user + 1] - user_offsets_[user]);
}

std::span<const Entry> RatingDataset::item_ratings(Index item) const {
    return std::span<const Entry>(by_item_).subspan(item_offsets_[item],
                                                   item_offsets_[item + 1] - item_offsets_[item]);
}

RatingDataset RatingDataset::subset(std::vector<Rating> ratings) const {
    return RatingDataset(num_users_, num_items_, std::move(ratings), scale_, user_ids_, item_ids_);
}

const DatasetPreset& dataset_preset(std::string_view name) {
    static const std::vector<DatasetPreset> presets = [] {
        std::vector<DatasetPreset> p;
        DatasetFormat movielens;
        movielens.delimiter = ",";
        movielens.has_header = true;
        movielens.scale = ScoreScale{1.0, 5.0, 1.0, 4.0};
        p.push_back({"movielens", "data/ml-100k/ratings.csv", movielens});
        p.push_back({"movielens100k", "data/ml-100k/ratings.csv", movielens});

        DatasetFormat ml1m = movielens;
        ml1m.delimiter = "::";
        ml1m.has_header = false;
        p.push_back({"movielens1m", "data/ml-1m/ratings.dat", ml1m});

        DatasetFormat filmtrust;
        filmtrust.delimiter = "whitespace";
        filmtrust.has_header = false;
        filmtrust.scale = ScoreScale{0.0, 5.0, 0.5, 4.0};
        p.push_back({"filmtrust", "data/filmtrust/ratings.txt", filmtrust});

        DatasetFormat anime;
        anime.delimiter = ",";
        anime.has_header = true;
        anime.scale = ScoreScale{1.0, 10.0, 1.0, 8.0};
        anime.skip_ratings = {"-1"};
        p.push_back({"myanimelist", "data/myanimelist/rating.csv", anime});
        return p;
    }();
    for (const auto& preset : presets) {
        if (preset.name == name) {
            return preset;
        }
    }
    throw ConfigError("unknown dataset preset '" + std::string(name) + "'");
}

std::vector<std::string> dataset_preset_names() {
    return {"movielens", "movielens100k", "movielens1m", "filmtrust", "myanimelist"};
}

std::vector<std::string> split_fields(std::string_view line, std::string_view delimiter) {
    std::vector<std::string> fields;
    if (delimiter == "whitespace") {
        std::size_t pos = 0;
        while (pos < line.size()) {
            pos = line.find_first_not_of(" \t\r", pos);
            if (pos == std::string_view::npos) {
                break;
            }
            const auto end = line.find_first_of(" \t\r", pos);
            fields.emplace_back(line.substr(pos, end == std::string_view::npos ? end : end - pos));
            pos = end == std::string_view::npos ? line.size() : end;
        }
        return fields;
    }

    std::string field;
    bool quoted = false;
    std::size_t pos = 0;
    while (pos < line.size()) {
        const char c = line[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < line.size() && line[pos + 1] == '"') {
                    field.push_back('"');
                    pos += 2;
                    continue;
                }
                quoted = false;
            } else {
                field.push_back(c);
            }
            ++pos;
        } else if (c == '"') {
            quoted = true;
            ++pos;
        } else if (line.substr(pos, delimiter.size()) == delimiter) {
            fields.push_back(std::move(field));
            field.clear();
            pos += delimiter.size();
        } else {
            if (c != '\r') {
                field.push_back(c);
            }
            ++pos;
        }
    }
    if (quoted) {
        throw FormatError("unterminated quoted field");
    }
    fields.push_back(std::move(field));
    return fields;
}

RatingDataset load_ratings(const std::string& path, const DatasetFormat& format) {
    format.scale.validate();
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open ratings file '" + path + "'");
    }

    auto users = std::make_shared<IdMap>();
    auto items = std::make_shared<IdMap>();
    std::vector<Rating> ratings;
    const std::size_t arity = std::max({format.user_column, format.item_column, format.rating_column}) + 1;

    std::string line;
    std::size_t line_no = 0;
    bool header_pending = format.has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) {
            line.erase(0, 3);
        }
        if (trim(line).empty()) {
            continue;
        }
        if (header_pending) {
            header_pending = false;
            continue;
        }
        std::vector<std::string> fields;
        try {
            fields = split_fields(line, format.delimiter);
        } catch (const FormatError& e) {
            throw FormatError(describe(path, line_no) + e.what());
        }
        if (fields.size() < arity) {
            throw FormatError(describe(path, line_no) + "expected at least " + std::to_string(arity)
                              + " fields, found " + std::to_string(fields.size()));
        }
        const std::string_view rating_text = trim(fields[format.rating_column]);
        if (std::find(format.skip_ratings.begin(), format.skip_ratings.end(), rating_text)
            != format.skip_ratings.end()) {
            continue;
        }
        double value = 0.0;
        if (!parse_double(rating_text, value)) {
            throw FormatError(describe(path, line_no) + "unparsable rating '" + std::string(rating_text) + "'");
        }
        if (!format.scale.contains(value)) {
            throw FormatError(describe(path, line_no) + "rating " + std::string(rating_text)
                              + " is outside the declared scale");
        }
        const Index user = users->add(trim(fields[format.user_column]));
        const Index item = items->add(trim(fields[format.item_column]));
        ratings.push_back(Rating{user, item, value});
    }
    if (in.bad()) {
        throw IoError("error while reading '" + path + "'");
    }

    const std::size_t num_users = users->size();
    const std::size_t num_items = items->size();
    try {
        return RatingDataset(num_users, num_items, std::move(ratings), format.scale,
                             std::move(users), std::move(items));
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

DatasetStats dataset_stats(const RatingDataset& ds) {
    DatasetStats stats;
    stats.num_users = ds.num_users();
    stats.num_items = ds.num_items();
    stats.num_ratings = ds.num_ratings();
    const double cells = static_cast<double>(stats.num_users) * static_cast<double>(stats.num_items);
    stats.sparsity_percent = cells > 0.0
        ? 100.0 * (1.0 - static_cast<double>(stats.num_ratings) / cells)
        : 0.0;
    return stats;
}

double global_mean(const RatingDataset& ds) {
    if (ds.empty()) {
        throw ConfigError("global mean of an empty dataset");
    }
    double sum = 0.0;
    for (const Rating& r : ds.ratings()) {
        sum += r.value;
    }
    return sum / static_cast<double>(ds.num_ratings());
}

std::vector<FoldSplit> kfold_split(const RatingDataset& ds, std::size_t k, std::uint64_t seed) {
    if (k < 2) {
        throw ConfigError("k-fold split needs k >= 2");
    }
    const std::size_t n = ds.num_ratings();
    if (k > n) {
        throw ConfigError("k-fold split needs at least k ratings");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(order[i], order[j]);
    }

    // fold_of[r] = test fold of rating r
    std::vector<std::size_t> fold_of(n);
    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        for (std::size_t j = 0; j < size; ++j) {
            fold_of[order[pos++]] = f;
        }
    }

    const auto all = ds.ratings();
    std::vector<FoldSplit> folds;
    folds.reserve(k);
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<Rating> train;
        std::vector<Rating> test;
        train.reserve(n - base);
        test.reserve(base + 1);
        for (std::size_t r = 0; r < n; ++r) {
            (fold_of[r] == f ? test : train).push_back(all[r]);
        }
        folds.push_back(FoldSplit{f, ds.subset(std::move(train)), std::move(test)});
    }
    return folds;
}

} // namespace mfcf
