#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mfcf {

using Index = std::uint32_t;

/// The discrete grid of legal scores {min, min + step, ..., max} plus the
/// relevance threshold used by the recommendation metrics.
struct ScoreScale {
    double min_score = 1.0;
    double max_score = 5.0;
    double step = 1.0;
    double threshold = 4.0;

    /// Throws ConfigError when the grid is not integral or the threshold is
    /// out of range.
    void validate() const;

    std::size_t num_scores() const;
    double score_at(std::size_t index) const { return min_score + step * static_cast<double>(index); }
    /// Grid index of a score; throws FormatError when value is not on the grid.
    std::size_t index_of(double value) const;
    bool contains(double value) const;
    double clamp(double value) const;
    double range() const { return max_score - min_score; }

    friend bool operator==(const ScoreScale&, const ScoreScale&) = default;
};

struct Rating {
    Index user = 0;
    Index item = 0;
    double value = 0.0;

    friend bool operator==(const Rating&, const Rating&) = default;
};

/// One side of the dual index: the other endpoint and the score.
struct Entry {
    Index index = 0;
    double value = 0.0;
};

/// Bijection between original string ids and dense indices.
class IdMap {
public:
    Index add(std::string_view id);
    const std::string& original(Index index) const { return ids_.at(index); }
    /// Returns the dense index, or -1 when the id is unknown.
    std::int64_t find(std::string_view id) const;
    std::size_t size() const { return ids_.size(); }

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, Index> lookup_;
};

/// Immutable sparse user x item rating matrix indexed both by user and by
/// item. Each per-user list is sorted by item and each per-item list by user.
class RatingDataset {
public:
    RatingDataset() = default;

    /// Validates the ratings (in range, on the scale grid, no duplicate pair)
    /// and builds both indices. Throws FormatError on violations.
    RatingDataset(std::size_t num_users, std::size_t num_items, std::vector<Rating> ratings,
                  ScoreScale scale, std::shared_ptr<const IdMap> user_ids = nullptr,
                  std::shared_ptr<const IdMap> item_ids = nullptr);

    std::size_t num_users() const { return num_users_; }
    std::size_t num_items() const { return num_items_; }
    std::size_t num_ratings() const { return ratings_.size(); }
    bool empty() const { return ratings_.empty(); }

    std::span<const Rating> ratings() const { return ratings_; }
    std::span<const Entry> user_ratings(Index user) const;
    std::span<const Entry> item_ratings(Index item) const;
    /// Offset of user's first rating in the concatenated by-user order.
    std::size_t user_offset(Index user) const { return user_offsets_[user]; }

    const ScoreScale& scale() const { return scale_; }
    const std::shared_ptr<const IdMap>& user_ids() const { return user_ids_; }
    const std::shared_ptr<const IdMap>& item_ids() const { return item_ids_; }

    /// Same index space, scale and id maps; a different rating subset.
    RatingDataset subset(std::vector<Rating> ratings) const;

private:
    std::size_t num_users_ = 0;
    std::size_t num_items_ = 0;
    std::vector<Rating> ratings_;
    std::vector<std::size_t> user_offsets_{0};
    std::vector<Entry> by_user_;
    std::vector<std::size_t> item_offsets_{0};
    std::vector<Entry> by_item_;
    ScoreScale scale_;
    std::shared_ptr<const IdMap> user_ids_;
    std::shared_ptr<const IdMap> item_ids_;
};

/// How to read a delimiter-separated ratings file.
struct DatasetFormat {
    /// Field separator; the literal "whitespace" splits on runs of blanks.
    std::string delimiter = ",";
    bool has_header = true;
    std::size_t user_column = 0;
    std::size_t item_column = 1;
    std::size_t rating_column = 2;
    ScoreScale scale;
    /// Rows whose rating field equals one of these are skipped (unrated
    /// placeholders).
    std::vector<std::string> skip_ratings;
};

/// Named format plus the conventional location of the file under a data root.
struct DatasetPreset {
    std::string name;
    std::string default_path;
    DatasetFormat format;
};

/// movielens, movielens100k, movielens1m, filmtrust, myanimelist.
const DatasetPreset& dataset_preset(std::string_view name);
std::vector<std::string> dataset_preset_names();

/// Parses one line into fields honoring double-quote escaping.
std::vector<std::string> split_fields(std::string_view line, std::string_view delimiter);

RatingDataset load_ratings(const std::string& path, const DatasetFormat& format);

struct DatasetStats {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::size_t num_ratings = 0;
    double sparsity_percent = 0.0;
};

DatasetStats dataset_stats(const RatingDataset& ds);

/// Mean of all rating values; throws ConfigError on an empty dataset.
double global_mean(const RatingDataset& ds);

struct FoldSplit {
    std::size_t fold_index = 0;
    RatingDataset train;
    std::vector<Rating> test;
};

/// Shuffles the ratings with Rng(seed) and cuts k contiguous test blocks
/// whose sizes differ by at most one (the first n % k blocks are larger).
std::vector<FoldSplit> kfold_split(const RatingDataset& ds, std::size_t k, std::uint64_t seed);

} // namespace mfcf
