#pragma once

#include "mfcf/data.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace mfcf {

enum class ModelKind { PMF, BiasedMF, NMF, BeMF, BNMF, URP };

inline constexpr ModelKind kAllModels[] = {ModelKind::PMF,  ModelKind::BiasedMF,
                                           ModelKind::NMF,  ModelKind::BeMF,
                                           ModelKind::BNMF, ModelKind::URP};

std::string_view to_string(ModelKind kind);
/// Case-insensitive; throws ConfigError for unknown names.
ModelKind parse_model_kind(std::string_view name);

/// Hyperparameters. Fields a model does not use are carried along untouched.
struct ModelConfig {
    ModelKind kind = ModelKind::PMF;
    std::size_t factors = 8;
    std::size_t iterations = 50;
    double learning_rate = 0.01;  // PMF, BiasedMF, BeMF
    double regularization = 0.05; // PMF, BiasedMF (lambda); BeMF (eta)
    double bnmf_alpha = 0.8;
    double bnmf_beta = 5.0;
    std::uint64_t seed = 42;

    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Factor magnitude above which training is declared divergent.
inline constexpr double kDivergenceLimit = 1e6;

/// Everything a trained model knows about its training data besides the
/// parameters themselves: dimensions, scale, mean, and which users and items
/// had at least one training rating.
struct TrainingSupport {
    ScoreScale scale;
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    double global_mean = 0.0;
    std::vector<std::uint8_t> user_seen;
    std::vector<std::uint8_t> item_seen;

    static TrainingSupport from(const RatingDataset& train);
    friend bool operator==(const TrainingSupport&, const TrainingSupport&) = default;
};

/// A trained, immutable model. predict() is safe for concurrent readers.
class Model {
public:
    virtual ~Model() = default;

    ModelKind kind() const { return config_.kind; }
    const ModelConfig& config() const { return config_; }
    const TrainingSupport& support() const { return support_; }
    const ScoreScale& scale() const { return support_.scale; }
    std::size_t num_users() const { return support_.num_users; }
    std::size_t num_items() const { return support_.num_items; }

    /// Rating prediction clamped to the score scale. Users or items without
    /// training ratings get the model's cold-start rule. Throws
    /// std::out_of_range for indices outside the training index space.
    double predict(Index user, Index item) const;

    /// Model-specific training objective on `train` (see each model).
    virtual double training_loss(const RatingDataset& train) const = 0;

    /// Writes the versioned text dump read back by load_model().
    void save(std::ostream& out) const;

protected:
    Model(ModelConfig config, TrainingSupport support)
        : config_(config), support_(std::move(support)) {}

    /// Unclamped prediction for a user and item that were both seen.
    virtual double predict_seen(Index user, Index item) const = 0;
    /// Unclamped prediction when the user or the item was not seen.
    virtual double predict_cold(Index user, Index item) const;
    virtual void save_parameters(std::ostream& out) const = 0;
    /// Throws std::out_of_range when user or item is outside the index space.
    void check_index(Index user, Index item) const;

private:
    ModelConfig config_;
    TrainingSupport support_;
};

/// Trains the model named by config.kind. Deterministic in (config, train).
/// Throws ConfigError for invalid configs or an empty training set and
/// DivergenceError when the factors blow up.
std::unique_ptr<Model> fit(const ModelConfig& config, const RatingDataset& train);

std::unique_ptr<Model> load_model(std::istream& in);
void save_model_file(const Model& model, const std::string& path);
std::unique_ptr<Model> load_model_file(const std::string& path);

} // namespace mfcf
