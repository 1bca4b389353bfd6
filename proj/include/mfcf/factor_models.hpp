#pragma once

// PMF, BiasedMF and NMF: dot-product models over user factors P and item
// factors Q, optionally with global/user/item bias terms.

#include "mfcf/matrix.hpp"
#include "mfcf/model.hpp"
#include "mfcf/random.hpp"

#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace mfcf {

struct BiasTerms {
    double mean = 0.0;
    std::vector<double> user;
    std::vector<double> item;

    friend bool operator==(const BiasTerms&, const BiasTerms&) = default;
};

class FactorModel final : public Model {
public:
    FactorModel(ModelConfig config, TrainingSupport support, Matrix user_factors,
                Matrix item_factors, std::optional<BiasTerms> biases = std::nullopt);

    const Matrix& user_factors() const { return p_; }
    const Matrix& item_factors() const { return q_; }
    const std::optional<BiasTerms>& biases() const { return biases_; }

    /// Raw mu + b_u + b_i + p_u . q_i (bias terms only for BiasedMF).
    double raw_score(Index user, Index item) const;

    /// PMF: regularized squared error; BiasedMF: its half-scaled objective;
    /// NMF: plain squared error.
    double training_loss(const RatingDataset& train) const override;

protected:
    double predict_seen(Index user, Index item) const override;
    double predict_cold(Index user, Index item) const override;
    void save_parameters(std::ostream& out) const override;

private:
    Matrix p_;
    Matrix q_;
    std::optional<BiasTerms> biases_;
};

/// rows x cols matrix with entries uniform on (lo, hi).
Matrix random_matrix(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng);

/// Throws DivergenceError when any entry is non-finite or exceeds
/// kDivergenceLimit in magnitude.
void check_divergence(const Matrix& m, const ModelConfig& config);

namespace pmf {

// Objective: sum over ratings of e_ui^2 + reg/2 (|p_u|^2 + |q_i|^2).
// Each sweep applies, rating by rating in index order, the per-rating step
// p <- p + lr (2 e q - reg p) (users) or q <- q + lr (2 e p - reg q) (items).

void user_sweep(Matrix& p, const Matrix& q, const RatingDataset& train, double lr, double reg);
void item_sweep(const Matrix& p, Matrix& q, const RatingDataset& train, double lr, double reg);
double objective(const Matrix& p, const Matrix& q, std::span<const Rating> ratings, double reg);
/// Exact gradient of objective(); grad_p/grad_q are resized and overwritten.
void gradient(const Matrix& p, const Matrix& q, std::span<const Rating> ratings, double reg,
              Matrix& grad_p, Matrix& grad_q);

} // namespace pmf

namespace biasedmf {

struct State {
    Matrix p;
    Matrix q;
    BiasTerms biases;
};

// Objective: 1/2 sum over ratings of e_ui^2 + reg (b_u^2 + b_i^2 + |p_u|^2 + |q_i|^2),
// e_ui = r_ui - (mu + b_u + b_i + p_u . q_i), mu held fixed. The per-rating
// steps b_u += lr (e - reg b_u), p_u += lr (e q_i - reg p_u) (and the item
// counterparts) are exact negative-gradient steps of one rating's term.

void user_sweep(State& s, const RatingDataset& train, double lr, double reg);
void item_sweep(State& s, const RatingDataset& train, double lr, double reg);
double objective(const State& s, std::span<const Rating> ratings, double reg);
/// Gradient with respect to p, q, user and item biases (mean untouched).
State gradient(const State& s, std::span<const Rating> ratings, double reg);

} // namespace biasedmf

namespace nmf {

inline constexpr double kStabilizer = 1e-9;

/// One round of masked multiplicative updates: all user rows from the
/// current Q, then all item rows from the new P. Only observed entries
/// contribute.
void iterate(Matrix& p, Matrix& q, const RatingDataset& train);
/// Sum of squared errors over the observed entries.
double objective(const Matrix& p, const Matrix& q, std::span<const Rating> ratings);

} // namespace nmf

std::unique_ptr<FactorModel> fit_pmf(const ModelConfig& config, const RatingDataset& train);
std::unique_ptr<FactorModel> fit_biasedmf(const ModelConfig& config, const RatingDataset& train);
std::unique_ptr<FactorModel> fit_nmf(const ModelConfig& config, const RatingDataset& train);

} // namespace mfcf
