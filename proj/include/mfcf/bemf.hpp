#pragma once

// Bernoulli matrix factorization: one logistic factorization per score of
// the scale, aggregated into a probability vector per (user, item).

#include "mfcf/matrix.hpp"
#include "mfcf/model.hpp"

#include <memory>
#include <span>
#include <vector>

namespace mfcf {

struct BeMFPrediction {
    double score = 0.0;
    double reliability = 0.0;
    std::size_t score_index = 0;
};

/// Normalizes positive per-score probabilities to sum 1 and picks the
/// argmax; ties go to the lowest score index.
struct Aggregate {
    std::vector<double> probabilities;
    std::size_t best = 0;
};
Aggregate aggregate_scores(std::span<const double> unnormalized);

class BeMFModel final : public Model {
public:
    /// One (P, Q) pair per score of the scale, in ascending score order.
    BeMFModel(ModelConfig config, TrainingSupport support, std::vector<Matrix> user_factors,
              std::vector<Matrix> item_factors);

    const std::vector<Matrix>& user_factors() const { return p_; }
    const std::vector<Matrix>& item_factors() const { return q_; }

    /// Normalized score distribution for a seen pair.
    std::vector<double> distribution(Index user, Index item) const;
    /// Predicted score and its probability. Cold pairs get the score nearest
    /// the training mean with reliability 1/D.
    BeMFPrediction predict_with_reliability(Index user, Index item) const;

    /// Sum over scores of the regularized log-likelihood (higher is better).
    double training_loss(const RatingDataset& train) const override;

protected:
    double predict_seen(Index user, Index item) const override;
    double predict_cold(Index user, Index item) const override;
    void save_parameters(std::ostream& out) const override;

private:
    std::vector<Matrix> p_;
    std::vector<Matrix> q_;
};

namespace bemf {

// For score index s the binary target is R_ui = 1 when r_ui is the s-th
// score and R_ui = 0 when r_ui is any other observed score. Objective:
//   sum_{R=1} log sigmoid(p_u.q_i) + sum_{R=0} log(1 - sigmoid(p_u.q_i))
//     - eta/2 (sum_u |p_u|^2 + sum_i |q_i|^2).
// The sweeps take one gradient-ascent step per row: all users with Q fixed,
// then all items with the new P.

void user_sweep(Matrix& p, const Matrix& q, const RatingDataset& train, std::size_t score_index,
                double lr, double eta);
void item_sweep(const Matrix& p, Matrix& q, const RatingDataset& train, std::size_t score_index,
                double lr, double eta);
double log_likelihood(const Matrix& p, const Matrix& q, const RatingDataset& train,
                      std::size_t score_index, double eta);
void gradient(const Matrix& p, const Matrix& q, const RatingDataset& train, std::size_t score_index,
              double eta, Matrix& grad_p, Matrix& grad_q);

} // namespace bemf

std::unique_ptr<BeMFModel> fit_bemf(const ModelConfig& config, const RatingDataset& train);

} // namespace mfcf
