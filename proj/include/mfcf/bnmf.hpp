#pragma once

// Bayesian NMF with a variational posterior: Dirichlet user memberships
// (gamma), Beta item-factor success rates (eps+, eps-) and categorical
// per-rating responsibilities (lambda).

#include "mfcf/matrix.hpp"
#include "mfcf/model.hpp"

#include <memory>

namespace mfcf {

struct BNMFPosterior {
    Matrix gamma;     // users x K
    Matrix eps_plus;  // items x K
    Matrix eps_minus; // items x K
    /// One row per training rating, in the dataset's by-user order.
    Matrix lambda;

    friend bool operator==(const BNMFPosterior&, const BNMFPosterior&) = default;
};

/// Maps p in [0, 1] onto the score grid with D equal-width bins.
double discretize_probability(double p, const ScoreScale& scale);

namespace bnmf {

/// Number of binomial successes (D - 1) r* for a rating, r* = (r - min) / (max - min).
double successes(double rating, const ScoreScale& scale);

/// Random responsibilities (normalized uniforms) followed by the matching
/// gamma/eps update so the first pass starts from an asymmetric posterior.
BNMFPosterior initialize(const RatingDataset& train, std::size_t factors, double alpha,
                         double beta, std::uint64_t seed);

/// lambda_uik proportional to exp(psi(gamma_uk) + r+ psi(eps+_ik) + r- psi(eps-_ik)
///   - (D - 1) psi(eps+_ik + eps-_ik)), normalized over k in log space.
void update_responsibilities(BNMFPosterior& post, const RatingDataset& train);

/// gamma_uk = alpha + sum_i lambda_uik, eps+_ik = beta + sum_u lambda_uik r+_ui,
/// eps-_ik = beta + sum_u lambda_uik r-_ui.
void update_parameters(BNMFPosterior& post, const RatingDataset& train, double alpha, double beta);

} // namespace bnmf

class BNMFModel final : public Model {
public:
    BNMFModel(ModelConfig config, TrainingSupport support, BNMFPosterior posterior);

    const BNMFPosterior& posterior() const { return post_; }

    /// p_ui = sum_k a_uk b_ik with a_uk = gamma_uk / sum_k gamma_uk and
    /// b_ik = eps+_ik / (eps+_ik + eps-_ik); always in [0, 1].
    double probability(Index user, Index item) const;
    double user_weight(Index user, std::size_t k) const;
    double item_weight(Index item, std::size_t k) const;
    /// The binned score of probability(user, item).
    double discrete_prediction(Index user, Index item) const;

    /// Negative log-likelihood of the training ratings under the posterior
    /// mean binomial mixture.
    double training_loss(const RatingDataset& train) const override;

protected:
    double predict_seen(Index user, Index item) const override;
    void save_parameters(std::ostream& out) const override;

private:
    BNMFPosterior post_;
};

std::unique_ptr<BNMFModel> fit_bnmf(const ModelConfig& config, const RatingDataset& train);

} // namespace mfcf
