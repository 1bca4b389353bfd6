#pragma once

// User Rating Profile model: each user is a Dirichlet mixture of K
// attitudes, each attitude a per-item multinomial over the V scores.
// Fitted by variational EM.

#include "mfcf/matrix.hpp"
#include "mfcf/model.hpp"

#include <memory>
#include <vector>

namespace mfcf {

struct URPPosterior {
    std::vector<double> alpha; // K, Dirichlet prior
    Matrix gamma;              // users x K, variational Dirichlet
    /// Attitude responsibilities, one row per training rating in by-user order.
    Matrix phi;
    /// Row item * K + z holds the distribution over the V scores.
    Matrix beta;
    /// Number of alpha updates rejected because the fixed point left the
    /// positive reals.
    std::size_t alpha_skips = 0;

    std::size_t factors() const { return alpha.size(); }
    std::span<const double> score_distribution(Index item, std::size_t z) const {
        return beta.row(static_cast<std::size_t>(item) * factors() + z);
    }

    friend bool operator==(const URPPosterior&, const URPPosterior&) = default;
};

namespace urp {

/// Additive smoothing applied to every (score, item, attitude) count before
/// normalizing beta over scores.
inline constexpr double kBetaSmoothing = 0.1;
inline constexpr std::size_t kAlphaFixedPointSteps = 10;

/// Random phi (normalized uniforms), alpha = 1, then gamma and beta from phi.
URPPosterior initialize(const RatingDataset& train, std::size_t factors, std::uint64_t seed);

/// Per user: phi_zy proportional to beta_{r_y, y, z} exp(psi(gamma_z) - psi(sum_j gamma_j)),
/// then gamma_z = alpha_z + sum_y phi_zy.
void e_step(URPPosterior& post, const RatingDataset& train);

/// beta_vyz proportional to sum_u phi_zy [r_uy == v] + smoothing.
void update_beta(URPPosterior& post, const RatingDataset& train);

/// Fixed point psi(alpha_z) = psi(sum alpha) + mean_u (psi(gamma_uz) - psi(sum_j gamma_uj)),
/// inverted with inverse_digamma; gamma is then recomputed from the new alpha.
/// Returns false (and counts a skip) if the iteration left the domain.
bool update_alpha(URPPosterior& post, const RatingDataset& train);

void iterate(URPPosterior& post, const RatingDataset& train);

} // namespace urp

class URPModel final : public Model {
public:
    URPModel(ModelConfig config, TrainingSupport support, URPPosterior posterior);

    const URPPosterior& posterior() const { return post_; }

    /// P(r = s_v) = sum_z (gamma_z / sum gamma) beta_{v, item, z}.
    std::vector<double> rating_distribution(Index user, Index item) const;
    /// Mean of rating_distribution(); predict() reports its mode instead.
    double expected_rating(Index user, Index item) const;

    /// Negative log-likelihood of the training ratings under the posterior mean.
    double training_loss(const RatingDataset& train) const override;

protected:
    double predict_seen(Index user, Index item) const override;
    void save_parameters(std::ostream& out) const override;

private:
    URPPosterior post_;
};

std::unique_ptr<URPModel> fit_urp(const ModelConfig& config, const RatingDataset& train);

} // namespace mfcf
