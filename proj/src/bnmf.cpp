#include "mfcf/bnmf.hpp"

#include "mfcf/error.hpp"
#include "mfcf/mathfns.hpp"
#include "mfcf/random.hpp"
#include "model_io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace mfcf {

double discretize_probability(double p, const ScoreScale& scale) {
    const std::size_t d = scale.num_scores();
    const double bin = std::floor(std::clamp(p, 0.0, 1.0) * static_cast<double>(d));
    return scale.score_at(std::min(static_cast<std::size_t>(bin), d - 1));
}

namespace bnmf {

double successes(double rating, const ScoreScale& scale) {
    return static_cast<double>(scale.index_of(rating));
}

BNMFPosterior initialize(const RatingDataset& train, std::size_t factors, double alpha,
                         double beta, std::uint64_t seed) {
    BNMFPosterior post;
    post.gamma = Matrix(train.num_users(), factors, alpha);
    post.eps_plus = Matrix(train.num_items(), factors, beta);
    post.eps_minus = Matrix(train.num_items(), factors, beta);
    post.lambda = Matrix(train.num_ratings(), factors);
    Rng rng(seed);
    for (std::size_t r = 0; r < post.lambda.rows(); ++r) {
        auto row = post.lambda.row(r);
        double total = 0.0;
        for (double& v : row) {
            v = rng.uniform();
            total += v;
        }
        for (double& v : row) {
            v /= total;
        }
    }
    update_parameters(post, train, alpha, beta);
    return post;
}

void update_responsibilities(BNMFPosterior& post, const RatingDataset& train) {
    const std::size_t k = post.gamma.cols();
    const double trials = static_cast<double>(train.scale().num_scores() - 1);

    Matrix psi_gamma(post.gamma.rows(), k);
    for (std::size_t j = 0; j < psi_gamma.values().size(); ++j) {
        psi_gamma.values()[j] = digamma(post.gamma.values()[j]);
    }
    Matrix psi_plus(post.eps_plus.rows(), k);
    Matrix psi_minus(post.eps_plus.rows(), k);
    Matrix psi_total(post.eps_plus.rows(), k);
    for (std::size_t j = 0; j < psi_plus.values().size(); ++j) {
        const double a = post.eps_plus.values()[j];
        const double b = post.eps_minus.values()[j];
        psi_plus.values()[j] = digamma(a);
        psi_minus.values()[j] = digamma(b);
        psi_total.values()[j] = digamma(a + b);
    }

    std::vector<double> logits(k);
    for (Index u = 0; u < train.num_users(); ++u) {
        const auto pg = psi_gamma.row(u);
        std::size_t r = train.user_offset(u);
        for (const Entry& e : train.user_ratings(u)) {
            const double plus = successes(e.value, train.scale());
            const double minus = trials - plus;
            const auto pp = psi_plus.row(e.index);
            const auto pm = psi_minus.row(e.index);
            const auto pt = psi_total.row(e.index);
            double top = -HUGE_VAL;
            for (std::size_t f = 0; f < k; ++f) {
                logits[f] = pg[f] + plus * pp[f] + minus * pm[f] - trials * pt[f];
                top = std::max(top, logits[f]);
            }
            auto lam = post.lambda.row(r++);
            double total = 0.0;
            for (std::size_t f = 0; f < k; ++f) {
                lam[f] = std::exp(logits[f] - top);
                total += lam[f];
            }
            for (double& v : lam) {
                v /= total;
            }
        }
    }
}

void update_parameters(BNMFPosterior& post, const RatingDataset& train, double alpha, double beta) {
    const std::size_t k = post.gamma.cols();
    const double trials = static_cast<double>(train.scale().num_scores() - 1);
    post.gamma = Matrix(train.num_users(), k, alpha);
    post.eps_plus = Matrix(train.num_items(), k, beta);
    post.eps_minus = Matrix(train.num_items(), k, beta);
    for (Index u = 0; u < train.num_users(); ++u) {
        auto g = post.gamma.row(u);
        std::size_t r = train.user_offset(u);
        for (const Entry& e : train.user_ratings(u)) {
            const double plus = successes(e.value, train.scale());
            const double minus = trials - plus;
            const auto lam = post.lambda.row(r++);
            auto ep = post.eps_plus.row(e.index);
            auto em = post.eps_minus.row(e.index);
            for (std::size_t f = 0; f < k; ++f) {
                g[f] += lam[f];
                ep[f] += lam[f] * plus;
                em[f] += lam[f] * minus;
            }
        }
    }
}

} // namespace bnmf

BNMFModel::BNMFModel(ModelConfig config, TrainingSupport support, BNMFPosterior posterior)
    : Model(config, std::move(support)), post_(std::move(posterior)) {
    const std::size_t k = post_.gamma.cols();
    if (post_.gamma.rows() != num_users() || post_.eps_plus.rows() != num_items()
        || post_.eps_minus.rows() != num_items() || post_.eps_plus.cols() != k
        || post_.eps_minus.cols() != k || post_.lambda.cols() != k) {
        throw FormatError("BNMF posterior shapes do not match the training index space");
    }
}

double BNMFModel::user_weight(Index user, std::size_t k) const {
    const auto g = post_.gamma.row(user);
    double total = 0.0;
    for (double v : g) {
        total += v;
    }
    return g[k] / total;
}

double BNMFModel::item_weight(Index item, std::size_t k) const {
    const double a = post_.eps_plus(item, k);
    return a / (a + post_.eps_minus(item, k));
}

double BNMFModel::probability(Index user, Index item) const {
    check_index(user, item);
    const auto g = post_.gamma.row(user);
    double total = 0.0;
    for (double v : g) {
        total += v;
    }
    double p = 0.0;
    for (std::size_t f = 0; f < g.size(); ++f) {
        p += g[f] / total * item_weight(item, f);
    }
    return p;
}

double BNMFModel::discrete_prediction(Index user, Index item) const {
    return discretize_probability(probability(user, item), scale());
}

double BNMFModel::predict_seen(Index user, Index item) const {
    return scale().min_score + probability(user, item) * scale().range();
}

double BNMFModel::training_loss(const RatingDataset& train) const {
    const std::size_t k = post_.gamma.cols();
    const double trials = static_cast<double>(train.scale().num_scores() - 1);
    double total = 0.0;
    for (const Rating& r : train.ratings()) {
        const double x = bnmf::successes(r.value, train.scale());
        const double log_choose = std::lgamma(trials + 1.0) - std::lgamma(x + 1.0) - std::lgamma(trials - x + 1.0);
        double mix = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
            const double b = item_weight(r.item, f);
            mix += user_weight(r.user, f) * std::exp(log_choose + x * std::log(b) + (trials - x) * std::log1p(-b));
        }
        total -= std::log(mix);
    }
    return total;
}

void BNMFModel::save_parameters(std::ostream& out) const {
    io::write_matrix(out, "gamma", post_.gamma);
    io::write_matrix(out, "eps_plus", post_.eps_plus);
    io::write_matrix(out, "eps_minus", post_.eps_minus);
    io::write_matrix(out, "lambda", post_.lambda);
}

std::unique_ptr<BNMFModel> fit_bnmf(const ModelConfig& config, const RatingDataset& train) {
    BNMFPosterior post = bnmf::initialize(train, config.factors, config.bnmf_alpha,
                                          config.bnmf_beta, config.seed);
    for (std::size_t it = 0; it < config.iterations; ++it) {
        bnmf::update_responsibilities(post, train);
        bnmf::update_parameters(post, train, config.bnmf_alpha, config.bnmf_beta);
    }
    return std::make_unique<BNMFModel>(config, TrainingSupport::from(train), std::move(post));
}

} // namespace mfcf
