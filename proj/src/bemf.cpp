#include "mfcf/bemf.hpp"

#include "mfcf/error.hpp"
#include "mfcf/factor_models.hpp"
#include "mfcf/mathfns.hpp"
#include "model_io.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace mfcf {

Aggregate aggregate_scores(std::span<const double> unnormalized) {
    Aggregate a;
    double total = 0.0;
    for (double v : unnormalized) {
        total += v;
    }
    a.probabilities.reserve(unnormalized.size());
    for (std::size_t s = 0; s < unnormalized.size(); ++s) {
        a.probabilities.push_back(unnormalized[s] / total);
        if (unnormalized[s] > unnormalized[a.best]) {
            a.best = s;
        }
    }
    return a;
}

BeMFModel::BeMFModel(ModelConfig config, TrainingSupport support, std::vector<Matrix> user_factors,
                     std::vector<Matrix> item_factors)
    : Model(config, std::move(support)), p_(std::move(user_factors)), q_(std::move(item_factors)) {
    const std::size_t d = scale().num_scores();
    if (p_.size() != d || q_.size() != d) {
        throw FormatError("BeMF needs one factor pair per score");
    }
    for (std::size_t s = 0; s < d; ++s) {
        if (p_[s].rows() != num_users() || q_[s].rows() != num_items() || p_[s].cols() != q_[s].cols()) {
            throw FormatError("BeMF factor shapes do not match the training index space");
        }
    }
}

std::vector<double> BeMFModel::distribution(Index user, Index item) const {
    std::vector<double> raw(p_.size());
    for (std::size_t s = 0; s < p_.size(); ++s) {
        raw[s] = sigmoid(dot(p_[s].row(user), q_[s].row(item)));
    }
    return aggregate_scores(raw).probabilities;
}

BeMFPrediction BeMFModel::predict_with_reliability(Index user, Index item) const {
    check_index(user, item);
    const auto& sup = support();
    if (!sup.user_seen[user] || !sup.item_seen[item]) {
        const ScoreScale& sc = scale();
        const auto index = static_cast<std::size_t>(std::clamp(
            std::round((sup.global_mean - sc.min_score) / sc.step), 0.0,
            static_cast<double>(sc.num_scores() - 1)));
        return {sc.score_at(index), 1.0 / static_cast<double>(sc.num_scores()), index};
    }
    std::vector<double> raw(p_.size());
    for (std::size_t s = 0; s < p_.size(); ++s) {
        raw[s] = sigmoid(dot(p_[s].row(user), q_[s].row(item)));
    }
    const Aggregate a = aggregate_scores(raw);
    return {scale().score_at(a.best), a.probabilities[a.best], a.best};
}

double BeMFModel::predict_seen(Index user, Index item) const {
    return predict_with_reliability(user, item).score;
}

double BeMFModel::predict_cold(Index user, Index item) const {
    return predict_with_reliability(user, item).score;
}

double BeMFModel::training_loss(const RatingDataset& train) const {
    double total = 0.0;
    for (std::size_t s = 0; s < p_.size(); ++s) {
        total += bemf::log_likelihood(p_[s], q_[s], train, s, config().regularization);
    }
    return total;
}

void BeMFModel::save_parameters(std::ostream& out) const {
    for (std::size_t s = 0; s < p_.size(); ++s) {
        io::write_matrix(out, "P" + std::to_string(s), p_[s]);
        io::write_matrix(out, "Q" + std::to_string(s), q_[s]);
    }
}

namespace bemf {

namespace {

// Whether a rating falls on one grid score; ratings are already validated to
// lie on the grid, so nearest-point comparison is enough.
class ScoreMatch {
public:
    ScoreMatch(const ScoreScale& scale, std::size_t score_index)
        : target_(scale.score_at(score_index)), half_step_(0.5 * scale.step) {}

    bool operator()(double value) const { return std::abs(value - target_) < half_step_; }

private:
    double target_;
    double half_step_;
};

// d/d(p.q) of the log-likelihood term of one observation.
double coefficient(bool match, double x) { return match ? 1.0 - sigmoid(x) : -sigmoid(x); }

// log sigmoid(x) and log(1 - sigmoid(x)) = log sigmoid(-x), stable.
double log_sigmoid(double x) {
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

} // namespace

void user_sweep(Matrix& p, const Matrix& q, const RatingDataset& train, std::size_t score_index,
                double lr, double eta) {
    const ScoreMatch match(train.scale(), score_index);
    std::vector<double> grad(p.cols());
    for (Index u = 0; u < train.num_users(); ++u) {
        auto pu = p.row(u);
        std::fill(grad.begin(), grad.end(), 0.0);
        for (const Entry& e : train.user_ratings(u)) {
            const auto qi = q.row(e.index);
            const double c = coefficient(match(e.value), dot(pu, qi));
            for (std::size_t k = 0; k < grad.size(); ++k) {
                grad[k] += c * qi[k];
            }
        }
        for (std::size_t k = 0; k < grad.size(); ++k) {
            pu[k] += lr * (grad[k] - eta * pu[k]);
        }
    }
}

void item_sweep(const Matrix& p, Matrix& q, const RatingDataset& train, std::size_t score_index,
                double lr, double eta) {
    const ScoreMatch match(train.scale(), score_index);
    std::vector<double> grad(q.cols());
    for (Index i = 0; i < train.num_items(); ++i) {
        auto qi = q.row(i);
        std::fill(grad.begin(), grad.end(), 0.0);
        for (const Entry& e : train.item_ratings(i)) {
            const auto pu = p.row(e.index);
            const double c = coefficient(match(e.value), dot(pu, qi));
            for (std::size_t k = 0; k < grad.size(); ++k) {
                grad[k] += c * pu[k];
            }
        }
        for (std::size_t k = 0; k < grad.size(); ++k) {
            qi[k] += lr * (grad[k] - eta * qi[k]);
        }
    }
}

double log_likelihood(const Matrix& p, const Matrix& q, const RatingDataset& train,
                      std::size_t score_index, double eta) {
    const ScoreMatch match(train.scale(), score_index);
    double total = 0.0;
    for (const Rating& r : train.ratings()) {
        const double x = dot(p.row(r.user), q.row(r.item));
        total += match(r.value) ? log_sigmoid(x) : log_sigmoid(-x);
    }
    double norms = 0.0;
    for (double v : p.values()) {
        norms += v * v;
    }
    for (double v : q.values()) {
        norms += v * v;
    }
    return total - 0.5 * eta * norms;
}

void gradient(const Matrix& p, const Matrix& q, const RatingDataset& train, std::size_t score_index,
              double eta, Matrix& grad_p, Matrix& grad_q) {
    grad_p = Matrix(p.rows(), p.cols());
    grad_q = Matrix(q.rows(), q.cols());
    const ScoreMatch match(train.scale(), score_index);
    for (const Rating& r : train.ratings()) {
        const auto pu = p.row(r.user);
        const auto qi = q.row(r.item);
        const double c = coefficient(match(r.value), dot(pu, qi));
        auto gp = grad_p.row(r.user);
        auto gq = grad_q.row(r.item);
        for (std::size_t k = 0; k < pu.size(); ++k) {
            gp[k] += c * qi[k];
            gq[k] += c * pu[k];
        }
    }
    for (std::size_t j = 0; j < p.values().size(); ++j) {
        grad_p.values()[j] -= eta * p.values()[j];
    }
    for (std::size_t j = 0; j < q.values().size(); ++j) {
        grad_q.values()[j] -= eta * q.values()[j];
    }
}

} // namespace bemf

std::unique_ptr<BeMFModel> fit_bemf(const ModelConfig& config, const RatingDataset& train) {
    const std::size_t d = train.scale().num_scores();
    Rng rng(config.seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(config.factors));
    std::vector<Matrix> p;
    std::vector<Matrix> q;
    for (std::size_t s = 0; s < d; ++s) {
        p.push_back(random_matrix(train.num_users(), config.factors, 0.0, bound, rng));
        q.push_back(random_matrix(train.num_items(), config.factors, 0.0, bound, rng));
    }
    for (std::size_t it = 0; it < config.iterations; ++it) {
        for (std::size_t s = 0; s < d; ++s) {
            bemf::user_sweep(p[s], q[s], train, s, config.learning_rate, config.regularization);
            check_divergence(p[s], config);
            bemf::item_sweep(p[s], q[s], train, s, config.learning_rate, config.regularization);
            check_divergence(q[s], config);
        }
    }
    return std::make_unique<BeMFModel>(config, TrainingSupport::from(train), std::move(p), std::move(q));
}

} // namespace mfcf
