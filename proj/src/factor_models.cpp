#include "mfcf/factor_models.hpp"

#include "mfcf/error.hpp"
#include "model_io.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace mfcf {

FactorModel::FactorModel(ModelConfig config, TrainingSupport support, Matrix user_factors,
                         Matrix item_factors, std::optional<BiasTerms> biases)
    : Model(config, std::move(support)), p_(std::move(user_factors)),
      q_(std::move(item_factors)), biases_(std::move(biases)) {
    if (p_.rows() != num_users() || q_.rows() != num_items() || p_.cols() != q_.cols()) {
        throw FormatError("factor matrix shapes do not match the training index space");
    }
    if (biases_ && (biases_->user.size() != num_users() || biases_->item.size() != num_items())) {
        throw FormatError("bias vector sizes do not match the training index space");
    }
}

double FactorModel::raw_score(Index user, Index item) const {
    double s = dot(p_.row(user), q_.row(item));
    if (biases_) {
        s += biases_->mean + biases_->user[user] + biases_->item[item];
    }
    return s;
}

double FactorModel::predict_seen(Index user, Index item) const {
    return raw_score(user, item);
}

double FactorModel::predict_cold(Index user, Index item) const {
    if (!biases_) {
        return support().global_mean;
    }
    double s = biases_->mean;
    if (support().user_seen[user]) {
        s += biases_->user[user];
    }
    if (support().item_seen[item]) {
        s += biases_->item[item];
    }
    return s;
}

double FactorModel::training_loss(const RatingDataset& train) const {
    const double reg = config().regularization;
    switch (kind()) {
    case ModelKind::PMF:
        return pmf::objective(p_, q_, train.ratings(), reg);
    case ModelKind::BiasedMF:
        return biasedmf::objective(biasedmf::State{p_, q_, *biases_}, train.ratings(), reg);
    default:
        return nmf::objective(p_, q_, train.ratings());
    }
}

void FactorModel::save_parameters(std::ostream& out) const {
    io::write_matrix(out, "P", p_);
    io::write_matrix(out, "Q", q_);
    if (biases_) {
        io::write_scalar(out, "mu", biases_->mean);
        io::write_vector(out, "b_user", biases_->user);
        io::write_vector(out, "b_item", biases_->item);
    }
}

Matrix random_matrix(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.values()) {
        v = rng.uniform(lo, hi);
    }
    return m;
}

void check_divergence(const Matrix& m, const ModelConfig& config) {
    if (m.max_abs() > kDivergenceLimit) {
        std::ostringstream msg;
        msg << to_string(config.kind) << " diverged (learning_rate=" << config.learning_rate
            << ", regularization=" << config.regularization << ", factors=" << config.factors << ")";
        throw DivergenceError(msg.str());
    }
}

namespace {

void check_divergence(std::span<const double> v, const ModelConfig& config) {
    for (double x : v) {
        if (!std::isfinite(x) || std::abs(x) > kDivergenceLimit) {
            Matrix m(1, 1, HUGE_VAL);
            check_divergence(m, config);
        }
    }
}

double initial_bound(std::size_t factors) {
    return 1.0 / std::sqrt(static_cast<double>(factors));
}

} // namespace

namespace pmf {

void user_sweep(Matrix& p, const Matrix& q, const RatingDataset& train, double lr, double reg) {
    for (Index u = 0; u < train.num_users(); ++u) {
        auto pu = p.row(u);
        for (const Entry& e : train.user_ratings(u)) {
            const auto qi = q.row(e.index);
            const double err = e.value - dot(pu, qi);
            for (std::size_t k = 0; k < pu.size(); ++k) {
                pu[k] += lr * (2.0 * err * qi[k] - reg * pu[k]);
            }
        }
    }
}

void item_sweep(const Matrix& p, Matrix& q, const RatingDataset& train, double lr, double reg) {
    for (Index i = 0; i < train.num_items(); ++i) {
        auto qi = q.row(i);
        for (const Entry& e : train.item_ratings(i)) {
            const auto pu = p.row(e.index);
            const double err = e.value - dot(pu, qi);
            for (std::size_t k = 0; k < qi.size(); ++k) {
                qi[k] += lr * (2.0 * err * pu[k] - reg * qi[k]);
            }
        }
    }
}

double objective(const Matrix& p, const Matrix& q, std::span<const Rating> ratings, double reg) {
    double total = 0.0;
    for (const Rating& r : ratings) {
        const auto pu = p.row(r.user);
        const auto qi = q.row(r.item);
        const double err = r.value - dot(pu, qi);
        total += err * err + 0.5 * reg * (dot(pu, pu) + dot(qi, qi));
    }
    return total;
}

void gradient(const Matrix& p, const Matrix& q, std::span<const Rating> ratings, double reg,
              Matrix& grad_p, Matrix& grad_q) {
    grad_p = Matrix(p.rows(), p.cols());
    grad_q = Matrix(q.rows(), q.cols());
    for (const Rating& r : ratings) {
        const auto pu = p.row(r.user);
        const auto qi = q.row(r.item);
        const double err = r.value - dot(pu, qi);
        auto gp = grad_p.row(r.user);
        auto gq = grad_q.row(r.item);
        for (std::size_t k = 0; k < pu.size(); ++k) {
            gp[k] += -2.0 * err * qi[k] + reg * pu[k];
            gq[k] += -2.0 * err * pu[k] + reg * qi[k];
        }
    }
}

} // namespace pmf

namespace biasedmf {

namespace {

double error_of(const State& s, Index u, Index i, double value) {
    return value - (s.biases.mean + s.biases.user[u] + s.biases.item[i] + dot(s.p.row(u), s.q.row(i)));
}

} // namespace

void user_sweep(State& s, const RatingDataset& train, double lr, double reg) {
    for (Index u = 0; u < train.num_users(); ++u) {
        auto pu = s.p.row(u);
        double& bu = s.biases.user[u];
        for (const Entry& e : train.user_ratings(u)) {
            const auto qi = s.q.row(e.index);
            const double err = error_of(s, u, e.index, e.value);
            bu += lr * (err - reg * bu);
            for (std::size_t k = 0; k < pu.size(); ++k) {
                pu[k] += lr * (err * qi[k] - reg * pu[k]);
            }
        }
    }
}

void item_sweep(State& s, const RatingDataset& train, double lr, double reg) {
    for (Index i = 0; i < train.num_items(); ++i) {
        auto qi = s.q.row(i);
        double& bi = s.biases.item[i];
        for (const Entry& e : train.item_ratings(i)) {
            const auto pu = s.p.row(e.index);
            const double err = error_of(s, e.index, i, e.value);
            bi += lr * (err - reg * bi);
            for (std::size_t k = 0; k < qi.size(); ++k) {
                qi[k] += lr * (err * pu[k] - reg * qi[k]);
            }
        }
    }
}

double objective(const State& s, std::span<const Rating> ratings, double reg) {
    double total = 0.0;
    for (const Rating& r : ratings) {
        const auto pu = s.p.row(r.user);
        const auto qi = s.q.row(r.item);
        const double bu = s.biases.user[r.user];
        const double bi = s.biases.item[r.item];
        const double err = error_of(s, r.user, r.item, r.value);
        total += 0.5 * (err * err + reg * (bu * bu + bi * bi + dot(pu, pu) + dot(qi, qi)));
    }
    return total;
}

State gradient(const State& s, std::span<const Rating> ratings, double reg) {
    State g{Matrix(s.p.rows(), s.p.cols()), Matrix(s.q.rows(), s.q.cols()),
            BiasTerms{0.0, std::vector<double>(s.biases.user.size()),
                      std::vector<double>(s.biases.item.size())}};
    for (const Rating& r : ratings) {
        const auto pu = s.p.row(r.user);
        const auto qi = s.q.row(r.item);
        const double err = error_of(s, r.user, r.item, r.value);
        g.biases.user[r.user] += -err + reg * s.biases.user[r.user];
        g.biases.item[r.item] += -err + reg * s.biases.item[r.item];
        auto gp = g.p.row(r.user);
        auto gq = g.q.row(r.item);
        for (std::size_t k = 0; k < pu.size(); ++k) {
            gp[k] += -err * qi[k] + reg * pu[k];
            gq[k] += -err * pu[k] + reg * qi[k];
        }
    }
    return g;
}

} // namespace biasedmf

namespace nmf {

void iterate(Matrix& p, Matrix& q, const RatingDataset& train) {
    const std::size_t k = p.cols();
    std::vector<double> num(k);
    std::vector<double> den(k);
    for (Index u = 0; u < train.num_users(); ++u) {
        auto pu = p.row(u);
        std::fill(num.begin(), num.end(), 0.0);
        std::fill(den.begin(), den.end(), 0.0);
        for (const Entry& e : train.user_ratings(u)) {
            const auto qi = q.row(e.index);
            const double pred = dot(pu, qi);
            for (std::size_t f = 0; f < k; ++f) {
                num[f] += e.value * qi[f];
                den[f] += pred * qi[f];
            }
        }
        if (train.user_ratings(u).empty()) {
            continue;
        }
        for (std::size_t f = 0; f < k; ++f) {
            pu[f] *= num[f] / (den[f] + kStabilizer);
        }
    }
    for (Index i = 0; i < train.num_items(); ++i) {
        auto qi = q.row(i);
        std::fill(num.begin(), num.end(), 0.0);
        std::fill(den.begin(), den.end(), 0.0);
        for (const Entry& e : train.item_ratings(i)) {
            const auto pu = p.row(e.index);
            const double pred = dot(pu, qi);
            for (std::size_t f = 0; f < k; ++f) {
                num[f] += e.value * pu[f];
                den[f] += pred * pu[f];
            }
        }
        if (train.item_ratings(i).empty()) {
            continue;
        }
        for (std::size_t f = 0; f < k; ++f) {
            qi[f] *= num[f] / (den[f] + kStabilizer);
        }
    }
}

double objective(const Matrix& p, const Matrix& q, std::span<const Rating> ratings) {
    double total = 0.0;
    for (const Rating& r : ratings) {
        const double err = r.value - dot(p.row(r.user), q.row(r.item));
        total += err * err;
    }
    return total;
}

} // namespace nmf

std::unique_ptr<FactorModel> fit_pmf(const ModelConfig& config, const RatingDataset& train) {
    Rng rng(config.seed);
    const double bound = initial_bound(config.factors);
    Matrix p = random_matrix(train.num_users(), config.factors, 0.0, bound, rng);
    Matrix q = random_matrix(train.num_items(), config.factors, 0.0, bound, rng);
    for (std::size_t it = 0; it < config.iterations; ++it) {
        pmf::user_sweep(p, q, train, config.learning_rate, config.regularization);
        check_divergence(p, config);
        pmf::item_sweep(p, q, train, config.learning_rate, config.regularization);
        check_divergence(q, config);
    }
    return std::make_unique<FactorModel>(config, TrainingSupport::from(train), std::move(p), std::move(q));
}

std::unique_ptr<FactorModel> fit_biasedmf(const ModelConfig& config, const RatingDataset& train) {
    Rng rng(config.seed);
    const double bound = initial_bound(config.factors);
    biasedmf::State s;
    s.p = random_matrix(train.num_users(), config.factors, 0.0, bound, rng);
    s.q = random_matrix(train.num_items(), config.factors, 0.0, bound, rng);
    s.biases = BiasTerms{global_mean(train), std::vector<double>(train.num_users(), 0.0),
                         std::vector<double>(train.num_items(), 0.0)};
    for (std::size_t it = 0; it < config.iterations; ++it) {
        biasedmf::user_sweep(s, train, config.learning_rate, config.regularization);
        check_divergence(s.p, config);
        check_divergence(s.biases.user, config);
        biasedmf::item_sweep(s, train, config.learning_rate, config.regularization);
        check_divergence(s.q, config);
        check_divergence(s.biases.item, config);
    }
    return std::make_unique<FactorModel>(config, TrainingSupport::from(train), std::move(s.p),
                                         std::move(s.q), std::move(s.biases));
}

std::unique_ptr<FactorModel> fit_nmf(const ModelConfig& config, const RatingDataset& train) {
    if (train.scale().min_score < 0.0) {
        throw ConfigError("NMF needs nonnegative ratings");
    }
    Rng rng(config.seed);
    Matrix p = random_matrix(train.num_users(), config.factors, 0.1, 1.0, rng);
    Matrix q = random_matrix(train.num_items(), config.factors, 0.1, 1.0, rng);
    for (std::size_t it = 0; it < config.iterations; ++it) {
        nmf::iterate(p, q, train);
        check_divergence(p, config);
        check_divergence(q, config);
    }
    return std::make_unique<FactorModel>(config, TrainingSupport::from(train), std::move(p), std::move(q));
}

} // namespace mfcf
