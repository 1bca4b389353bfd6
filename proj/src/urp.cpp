#include "mfcf/urp.hpp"

#include "mfcf/error.hpp"
#include "mfcf/mathfns.hpp"
#include "mfcf/random.hpp"
#include "model_io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace mfcf {

namespace urp {

namespace {

void recompute_gamma(URPPosterior& post, const RatingDataset& train) {
    const std::size_t k = post.factors();
    for (Index u = 0; u < train.num_users(); ++u) {
        auto g = post.gamma.row(u);
        std::copy(post.alpha.begin(), post.alpha.end(), g.begin());
        const std::size_t first = train.user_offset(u);
        for (std::size_t r = first; r < first + train.user_ratings(u).size(); ++r) {
            const auto ph = post.phi.row(r);
            for (std::size_t z = 0; z < k; ++z) {
                g[z] += ph[z];
            }
        }
    }
}

} // namespace

URPPosterior initialize(const RatingDataset& train, std::size_t factors, std::uint64_t seed) {
    URPPosterior post;
    post.alpha.assign(factors, 1.0);
    post.gamma = Matrix(train.num_users(), factors);
    post.phi = Matrix(train.num_ratings(), factors);
    post.beta = Matrix(train.num_items() * factors, train.scale().num_scores());
    Rng rng(seed);
    for (std::size_t r = 0; r < post.phi.rows(); ++r) {
        auto row = post.phi.row(r);
        double total = 0.0;
        for (double& v : row) {
            v = rng.uniform();
            total += v;
        }
        for (double& v : row) {
            v /= total;
        }
    }
    recompute_gamma(post, train);
    update_beta(post, train);
    return post;
}

void e_step(URPPosterior& post, const RatingDataset& train) {
    const std::size_t k = post.factors();
    std::vector<double> psi_gamma(k);
    std::vector<double> logits(k);
    for (Index u = 0; u < train.num_users(); ++u) {
        auto g = post.gamma.row(u);
        for (std::size_t z = 0; z < k; ++z) {
            psi_gamma[z] = digamma(g[z]);
        }
        std::size_t r = train.user_offset(u);
        for (const Entry& e : train.user_ratings(u)) {
            const std::size_t v = train.scale().index_of(e.value);
            double top = -HUGE_VAL;
            for (std::size_t z = 0; z < k; ++z) {
                logits[z] = std::log(post.score_distribution(e.index, z)[v]) + psi_gamma[z];
                top = std::max(top, logits[z]);
            }
            auto ph = post.phi.row(r++);
            double total = 0.0;
            for (std::size_t z = 0; z < k; ++z) {
                ph[z] = std::exp(logits[z] - top);
                total += ph[z];
            }
            for (double& x : ph) {
                x /= total;
            }
        }
        std::copy(post.alpha.begin(), post.alpha.end(), g.begin());
        const std::size_t first = train.user_offset(u);
        for (std::size_t row = first; row < r; ++row) {
            const auto ph = post.phi.row(row);
            for (std::size_t z = 0; z < k; ++z) {
                g[z] += ph[z];
            }
        }
    }
}

void update_beta(URPPosterior& post, const RatingDataset& train) {
    const std::size_t k = post.factors();
    const std::size_t v_count = post.beta.cols();
    std::fill(post.beta.values().begin(), post.beta.values().end(), kBetaSmoothing);
    for (Index u = 0; u < train.num_users(); ++u) {
        std::size_t r = train.user_offset(u);
        for (const Entry& e : train.user_ratings(u)) {
            const std::size_t v = train.scale().index_of(e.value);
            const auto ph = post.phi.row(r++);
            for (std::size_t z = 0; z < k; ++z) {
                post.beta(static_cast<std::size_t>(e.index) * k + z, v) += ph[z];
            }
        }
    }
    for (std::size_t row = 0; row < post.beta.rows(); ++row) {
        auto b = post.beta.row(row);
        double total = 0.0;
        for (std::size_t v = 0; v < v_count; ++v) {
            total += b[v];
        }
        for (double& x : b) {
            x /= total;
        }
    }
}

bool update_alpha(URPPosterior& post, const RatingDataset& train) {
    const std::size_t k = post.factors();
    const std::size_t n = post.gamma.rows();
    if (n == 0) {
        return true;
    }
    std::vector<double> mean_log(k, 0.0);
    for (std::size_t u = 0; u < n; ++u) {
        const auto g = post.gamma.row(u);
        double total = 0.0;
        for (double x : g) {
            total += x;
        }
        const double psi_total = digamma(total);
        for (std::size_t z = 0; z < k; ++z) {
            mean_log[z] += digamma(g[z]) - psi_total;
        }
    }
    for (double& m : mean_log) {
        m /= static_cast<double>(n);
    }

    std::vector<double> alpha = post.alpha;
    for (std::size_t step = 0; step < kAlphaFixedPointSteps; ++step) {
        double total = 0.0;
        for (double a : alpha) {
            total += a;
        }
        const double psi_total = digamma(total);
        for (std::size_t z = 0; z < k; ++z) {
            alpha[z] = inverse_digamma(psi_total + mean_log[z]);
        }
        for (double a : alpha) {
            if (!std::isfinite(a) || !(a > 0.0)) {
                ++post.alpha_skips;
                return false;
            }
        }
    }
    post.alpha = std::move(alpha);
    recompute_gamma(post, train);
    return true;
}

void iterate(URPPosterior& post, const RatingDataset& train) {
    e_step(post, train);
    update_beta(post, train);
    update_alpha(post, train);
}

} // namespace urp

URPModel::URPModel(ModelConfig config, TrainingSupport support, URPPosterior posterior)
    : Model(config, std::move(support)), post_(std::move(posterior)) {
    const std::size_t k = post_.factors();
    if (k == 0 || post_.gamma.rows() != num_users() || post_.gamma.cols() != k
        || post_.phi.cols() != k || post_.beta.rows() != num_items() * k
        || post_.beta.cols() != scale().num_scores()) {
        throw FormatError("URP posterior shapes do not match the training index space");
    }
}

std::vector<double> URPModel::rating_distribution(Index user, Index item) const {
    check_index(user, item);
    const auto g = post_.gamma.row(user);
    double total = 0.0;
    for (double x : g) {
        total += x;
    }
    std::vector<double> dist(scale().num_scores(), 0.0);
    for (std::size_t z = 0; z < g.size(); ++z) {
        const double theta = g[z] / total;
        const auto b = post_.score_distribution(item, z);
        for (std::size_t v = 0; v < dist.size(); ++v) {
            dist[v] += theta * b[v];
        }
    }
    return dist;
}

double URPModel::predict_seen(Index user, Index item) const {
    const auto dist = rating_distribution(user, item);
    std::size_t best = 0;
    for (std::size_t v = 1; v < dist.size(); ++v) {
        if (dist[v] > dist[best]) {
            best = v;
        }
    }
    return scale().score_at(best);
}

double URPModel::expected_rating(Index user, Index item) const {
    const auto dist = rating_distribution(user, item);
    double expected = 0.0;
    for (std::size_t v = 0; v < dist.size(); ++v) {
        expected += scale().score_at(v) * dist[v];
    }
    return expected;
}

double URPModel::training_loss(const RatingDataset& train) const {
    double total = 0.0;
    for (const Rating& r : train.ratings()) {
        total -= std::log(rating_distribution(r.user, r.item)[train.scale().index_of(r.value)]);
    }
    return total;
}

void URPModel::save_parameters(std::ostream& out) const {
    io::write_vector(out, "alpha", post_.alpha);
    io::write_matrix(out, "gamma", post_.gamma);
    io::write_matrix(out, "phi", post_.phi);
    io::write_matrix(out, "beta", post_.beta);
    io::write_scalar(out, "alpha_skips", static_cast<double>(post_.alpha_skips));
}

std::unique_ptr<URPModel> fit_urp(const ModelConfig& config, const RatingDataset& train) {
    URPPosterior post = urp::initialize(train, config.factors, config.seed);
    for (std::size_t it = 0; it < config.iterations; ++it) {
        urp::iterate(post, train);
    }
    return std::make_unique<URPModel>(config, TrainingSupport::from(train), std::move(post));
}

} // namespace mfcf
