#include "mfcf/model.hpp"

#include "mfcf/bemf.hpp"
#include "mfcf/bnmf.hpp"
#include "mfcf/error.hpp"
#include "mfcf/factor_models.hpp"
#include "mfcf/urp.hpp"
#include "model_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mfcf {

namespace {

constexpr std::string_view kMagic = "mfcf-model";
constexpr std::uint64_t kFormatVersion = 1;

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string seen_string(const std::vector<std::uint8_t>& seen) {
    std::string s;
    s.reserve(seen.size() + 1);
    for (auto b : seen) {
        s.push_back(b ? '1' : '0');
    }
    // keep the token non-empty for zero-length index spaces
    s.push_back('.');
    return s;
}

std::vector<std::uint8_t> parse_seen(const std::string& s, std::size_t n) {
    if (s.size() != n + 1 || s.back() != '.') {
        throw FormatError("model dump: seen-mask length mismatch");
    }
    std::vector<std::uint8_t> seen(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (s[j] != '0' && s[j] != '1') {
            throw FormatError("model dump: bad seen-mask");
        }
        seen[j] = s[j] == '1';
    }
    return seen;
}

} // namespace

std::string_view to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::PMF: return "PMF";
    case ModelKind::BiasedMF: return "BiasedMF";
    case ModelKind::NMF: return "NMF";
    case ModelKind::BeMF: return "BeMF";
    case ModelKind::BNMF: return "BNMF";
    case ModelKind::URP: return "URP";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    const std::string wanted = lower(name);
    for (ModelKind kind : kAllModels) {
        if (lower(to_string(kind)) == wanted) {
            return kind;
        }
    }
    throw ConfigError("unknown model '" + std::string(name)
                      + "' (expected PMF, BiasedMF, NMF, BeMF, BNMF or URP)");
}

void ModelConfig::validate() const {
    if (factors < 1) {
        throw ConfigError("factors must be >= 1");
    }
    if (iterations < 1) {
        throw ConfigError("iterations must be >= 1");
    }
    switch (kind) {
    case ModelKind::PMF:
    case ModelKind::BiasedMF:
    case ModelKind::BeMF:
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
            throw ConfigError("learning_rate must be a finite value >= 0");
        }
        if (!(regularization >= 0.0) || !std::isfinite(regularization)) {
            throw ConfigError("regularization must be a finite value >= 0");
        }
        break;
    case ModelKind::BNMF:
        if (!(bnmf_alpha > 0.0 && bnmf_alpha < 1.0)) {
            throw ConfigError("bnmf_alpha must lie in (0, 1)");
        }
        if (!(bnmf_beta > 0.0) || !std::isfinite(bnmf_beta)) {
            throw ConfigError("bnmf_beta must be > 0");
        }
        break;
    case ModelKind::NMF:
    case ModelKind::URP:
        break;
    }
}

TrainingSupport TrainingSupport::from(const RatingDataset& train) {
    TrainingSupport s;
    s.scale = train.scale();
    s.num_users = train.num_users();
    s.num_items = train.num_items();
    s.global_mean = mfcf::global_mean(train);
    s.user_seen.resize(train.num_users());
    s.item_seen.resize(train.num_items());
    for (Index u = 0; u < train.num_users(); ++u) {
        s.user_seen[u] = !train.user_ratings(u).empty();
    }
    for (Index i = 0; i < train.num_items(); ++i) {
        s.item_seen[i] = !train.item_ratings(i).empty();
    }
    return s;
}

void Model::check_index(Index user, Index item) const {
    if (user >= support_.num_users || item >= support_.num_items) {
        throw std::out_of_range("prediction index (" + std::to_string(user) + ", "
                                + std::to_string(item) + ") outside the trained index space");
    }
}

double Model::predict(Index user, Index item) const {
    check_index(user, item);
    const double raw = support_.user_seen[user] && support_.item_seen[item]
        ? predict_seen(user, item)
        : predict_cold(user, item);
    return support_.scale.clamp(raw);
}

double Model::predict_cold(Index, Index) const {
    return support_.global_mean;
}

void Model::save(std::ostream& out) const {
    const ScoreScale& sc = support_.scale;
    out << kMagic << ' ' << kFormatVersion << '\n';
    out << "kind " << to_string(config_.kind) << '\n';
    out << "factors " << config_.factors << '\n';
    out << "iterations " << config_.iterations << '\n';
    out << "learning_rate " << io::format_double(config_.learning_rate) << '\n';
    out << "regularization " << io::format_double(config_.regularization) << '\n';
    out << "bnmf_alpha " << io::format_double(config_.bnmf_alpha) << '\n';
    out << "bnmf_beta " << io::format_double(config_.bnmf_beta) << '\n';
    out << "seed " << config_.seed << '\n';
    out << "scale " << io::format_double(sc.min_score) << ' ' << io::format_double(sc.max_score) << ' '
        << io::format_double(sc.step) << ' ' << io::format_double(sc.threshold) << '\n';
    out << "users " << support_.num_users << '\n';
    out << "items " << support_.num_items << '\n';
    out << "global_mean " << io::format_double(support_.global_mean) << '\n';
    out << "user_seen " << seen_string(support_.user_seen) << '\n';
    out << "item_seen " << seen_string(support_.item_seen) << '\n';
    save_parameters(out);
    out << "end\n";
}

std::unique_ptr<Model> fit(const ModelConfig& config, const RatingDataset& train) {
    config.validate();
    if (train.empty()) {
        throw ConfigError("cannot train on an empty dataset");
    }
    switch (config.kind) {
    case ModelKind::PMF: return fit_pmf(config, train);
    case ModelKind::BiasedMF: return fit_biasedmf(config, train);
    case ModelKind::NMF: return fit_nmf(config, train);
    case ModelKind::BeMF: return fit_bemf(config, train);
    case ModelKind::BNMF: return fit_bnmf(config, train);
    case ModelKind::URP: return fit_urp(config, train);
    }
    throw ConfigError("unhandled model kind");
}

std::unique_ptr<Model> load_model(std::istream& in) {
    io::Reader rd(in);
    rd.expect(kMagic);
    const auto version = rd.read_uint();
    if (version != kFormatVersion) {
        throw FormatError("model dump: unsupported format version " + std::to_string(version));
    }
    ModelConfig config;
    rd.expect("kind");
    config.kind = parse_model_kind(rd.token());
    rd.expect("factors");
    config.factors = rd.read_uint();
    rd.expect("iterations");
    config.iterations = rd.read_uint();
    rd.expect("learning_rate");
    config.learning_rate = rd.read_double();
    rd.expect("regularization");
    config.regularization = rd.read_double();
    rd.expect("bnmf_alpha");
    config.bnmf_alpha = rd.read_double();
    rd.expect("bnmf_beta");
    config.bnmf_beta = rd.read_double();
    rd.expect("seed");
    config.seed = rd.read_uint();

    TrainingSupport sup;
    rd.expect("scale");
    sup.scale.min_score = rd.read_double();
    sup.scale.max_score = rd.read_double();
    sup.scale.step = rd.read_double();
    sup.scale.threshold = rd.read_double();
    sup.scale.validate();
    rd.expect("users");
    sup.num_users = rd.read_uint();
    rd.expect("items");
    sup.num_items = rd.read_uint();
    rd.expect("global_mean");
    sup.global_mean = rd.read_double();
    rd.expect("user_seen");
    sup.user_seen = parse_seen(rd.token(), sup.num_users);
    rd.expect("item_seen");
    sup.item_seen = parse_seen(rd.token(), sup.num_items);

    std::unique_ptr<Model> model;
    switch (config.kind) {
    case ModelKind::PMF:
    case ModelKind::NMF: {
        Matrix p = rd.matrix("P");
        Matrix q = rd.matrix("Q");
        model = std::make_unique<FactorModel>(config, std::move(sup), std::move(p), std::move(q));
        break;
    }
    case ModelKind::BiasedMF: {
        Matrix p = rd.matrix("P");
        Matrix q = rd.matrix("Q");
        BiasTerms b;
        b.mean = rd.scalar("mu");
        b.user = rd.vector("b_user");
        b.item = rd.vector("b_item");
        model = std::make_unique<FactorModel>(config, std::move(sup), std::move(p), std::move(q), std::move(b));
        break;
    }
    case ModelKind::BeMF: {
        std::vector<Matrix> p;
        std::vector<Matrix> q;
        for (std::size_t s = 0; s < sup.scale.num_scores(); ++s) {
            p.push_back(rd.matrix("P" + std::to_string(s)));
            q.push_back(rd.matrix("Q" + std::to_string(s)));
        }
        model = std::make_unique<BeMFModel>(config, std::move(sup), std::move(p), std::move(q));
        break;
    }
    case ModelKind::BNMF: {
        BNMFPosterior post;
        post.gamma = rd.matrix("gamma");
        post.eps_plus = rd.matrix("eps_plus");
        post.eps_minus = rd.matrix("eps_minus");
        post.lambda = rd.matrix("lambda");
        model = std::make_unique<BNMFModel>(config, std::move(sup), std::move(post));
        break;
    }
    case ModelKind::URP: {
        URPPosterior post;
        post.alpha = rd.vector("alpha");
        post.gamma = rd.matrix("gamma");
        post.phi = rd.matrix("phi");
        post.beta = rd.matrix("beta");
        post.alpha_skips = static_cast<std::size_t>(rd.scalar("alpha_skips"));
        model = std::make_unique<URPModel>(config, std::move(sup), std::move(post));
        break;
    }
    }
    rd.expect("end");
    return model;
}

void save_model_file(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write model file '" + path + "'");
    }
    model.save(out);
    if (!out) {
        throw IoError("error while writing model file '" + path + "'");
    }
}

std::unique_ptr<Model> load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open model file '" + path + "'");
    }
    return load_model(in);
}

} // namespace mfcf
