#include "uagg/meta_gmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "uagg/rng.hpp"
#include "uagg/strategy.hpp"

namespace uagg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& values) {
    const double peak = values.maxCoeff();
    if (peak == kNegInf) return kNegInf;
    return peak + std::log((values.array() - peak).exp().sum());
}

Eigen::MatrixXd population_covariance(const Eigen::MatrixXd& data) {
    const Eigen::RowVectorXd mean = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - mean;
    return centered.transpose() * centered / static_cast<double>(data.rows());
}

struct ComponentCache {
    Eigen::LLT<Eigen::MatrixXd> chol;
    double log_norm = 0.0;  // -0.5 (d ln 2pi + ln|Sigma|)
};

ComponentCache factorize(const Eigen::MatrixXd& cov, double ridge) {
    ComponentCache cache;
    cache.chol.compute(cov);
    if (cache.chol.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularCovariance,
                    ridge > 0.0 ? "covariance not positive definite despite ridge"
                                : "covariance is singular; use a positive ridge");
    }
    const Eigen::MatrixXd& l = cache.chol.matrixL();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0.0)) throw Error(ErrorCode::SingularCovariance, "zero pivot in covariance factor");
        log_det += 2.0 * std::log(l(i, i));
    }
    const double d = static_cast<double>(cov.rows());
    cache.log_norm = -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det);
    return cache;
}

// n x K matrix of ln(pi_k) + ln N(x_i | mu_k, Sigma_k).
Eigen::MatrixXd weighted_log_densities(const GmmParams& params, const Eigen::MatrixXd& data, double ridge) {
    const Eigen::Index n = data.rows();
    const std::size_t k_count = params.components();
    Eigen::MatrixXd out(n, static_cast<Eigen::Index>(k_count));
    for (std::size_t k = 0; k < k_count; ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        if (params.weights[k] <= 0.0) {
            out.col(col).setConstant(kNegInf);
            continue;
        }
        const ComponentCache cache = factorize(params.covariances[k], ridge);
        const Eigen::MatrixXd centered = (data.rowwise() - params.means[k].transpose()).transpose();
        const Eigen::MatrixXd solved = cache.chol.matrixL().solve(centered);
        const Eigen::VectorXd quad = solved.colwise().squaredNorm().transpose();
        out.col(col) = (std::log(params.weights[k]) + cache.log_norm - 0.5 * quad.array()).matrix();
    }
    return out;
}

std::vector<Eigen::VectorXd> kmeans_plus_plus(const Eigen::MatrixXd& data, int k, CounterRng& rng) {
    const auto n = static_cast<std::size_t>(data.rows());
    std::vector<Eigen::VectorXd> centers;
    centers.push_back(data.row(static_cast<Eigen::Index>(rng.below(n))).transpose());
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d2 = (data.row(static_cast<Eigen::Index>(i)).transpose() - centers.back()).squaredNorm();
            dist[i] = std::min(dist[i], d2);
            total += dist[i];
        }
        std::size_t pick = 0;
        if (total <= 0.0) {
            pick = static_cast<std::size_t>(rng.below(n));
        } else {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist[i];
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(data.row(static_cast<Eigen::Index>(pick)).transpose());
    }
    return centers;
}

EmResult run_em(const Eigen::MatrixXd& data, int k_count, const EmOptions& options, CounterRng rng) {
    const Eigen::Index n = data.rows();
    const Eigen::Index d = data.cols();
    const Eigen::MatrixXd ridge_eye = options.ridge * Eigen::MatrixXd::Identity(d, d);

    EmResult result;
    GmmParams& p = result.params;
    p.means = kmeans_plus_plus(data, k_count, rng);
    const Eigen::MatrixXd global_cov = population_covariance(data) + ridge_eye;
    p.covariances.assign(static_cast<std::size_t>(k_count), global_cov);
    p.weights.assign(static_cast<std::size_t>(k_count), 1.0 / k_count);

    double previous = kNegInf;
    for (int iter = 0; iter < options.max_iter; ++iter) {
        // E-step
        const Eigen::MatrixXd log_p = weighted_log_densities(p, data, options.ridge);
        Eigen::VectorXd lse(n);
        for (Eigen::Index i = 0; i < n; ++i) lse(i) = log_sum_exp(log_p.row(i));
        const double loglik = lse.sum();
        result.loglik = loglik;
        result.loglik_trace.push_back(loglik);
        result.iterations = iter + 1;
        if (iter > 0 && std::abs(loglik - previous) < options.tol * std::max(1.0, std::abs(loglik))) {
            result.converged = true;
            break;
        }
        previous = loglik;
        if (iter + 1 == options.max_iter) break;

        // M-step
        const Eigen::MatrixXd resp = (log_p.colwise() - lse).array().exp().matrix();
        for (int k = 0; k < k_count; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            const Eigen::VectorXd r = resp.col(k);
            const double nk = r.sum();
            p.weights[ks] = nk / static_cast<double>(n);
            if (nk < 1e-12) continue;  // collapsed component keeps its old shape at zero weight
            p.means[ks] = (data.transpose() * r) / nk;
            const Eigen::MatrixXd centered = data.rowwise() - p.means[ks].transpose();
            p.covariances[ks] =
                (centered.transpose() * r.asDiagonal() * centered) / nk + ridge_eye;
            p.covariances[ks] = 0.5 * (p.covariances[ks] + p.covariances[ks].transpose());
        }
    }
    return result;
}

std::string json_number(double v) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "cannot serialize non-finite model value");
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_vector(std::ostringstream& os, const Eigen::VectorXd& v) {
    os << '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << json_number(v(i));
    os << ']';
}

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

Eigen::VectorXd to_vector(const nlohmann::json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
    return v;
}

}  // namespace

std::size_t FeatureTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    throw Error(ErrorCode::MissingColumn, "feature column '" + name + "' not found");
}

FeatureTable FeatureTable::select(const std::vector<std::string>& columns) const {
    FeatureTable out;
    out.names = columns;
    out.values.resize(values.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        out.values.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(column(columns[j])));
    }
    return out;
}

std::string to_string(FeatureVariant variant) {
    switch (variant) {
        case FeatureVariant::All: return "all";
        case FeatureVariant::Int: return "int";
        case FeatureVariant::Spa: return "spa";
        case FeatureVariant::Custom: return "custom";
    }
    return "custom";
}

FeatureVariant parse_variant(const std::string& text) {
    if (text == "all") return FeatureVariant::All;
    if (text == "int") return FeatureVariant::Int;
    if (text == "spa") return FeatureVariant::Spa;
    if (text == "custom") return FeatureVariant::Custom;
    throw Error(ErrorCode::InvalidParam, "unknown feature variant '" + text + "'");
}

FeatureSetSpec FeatureSetSpec::preset(FeatureVariant variant) {
    switch (variant) {
        case FeatureVariant::All: return {variant, all_strategy_ids()};
        case FeatureVariant::Int: return {variant, intensity_strategy_ids()};
        case FeatureVariant::Spa: return {variant, spatial_strategy_ids()};
        case FeatureVariant::Custom: break;
    }
    throw Error(ErrorCode::InvalidParam, "custom feature sets need explicit strategies");
}

FeatureSetSpec FeatureSetSpec::custom(std::vector<std::string> strategies) {
    if (strategies.empty()) throw Error(ErrorCode::EmptyFeatureSet, "feature set is empty");
    for (auto& s : strategies) s = canonical_id(s);
    return {FeatureVariant::Custom, std::move(strategies)};
}

Eigen::MatrixXd epsilon_rescale(const Eigen::MatrixXd& features, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) {
        throw Error(ErrorCode::InvalidEpsilon, "epsilon must lie in (0, 0.5)");
    }
    return ((1.0 - 2.0 * epsilon) * (features.array() - 0.5) + 0.5).matrix();
}

Standardization standardize_fit(const Eigen::MatrixXd& features) {
    if (features.rows() < 2) throw Error(ErrorCode::TooFewSamples, "standardization needs at least 2 rows");
    Standardization s;
    const auto n = static_cast<double>(features.rows());
    s.mean = features.colwise().mean().transpose();
    s.std.resize(features.cols());
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        // sigma = 0 exactly when every value is equal; the rounded mean would leave a spurious residue
        const bool constant = features.col(j).maxCoeff() == features.col(j).minCoeff();
        const double var = (features.col(j).array() - s.mean(j)).square().sum() / n;
        const double sd = std::sqrt(var);
        if (!constant && sd > 0.0) {
            s.std(j) = sd;
        } else {
            s.mean(j) = features(0, j);  // exact, so the training column maps to exactly 0
            s.std(j) = 1.0;
            s.degenerate.push_back(static_cast<std::size_t>(j));
        }
    }
    return s;
}

Eigen::MatrixXd standardize_apply(const Eigen::MatrixXd& features, const Eigen::VectorXd& mean,
                                  const Eigen::VectorXd& std) {
    if (features.cols() != mean.size() || features.cols() != std.size()) {
        throw Error(ErrorCode::FeatureMismatch, "standardization parameters do not match feature count");
    }
    return ((features.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array()).matrix();
}

EmResult em_fit(const Eigen::MatrixXd& data, int components, const EmOptions& options) {
    if (components < 1) throw Error(ErrorCode::InvalidParam, "need at least one component");
    if (data.cols() < 1) throw Error(ErrorCode::EmptyFeatureSet, "data has no columns");
    if (data.rows() < components) {
        throw Error(ErrorCode::TooFewSamples, std::to_string(data.rows()) + " samples for " +
                                                  std::to_string(components) + " components");
    }
    if (options.restarts < 1 || options.max_iter < 1 || !(options.tol > 0.0) || options.ridge < 0.0) {
        throw Error(ErrorCode::InvalidParam, "invalid EM options");
    }
    const CounterRng root = CounterRng(options.seed).split(static_cast<std::uint64_t>(components));
    EmResult best;
    bool have_best = false;
    for (int r = 0; r < options.restarts; ++r) {
        EmResult candidate = run_em(data, components, options, root.split(static_cast<std::uint64_t>(r)));
        candidate.restart = r;
        if (!have_best || candidate.loglik > best.loglik) {
            best = std::move(candidate);
            have_best = true;
        }
    }
    return best;
}

std::size_t gmm_parameter_count(std::size_t components, std::size_t dimension) {
    return (components - 1) + components * dimension + components * dimension * (dimension + 1) / 2;
}

double bic(double loglik, std::size_t components, std::size_t dimension, std::size_t samples) {
    if (samples < 1) throw Error(ErrorCode::TooFewSamples, "BIC needs at least one sample");
    return static_cast<double>(gmm_parameter_count(components, dimension)) *
               std::log(static_cast<double>(samples)) -
           2.0 * loglik;
}

double log_density(const GmmParams& params, const Eigen::VectorXd& x) {
    const Eigen::MatrixXd row = x.transpose();
    const Eigen::MatrixXd log_p = weighted_log_densities(params, row, 1.0);
    return log_sum_exp(log_p.row(0));
}

double total_loglik(const GmmParams& params, const Eigen::MatrixXd& data) {
    const Eigen::MatrixXd log_p = weighted_log_densities(params, data, 1.0);
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) total += log_sum_exp(log_p.row(i));
    return total;
}

GmmModel fit_meta(const FeatureTable& iid_features, const FeatureSetSpec& spec, const MetaFitOptions& options) {
    if (spec.strategies.empty()) throw Error(ErrorCode::EmptyFeatureSet, "feature set is empty");
    if (options.k_max < 1) throw Error(ErrorCode::InvalidParam, "k_max must be at least 1");
    const FeatureTable table = iid_features.select(spec.strategies);
    const Eigen::MatrixXd rescaled = epsilon_rescale(table.values, options.epsilon);
    const Standardization standard = standardize_fit(rescaled);
    const Eigen::MatrixXd data = standardize_apply(rescaled, standard.mean, standard.std);

    const auto n = static_cast<std::size_t>(data.rows());
    const auto d = data.cols();
    std::vector<Eigen::Index> free_cols;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (std::find(standard.degenerate.begin(), standard.degenerate.end(), static_cast<std::size_t>(j)) ==
            standard.degenerate.end()) {
            free_cols.push_back(j);
        }
    }
    if (!standard.degenerate.empty() && !(options.em.ridge > 0.0)) {
        throw Error(ErrorCode::SingularCovariance, "constant feature column needs a positive ridge");
    }
    // Constant columns are all zero after standardization. EM on the full matrix converges there to
    // mean 0 and variance ridge in every component, independent of the free block, so they are fitted
    // in closed form: no free parameters, and a fixed log-likelihood term that stays out of the
    // relative convergence test.
    const double pinned_loglik = static_cast<double>(n) * static_cast<double>(standard.degenerate.size()) *
                                 (-0.5 * std::log(2.0 * std::numbers::pi * options.em.ridge));
    const auto embed = [&](const GmmParams& free) {
        GmmParams full;
        full.weights = free.weights;
        for (std::size_t k = 0; k < free.components(); ++k) {
            Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
            Eigen::MatrixXd cov = options.em.ridge * Eigen::MatrixXd::Identity(d, d);
            for (std::size_t a = 0; a < free_cols.size(); ++a) {
                mu(free_cols[a]) = free.means[k](static_cast<Eigen::Index>(a));
                for (std::size_t b = 0; b < free_cols.size(); ++b) {
                    cov(free_cols[a], free_cols[b]) =
                        free.covariances[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                }
            }
            full.means.push_back(std::move(mu));
            full.covariances.push_back(std::move(cov));
        }
        return full;
    };

    GmmModel model;
    model.epsilon = options.epsilon;
    model.feat_mean = standard.mean;
    model.feat_std = standard.std;
    model.feature_spec = spec;
    model.fit.seed = options.em.seed;
    model.fit.n_train = n;
    if (free_cols.empty()) {
        GmmParams single;
        single.weights = {1.0};
        single.means.push_back(Eigen::VectorXd::Zero(0));
        single.covariances.push_back(Eigen::MatrixXd::Zero(0, 0));
        model.mixture = embed(single);
        model.fit.loglik = pinned_loglik;
        model.fit.bic = bic(pinned_loglik, 1, 0, n);
        return model;
    }
    Eigen::MatrixXd free_data(data.rows(), static_cast<Eigen::Index>(free_cols.size()));
    for (std::size_t a = 0; a < free_cols.size(); ++a) free_data.col(static_cast<Eigen::Index>(a)) = data.col(free_cols[a]);

    bool have = false;
    const int k_limit = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(options.k_max), n));
    for (int k = 1; k <= k_limit; ++k) {
        EmResult em = em_fit(free_data, k, options.em);
        const double loglik = em.loglik + pinned_loglik;
        const double score = bic(loglik, static_cast<std::size_t>(k), free_cols.size(), n);
        if (!have || score < model.fit.bic) {
            model.mixture = embed(em.params);
            model.fit.bic = score;
            model.fit.loglik = loglik;
            have = true;
        }
    }
    return model;
}

double meta_score(const GmmModel& model, const Eigen::VectorXd& raw_features) {
    const auto d = static_cast<Eigen::Index>(model.feature_spec.strategies.size());
    if (raw_features.size() != d) {
        throw Error(ErrorCode::FeatureMismatch, "expected " + std::to_string(d) + " features");
    }
    const Eigen::MatrixXd row = raw_features.transpose();
    const Eigen::MatrixXd prepared =
        standardize_apply(epsilon_rescale(row, model.epsilon), model.feat_mean, model.feat_std);
    return -log_density(model.mixture, prepared.row(0).transpose());
}

double meta_score(const GmmModel& model, const FeatureVector& features) {
    const auto& names = model.feature_spec.strategies;
    Eigen::VectorXd raw(static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) raw(static_cast<Eigen::Index>(j)) = features.at(names[j]);
    return meta_score(model, raw);
}

GmmModel ablate_drop(const FeatureTable& iid_features, const FeatureSetSpec& spec, const std::string& drop,
                     const MetaFitOptions& options) {
    const std::string id = canonical_id(drop);
    std::vector<std::string> kept;
    for (const auto& s : spec.strategies) {
        if (s != id) kept.push_back(s);
    }
    if (kept.size() == spec.strategies.size()) {
        throw Error(ErrorCode::FeatureMismatch, "strategy " + id + " is not part of the feature set");
    }
    if (kept.empty()) throw Error(ErrorCode::EmptyFeatureSet, "dropping " + id + " leaves no features");
    return fit_meta(iid_features, FeatureSetSpec{FeatureVariant::Custom, kept}, options);
}

GmmModel ablate_keep(const FeatureTable& iid_features, const FeatureSetSpec& spec,
                     const std::vector<std::string>& keep, const MetaFitOptions& options) {
    if (keep.empty()) throw Error(ErrorCode::EmptyFeatureSet, "keep-only list is empty");
    std::vector<std::string> kept;
    for (const auto& k : keep) {
        const std::string id = canonical_id(k);
        if (std::find(spec.strategies.begin(), spec.strategies.end(), id) == spec.strategies.end()) {
            throw Error(ErrorCode::FeatureMismatch, "strategy " + id + " is not part of the feature set");
        }
        kept.push_back(id);
    }
    return fit_meta(iid_features, FeatureSetSpec{FeatureVariant::Custom, kept}, options);
}

std::string model_to_json(const GmmModel& model) {
    const auto& mix = model.mixture;
    std::ostringstream os;
    os << "{\n  \"version\": 1,\n";
    os << "  \"feature_spec\": {\"variant\": " << json_string(to_string(model.feature_spec.variant))
       << ", \"strategies\": [";
    for (std::size_t i = 0; i < model.feature_spec.strategies.size(); ++i) {
        os << (i ? ", " : "") << json_string(model.feature_spec.strategies[i]);
    }
    os << "]},\n";
    os << "  \"epsilon\": " << json_number(model.epsilon) << ",\n";
    os << "  \"feat_mean\": ";
    write_vector(os, model.feat_mean);
    os << ",\n  \"feat_std\": ";
    write_vector(os, model.feat_std);
    os << ",\n  \"K\": " << mix.components() << ",\n  \"pi\": [";
    for (std::size_t k = 0; k < mix.components(); ++k) os << (k ? ", " : "") << json_number(mix.weights[k]);
    os << "],\n  \"mu\": [";
    for (std::size_t k = 0; k < mix.components(); ++k) {
        os << (k ? ", " : "");
        write_vector(os, mix.means[k]);
    }
    os << "],\n  \"sigma\": [";
    for (std::size_t k = 0; k < mix.components(); ++k) {
        os << (k ? ",\n    " : "\n    ") << '[';
        const Eigen::MatrixXd& cov = mix.covariances[k];
        for (Eigen::Index r = 0; r < cov.rows(); ++r) {
            os << (r ? ", " : "");
            write_vector(os, cov.row(r).transpose());
        }
        os << ']';
    }
    os << "],\n";
    os << "  \"seed\": " << model.fit.seed << ",\n";
    os << "  \"n_train\": " << model.fit.n_train << ",\n";
    os << "  \"bic\": " << json_number(model.fit.bic) << ",\n";
    os << "  \"loglik\": " << json_number(model.fit.loglik) << "\n}\n";
    return os.str();
}

GmmModel model_from_json(const std::string& text) {
    GmmModel model;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("version").get<int>() != 1) throw Error(ErrorCode::ParseError, "unsupported model version");
        const auto& spec = j.at("feature_spec");
        model.feature_spec.variant = parse_variant(spec.at("variant").get<std::string>());
        model.feature_spec.strategies = spec.at("strategies").get<std::vector<std::string>>();
        model.epsilon = j.at("epsilon").get<double>();
        model.feat_mean = to_vector(j.at("feat_mean"));
        model.feat_std = to_vector(j.at("feat_std"));
        const auto k_count = j.at("K").get<std::size_t>();
        const std::size_t d = model.feature_spec.strategies.size();
        const auto& pi = j.at("pi");
        const auto& mu = j.at("mu");
        const auto& sigma = j.at("sigma");
        if (pi.size() != k_count || mu.size() != k_count || sigma.size() != k_count ||
            static_cast<std::size_t>(model.feat_mean.size()) != d ||
            static_cast<std::size_t>(model.feat_std.size()) != d) {
            throw Error(ErrorCode::ParseError, "model arrays disagree with K or feature count");
        }
        for (std::size_t k = 0; k < k_count; ++k) {
            model.mixture.weights.push_back(pi.at(k).get<double>());
            Eigen::VectorXd mean = to_vector(mu.at(k));
            if (static_cast<std::size_t>(mean.size()) != d) throw Error(ErrorCode::ParseError, "mean has wrong length");
            model.mixture.means.push_back(std::move(mean));
            const auto& rows = sigma.at(k);
            if (rows.size() != d) throw Error(ErrorCode::ParseError, "covariance has wrong shape");
            Eigen::MatrixXd cov(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
            for (std::size_t r = 0; r < d; ++r) {
                const Eigen::VectorXd row = to_vector(rows.at(r));
                if (static_cast<std::size_t>(row.size()) != d) throw Error(ErrorCode::ParseError, "covariance has wrong shape");
                cov.row(static_cast<Eigen::Index>(r)) = row.transpose();
            }
            model.mixture.covariances.push_back(std::move(cov));
        }
        model.fit.seed = j.at("seed").get<std::uint64_t>();
        model.fit.n_train = j.at("n_train").get<std::size_t>();
        model.fit.bic = j.at("bic").get<double>();
        model.fit.loglik = j.at("loglik").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("model JSON: ") + e.what());
    }
    return model;
}

}  // namespace uagg
