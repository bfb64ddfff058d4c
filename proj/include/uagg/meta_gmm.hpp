#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uagg/core.hpp"

namespace uagg {

/// Rows are maps, columns are named aggregation strategies.
struct FeatureTable {
    std::vector<std::string> names;
    Eigen::MatrixXd values;

    /// Column index of a strategy identifier; throws MissingColumn.
    std::size_t column(const std::string& name) const;
    /// Sub-table with the given columns in the given order.
    FeatureTable select(const std::vector<std::string>& columns) const;
};

enum class FeatureVariant { All, Int, Spa, Custom };

std::string to_string(FeatureVariant variant);
FeatureVariant parse_variant(const std::string& text);

struct FeatureSetSpec {
    FeatureVariant variant = FeatureVariant::All;
    std::vector<std::string> strategies;

    /// Preset for all/int/spa; custom requires explicit identifiers.
    static FeatureSetSpec preset(FeatureVariant variant);
    static FeatureSetSpec custom(std::vector<std::string> strategies);
};

struct GmmParams {
    std::vector<double> weights;
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covariances;

    std::size_t components() const noexcept { return weights.size(); }
    std::size_t dimension() const noexcept { return means.empty() ? 0 : static_cast<std::size_t>(means[0].size()); }
};

struct EmOptions {
    std::uint64_t seed = 0;
    int restarts = 5;
    int max_iter = 500;
    double tol = 1e-6;     ///< relative log-likelihood change
    double ridge = 1e-6;   ///< added to every covariance diagonal
};

struct EmResult {
    GmmParams params;
    double loglik = 0.0;              ///< total log-likelihood of the training data
    std::vector<double> loglik_trace; ///< per-iteration values of the winning restart
    int iterations = 0;
    bool converged = false;
    int restart = 0;
};

struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;                  ///< zero-variance columns stored as 1
    std::vector<std::size_t> degenerate;  ///< columns that had zero variance
};

struct FitInfo {
    std::uint64_t seed = 0;
    std::size_t n_train = 0;
    double bic = 0.0;
    double loglik = 0.0;
};

struct GmmModel {
    GmmParams mixture;
    double epsilon = 1e-3;
    Eigen::VectorXd feat_mean;
    Eigen::VectorXd feat_std;
    FeatureSetSpec feature_spec;
    FitInfo fit;
};

struct MetaFitOptions {
    int k_max = 10;
    double epsilon = 1e-3;
    EmOptions em;
};

/// f -> (1 - 2 eps)(f - 0.5) + 0.5. Throws InvalidEpsilon unless 0 < eps < 0.5.
Eigen::MatrixXd epsilon_rescale(const Eigen::MatrixXd& features, double epsilon);

/// Per-column mean and population standard deviation. Throws TooFewSamples for n < 2.
Standardization standardize_fit(const Eigen::MatrixXd& features);
Eigen::MatrixXd standardize_apply(const Eigen::MatrixXd& features, const Eigen::VectorXd& mean,
                                  const Eigen::VectorXd& std);

/// Expectation-maximization for a full-covariance mixture with k-means++ seeded restarts.
EmResult em_fit(const Eigen::MatrixXd& data, int components, const EmOptions& options = {});

/// Number of free parameters of a full-covariance mixture.
std::size_t gmm_parameter_count(std::size_t components, std::size_t dimension);

/// p ln(n) - 2 loglik; lower is better.
double bic(double loglik, std::size_t components, std::size_t dimension, std::size_t samples);

/// log p(x) under the mixture, via log-sum-exp.
double log_density(const GmmParams& params, const Eigen::VectorXd& x);

/// Total log-likelihood of every row of data.
double total_loglik(const GmmParams& params, const Eigen::MatrixXd& data);

/// Rescale, standardize, fit K = 1..k_max and keep the lowest BIC. Constant columns add no
/// parameters to the BIC penalty.
GmmModel fit_meta(const FeatureTable& iid_features, const FeatureSetSpec& spec,
                  const MetaFitOptions& options = {});

/// Negative log-likelihood of one feature vector; names are matched by identifier.
double meta_score(const GmmModel& model, const FeatureVector& features);

/// Same, for a raw vector already ordered like model.feature_spec.strategies.
double meta_score(const GmmModel& model, const Eigen::VectorXd& raw_features);

/// Refit without one strategy.
GmmModel ablate_drop(const FeatureTable& iid_features, const FeatureSetSpec& spec,
                     const std::string& drop, const MetaFitOptions& options = {});

/// Refit on a subset of strategies only.
GmmModel ablate_keep(const FeatureTable& iid_features, const FeatureSetSpec& spec,
                     const std::vector<std::string>& keep, const MetaFitOptions& options = {});

/// Self-describing JSON text; numbers written with 17 significant digits.
std::string model_to_json(const GmmModel& model);
GmmModel model_from_json(const std::string& text);

}  // namespace uagg
