#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairlab/dgp.hpp"
#include "pairlab/estimands.hpp"

namespace pairlab {

enum class DesignKind { matched_pairs, stratified };
enum class EstimatorKind { diff_in_means, theta_drop, pair_fe, strata_fe };

std::string to_string(EstimatorKind k);
EstimatorKind estimator_from_string(const std::string& name);

struct ExperimentConfig {
    DgpSpec spec;
    DesignKind design = DesignKind::matched_pairs;
    int strata_count = 10;   // stratified only
    double nu = 0.5;         // stratified only
    // Optional explicit stratum boundaries (ascending). When set, unit i
    // gets label 1 + #{t : x_i >= t} instead of an empirical-quantile bin,
    // and strata_count is boundaries + 1.
    std::vector<double> strata_thresholds;
    std::size_t n_units = 1000;
    std::size_t replications = 100;
    std::uint64_t master_seed = 1;
    std::vector<EstimatorKind> estimators;
    double level = 0.95;     // confidence level for the difference-in-means CI
    int threads = 0;         // 0 = hardware

    void validate() const;
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

// Population targets the replication averages are compared against.
struct EstimandTargets {
    double theta = 0.0;
    double theta_obs = 0.0;
    double theta_design = 0.0;  // theta_drop for pairs, theta_sfe for strata
};

struct EstimatorSummary {
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
    double mean = 0.0;
    double sd = 0.0;
    double bias_theta = 0.0;    // NaN without targets
    double bias_obs = 0.0;
    double bias_design = 0.0;
    double coverage = 0.0;      // NaN unless a CI was produced
    std::size_t ci_count = 0;
};

struct SummaryStats {
    std::map<EstimatorKind, EstimatorSummary> by_estimator;
    double mean_attrition_rate = 0.0;
    double broken_pair_rate = 0.0;           // matched pairs
    double contrast_free_strata_rate = 0.0;  // stratified
    std::size_t replications = 0;
    std::size_t failed_replications = 0;     // replications with any failure

    std::string csv_text() const;
    std::string table_text() const;
};

// Runs cfg.replications experiments. Replication r derives its seeds from
// (master_seed, r), so results are independent of execution order and of
// the worker count. Per-replication estimation errors are counted, not
// fatal; a failure rate above one half aborts the study.
SummaryStats run_replications(const ExperimentConfig& cfg,
                              const std::optional<EstimandTargets>& targets = std::nullopt);

// One summary per sample size, same master seed family.
std::vector<std::pair<std::size_t, SummaryStats>> convergence_study(
    const ExperimentConfig& cfg, const std::vector<std::size_t>& n_grid,
    const std::optional<EstimandTargets>& targets = std::nullopt);

// Oracle targets for cfg via the estimand integrators.
EstimandTargets compute_targets(const ExperimentConfig& cfg, std::size_t draws,
                                std::uint64_t seed);

}  // namespace pairlab
