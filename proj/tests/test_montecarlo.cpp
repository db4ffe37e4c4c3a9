#include <doctest.h>

#include <cmath>

#include "pairlab/montecarlo.hpp"

using namespace pairlab;

namespace {

ExperimentConfig base_config() {
    ExperimentConfig cfg;
    cfg.spec = DgpSpec::preset("appendix-ex1");
    cfg.design = DesignKind::matched_pairs;
    cfg.n_units = 10000;
    cfg.replications = 200;
    cfg.master_seed = 1001;
    cfg.estimators = {EstimatorKind::diff_in_means, EstimatorKind::theta_drop};
    cfg.level = 0.95;
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    ExperimentConfig cfg = base_config();
    CHECK_NOTHROW(cfg.validate());

    ExperimentConfig odd = cfg;
    odd.n_units = 999;
    CHECK_THROWS_AS(odd.validate(), spec_error);

    ExperimentConfig mismatch = cfg;
    mismatch.design = DesignKind::stratified;
    CHECK_THROWS_AS(mismatch.validate(), spec_error);  // theta_drop needs pairs

    ExperimentConfig bad_level = cfg;
    bad_level.level = 1.5;
    CHECK_THROWS_AS(bad_level.validate(), spec_error);

    CHECK_THROWS_AS(estimator_from_string("nonsense"), spec_error);
    CHECK(estimator_from_string("strata_fe") == EstimatorKind::strata_fe);
}

TEST_CASE("experiment config json round-trip") {
    ExperimentConfig cfg = base_config();
    cfg.design = DesignKind::stratified;
    cfg.strata_count = 7;
    cfg.nu = 0.4;
    cfg.estimators = {EstimatorKind::diff_in_means, EstimatorKind::strata_fe};
    auto j = cfg.to_json();
    ExperimentConfig back = ExperimentConfig::from_json(j);
    CHECK(back.design == DesignKind::stratified);
    CHECK(back.strata_count == 7);
    CHECK(back.nu == doctest::Approx(0.4));
    CHECK(back.n_units == cfg.n_units);
    CHECK(back.master_seed == cfg.master_seed);
    CHECK(back.estimators == cfg.estimators);
}

TEST_CASE("replication means track the oracle estimands under matched pairs") {
    ExperimentConfig cfg = base_config();
    McValue obs_oracle = estimand_obs(cfg.spec, 2000000, 5001);
    McValue drop_oracle = estimand_drop(cfg.spec, 2000000, 5002);
    EstimandTargets targets{true_ate(cfg.spec), obs_oracle.value, drop_oracle.value};

    SummaryStats stats = run_replications(cfg, targets);
    const auto& dim = stats.by_estimator.at(EstimatorKind::diff_in_means);
    const auto& drop = stats.by_estimator.at(EstimatorKind::theta_drop);
    REQUIRE(dim.n_ok == cfg.replications);
    REQUIRE(drop.n_ok == cfg.replications);

    double se_dim = std::sqrt(dim.sd * dim.sd / cfg.replications + obs_oracle.se * obs_oracle.se);
    double se_drop =
        std::sqrt(drop.sd * drop.sd / cfg.replications + drop_oracle.se * drop_oracle.se);
    CHECK(std::abs(dim.bias_obs) < 3.0 * se_dim);
    CHECK(std::abs(drop.bias_design) < 3.0 * se_drop);

    // sanity on bookkeeping
    CHECK(stats.mean_attrition_rate > 0.2);
    CHECK(stats.mean_attrition_rate < 0.5);
    CHECK(stats.broken_pair_rate > 0.0);
    CHECK(dim.coverage > 0.85);
    CHECK(dim.coverage <= 1.0);
}

TEST_CASE("zero-attrition experiments make both estimators identical") {
    ExperimentConfig cfg = base_config();
    cfg.spec.nu1 = Polynomial{10.0};
    cfg.spec.nu0 = Polynomial{10.0};
    cfg.n_units = 500;
    cfg.replications = 60;
    SummaryStats stats = run_replications(cfg);
    const auto& dim = stats.by_estimator.at(EstimatorKind::diff_in_means);
    const auto& drop = stats.by_estimator.at(EstimatorKind::theta_drop);
    CHECK(std::abs(dim.mean - drop.mean) < 1e-12);
    CHECK(std::abs(dim.sd - drop.sd) < 1e-12);
    CHECK(stats.mean_attrition_rate == 0.0);
    CHECK(stats.broken_pair_rate == 0.0);
    CHECK(stats.failed_replications == 0);
}

TEST_CASE("stratified design with attrition independent of strata") {
    ExperimentConfig cfg;
    cfg.spec = DgpSpec::preset("appendix-ex1");
    cfg.spec.nu1 = Polynomial{0.3};  // constant thresholds: R independent of X
    cfg.spec.nu0 = Polynomial{-0.1};
    cfg.design = DesignKind::stratified;
    cfg.strata_count = 10;
    cfg.nu = 0.5;
    cfg.n_units = 4000;
    cfg.replications = 150;
    cfg.master_seed = 77;
    cfg.estimators = {EstimatorKind::diff_in_means, EstimatorKind::strata_fe};

    SummaryStats stats = run_replications(cfg);
    const auto& dim = stats.by_estimator.at(EstimatorKind::diff_in_means);
    const auto& sfe = stats.by_estimator.at(EstimatorKind::strata_fe);
    double se = std::sqrt((dim.sd * dim.sd + sfe.sd * sfe.sd) / cfg.replications);
    CHECK(std::abs(sfe.mean - dim.mean) < 3.0 * se);
    CHECK(stats.contrast_free_strata_rate == 0.0);
}

TEST_CASE("summary is bit-identical across worker counts") {
    ExperimentConfig cfg = base_config();
    cfg.n_units = 400;
    cfg.replications = 40;
    McValue obs = estimand_obs(cfg.spec, 100000, 31);
    EstimandTargets targets{0.0, obs.value, 0.0};

    cfg.threads = 1;
    SummaryStats a = run_replications(cfg, targets);
    cfg.threads = 4;
    SummaryStats b = run_replications(cfg, targets);
    cfg.threads = 13;
    SummaryStats c = run_replications(cfg, targets);
    CHECK(a.csv_text() == b.csv_text());
    CHECK(a.csv_text() == c.csv_text());
}

TEST_CASE("failures are counted, not fatal, below the abort threshold") {
    ExperimentConfig cfg;
    cfg.spec = DgpSpec::preset("appendix-ex2");
    cfg.spec.nu1 = Polynomial{0.0};  // 50% survival in both arms
    cfg.spec.nu0 = Polynomial{0.0};
    cfg.design = DesignKind::matched_pairs;
    cfg.n_units = 8;
    cfg.replications = 300;
    cfg.master_seed = 12;
    cfg.estimators = {EstimatorKind::diff_in_means, EstimatorKind::theta_drop};

    SummaryStats stats = run_replications(cfg);
    const auto& drop = stats.by_estimator.at(EstimatorKind::theta_drop);
    CHECK(drop.n_failed > 0);                    // broken-pair failures occur
    CHECK(drop.n_ok + drop.n_failed == cfg.replications);
    CHECK(stats.failed_replications < cfg.replications);
}

TEST_CASE("a mostly-failing study aborts") {
    ExperimentConfig cfg;
    cfg.spec = DgpSpec::preset("appendix-ex2");
    cfg.spec.nu1 = Polynomial{-2.5};  // <1% survival
    cfg.spec.nu0 = Polynomial{-2.5};
    cfg.design = DesignKind::matched_pairs;
    cfg.n_units = 4;
    cfg.replications = 100;
    cfg.estimators = {EstimatorKind::diff_in_means};
    CHECK_THROWS_AS(run_replications(cfg), estimation_error);
}

TEST_CASE("convergence study: degenerate single-point grid") {
    ExperimentConfig cfg = base_config();
    cfg.n_units = 100;
    cfg.replications = 20;
    auto rows = convergence_study(cfg, {100});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].first == 100);
    CHECK(rows[0].second.by_estimator.at(EstimatorKind::diff_in_means).n_ok == 20);
}

TEST_CASE("convergence study: bias shrinks and sd scales like root-n") {
    ExperimentConfig cfg = base_config();
    cfg.replications = 200;
    cfg.master_seed = 99;
    McValue obs_oracle = estimand_obs(cfg.spec, 2000000, 5003);
    EstimandTargets targets{true_ate(cfg.spec), obs_oracle.value, 0.0};

    auto rows = convergence_study(cfg, {250, 1000, 4000}, targets);
    REQUIRE(rows.size() == 3);
    const auto& small = rows[0].second.by_estimator.at(EstimatorKind::diff_in_means);
    const auto& mid = rows[1].second.by_estimator.at(EstimatorKind::diff_in_means);
    const auto& large = rows[2].second.by_estimator.at(EstimatorKind::diff_in_means);

    auto se_of = [&](const EstimatorSummary& s) {
        return s.sd / std::sqrt(static_cast<double>(s.n_ok));
    };
    // |bias| non-increasing up to Monte Carlo noise
    CHECK(std::abs(mid.bias_obs) <
          std::abs(small.bias_obs) + 3.0 * (se_of(small) + se_of(mid)));
    CHECK(std::abs(large.bias_obs) <
          std::abs(mid.bias_obs) + 3.0 * (se_of(mid) + se_of(large)));
    // quadrupling n halves the sd, within +/-30%
    CHECK(small.sd / mid.sd > 2.0 * 0.7);
    CHECK(small.sd / mid.sd < 2.0 * 1.3);
    CHECK(mid.sd / large.sd > 2.0 * 0.7);
    CHECK(mid.sd / large.sd < 2.0 * 1.3);
}

TEST_CASE("convergence study rejects a non-ascending grid") {
    ExperimentConfig cfg = base_config();
    CHECK_THROWS_AS(convergence_study(cfg, {1000, 400}), spec_error);
    CHECK_THROWS_AS(convergence_study(cfg, {}), spec_error);
}

TEST_CASE("explicit stratum thresholds replace quantile binning") {
    ExperimentConfig cfg;
    cfg.spec = DgpSpec::preset("appendix-ex2");
    cfg.design = DesignKind::stratified;
    cfg.strata_thresholds = {-0.5, 0.5};
    cfg.strata_count = 3;
    cfg.nu = 0.5;
    cfg.n_units = 3000;
    cfg.replications = 50;
    cfg.master_seed = 404;
    cfg.estimators = {EstimatorKind::diff_in_means, EstimatorKind::strata_fe};
    CHECK_NOTHROW(cfg.validate());

    EstimandTargets targets = compute_targets(cfg, 400000, 405);
    SummaryStats stats = run_replications(cfg, targets);
    const auto& sfe = stats.by_estimator.at(EstimatorKind::strata_fe);
    CHECK(sfe.n_ok == cfg.replications);
    double se = sfe.sd / std::sqrt(double(sfe.n_ok));
    CHECK(std::abs(sfe.bias_design) < 4.0 * se + 0.01);

    // json carries the thresholds through
    ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
    CHECK(back.strata_thresholds == cfg.strata_thresholds);
    CHECK(back.strata_count == 3);

    ExperimentConfig bad = cfg;
    bad.strata_thresholds = {0.5, -0.5};
    CHECK_THROWS_AS(bad.validate(), spec_error);
}

TEST_CASE("compute_targets wires the right oracles") {
    ExperimentConfig cfg = base_config();
    EstimandTargets t = compute_targets(cfg, 200000, 42);
    CHECK(t.theta == doctest::Approx(0.0).epsilon(1e-12));
    // matched pairs: the design target is the drop estimand, not theta
    CHECK(t.theta_design < 0.0);
    CHECK(t.theta_obs > 1.0);
}
