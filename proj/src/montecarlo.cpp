#include "pairlab/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pairlab/design.hpp"
#include "pairlab/errors.hpp"
#include "pairlab/estimators.hpp"
#include "pairlab/inference.hpp"
#include "pairlab/parallel.hpp"

namespace pairlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

struct ReplicationRecord {
    std::map<EstimatorKind, double> values;
    std::map<EstimatorKind, std::string> failures;
    double attrition_rate = 0.0;
    double broken_pair_rate = 0.0;
    double contrast_free_rate = 0.0;
    bool has_ci = false;
    double ci_lower = 0.0, ci_upper = 0.0;
    bool failed_design = false;  // sample could not even be designed/observed
};

}  // namespace

std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::diff_in_means: return "diff_in_means";
        case EstimatorKind::theta_drop: return "theta_drop";
        case EstimatorKind::pair_fe: return "pair_fe";
        case EstimatorKind::strata_fe: return "strata_fe";
    }
    return "unknown";
}

EstimatorKind estimator_from_string(const std::string& name) {
    if (name == "diff_in_means") return EstimatorKind::diff_in_means;
    if (name == "theta_drop") return EstimatorKind::theta_drop;
    if (name == "pair_fe") return EstimatorKind::pair_fe;
    if (name == "strata_fe") return EstimatorKind::strata_fe;
    throw spec_error("unknown estimator '" + name + "'");
}

void ExperimentConfig::validate() const {
    spec.validate();
    if (replications < 1) throw spec_error("experiment: need at least one replication");
    if (n_units < 2) throw spec_error("experiment: need at least two units");
    if (design == DesignKind::matched_pairs && n_units % 2 != 0)
        throw spec_error("experiment: matched pairs need an even number of units");
    if (design == DesignKind::stratified) {
        if (strata_count < 1) throw spec_error("experiment: need at least one stratum");
        if (!(nu > 0.0 && nu < 1.0)) throw spec_error("experiment: nu must lie in (0,1)");
        if (!strata_thresholds.empty()) {
            if (strata_count != static_cast<int>(strata_thresholds.size()) + 1)
                throw spec_error("experiment: strata_count must equal thresholds + 1");
            for (std::size_t i = 1; i < strata_thresholds.size(); ++i)
                if (strata_thresholds[i] <= strata_thresholds[i - 1])
                    throw spec_error("experiment: strata thresholds must ascend strictly");
        }
    }
    if (!(level > 0.0 && level < 1.0)) throw spec_error("experiment: level must lie in (0,1)");
    for (EstimatorKind k : estimators) {
        bool pairs_only = k == EstimatorKind::theta_drop || k == EstimatorKind::pair_fe;
        bool strata_only = k == EstimatorKind::strata_fe;
        if (pairs_only && design != DesignKind::matched_pairs)
            throw spec_error(to_string(k) + " requires a matched-pair design");
        if (strata_only && design != DesignKind::stratified)
            throw spec_error(to_string(k) + " requires a stratified design");
    }
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["dgp"] = spec.to_json();
    if (design == DesignKind::matched_pairs) {
        j["design"] = {{"type", "matched_pairs"}};
    } else {
        j["design"] = {{"type", "stratified"}, {"strata", strata_count}, {"nu", nu}};
        if (!strata_thresholds.empty()) j["design"]["thresholds"] = strata_thresholds;
    }
    j["n_units"] = n_units;
    j["replications"] = replications;
    j["seed"] = master_seed;
    std::vector<std::string> names;
    for (EstimatorKind k : estimators) names.push_back(to_string(k));
    j["estimators"] = names;
    j["level"] = level;
    // threads is an execution detail, not part of the experiment's identity
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    try {
        ExperimentConfig cfg;
        cfg.spec = DgpSpec::from_json(j.at("dgp"));
        if (j.contains("design")) {
            const auto& d = j.at("design");
            std::string type = d.value("type", "matched_pairs");
            if (type == "matched_pairs") {
                cfg.design = DesignKind::matched_pairs;
            } else if (type == "stratified") {
                cfg.design = DesignKind::stratified;
                if (d.contains("thresholds")) {
                    cfg.strata_thresholds = d.at("thresholds").get<std::vector<double>>();
                    cfg.strata_count = static_cast<int>(cfg.strata_thresholds.size()) + 1;
                    if (d.contains("strata"))
                        cfg.strata_count = d.at("strata").get<int>();
                } else {
                    cfg.strata_count = d.value("strata", 10);
                }
                cfg.nu = d.value("nu", 0.5);
            } else {
                throw spec_error("unknown design '" + type + "'");
            }
        }
        cfg.n_units = j.value("n_units", std::size_t{1000});
        cfg.replications = j.value("replications", std::size_t{100});
        cfg.master_seed = j.value("seed", std::uint64_t{1});
        if (j.contains("estimators")) {
            for (const auto& name : j.at("estimators"))
                cfg.estimators.push_back(estimator_from_string(name.get<std::string>()));
        } else {
            cfg.estimators = {EstimatorKind::diff_in_means};
            if (cfg.design == DesignKind::matched_pairs)
                cfg.estimators.push_back(EstimatorKind::theta_drop);
            else
                cfg.estimators.push_back(EstimatorKind::strata_fe);
        }
        cfg.level = j.value("level", 0.95);
        cfg.threads = j.value("threads", 0);
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw spec_error(std::string("malformed experiment config: ") + e.what());
    }
}

namespace {

ReplicationRecord run_one(const ExperimentConfig& cfg, std::size_t n_units,
                          std::uint64_t rep_seed) {
    ReplicationRecord rec;
    std::uint64_t sample_seed = SplitMix64::child_seed(rep_seed, 0);
    std::uint64_t design_seed = SplitMix64::child_seed(rep_seed, 1);

    PotentialTable table = draw_sample(cfg.spec, n_units, sample_seed);

    try {
        if (cfg.design == DesignKind::matched_pairs) {
            PairAssignment pa = pair_adjacent(table.x);
            auto d = randomize_within_pairs(pa, design_seed);
            ObservedSample obs = observe(table, d, &pa);

            std::size_t attrited = 0, broken = 0;
            for (auto r : obs.r) attrited += (r == 0);
            for (const auto& [a, b] : pa.pairs) broken += !(obs.r[a] && obs.r[b]);
            rec.attrition_rate = static_cast<double>(attrited) / static_cast<double>(n_units);
            rec.broken_pair_rate =
                static_cast<double>(broken) / static_cast<double>(pa.n_pairs());

            for (EstimatorKind k : cfg.estimators) {
                try {
                    Estimate e;
                    switch (k) {
                        case EstimatorKind::diff_in_means: e = diff_in_means(obs); break;
                        case EstimatorKind::theta_drop: e = theta_drop(obs, pa); break;
                        case EstimatorKind::pair_fe: e = pair_fe_coefficient(obs, pa); break;
                        default:
                            throw estimation_error(to_string(k) + " not valid for pairs");
                    }
                    rec.values[k] = e.value;
                    if (k == EstimatorKind::diff_in_means && pa.n_pairs() >= 2) {
                        VarianceEstimate v = mp_variance(obs, pa);
                        ConfidenceInterval ci = confidence_interval(e, v, cfg.level);
                        rec.has_ci = true;
                        rec.ci_lower = ci.lower;
                        rec.ci_upper = ci.upper;
                    }
                } catch (const error& err) {
                    rec.failures[k] = err.what();
                }
            }
        } else {
            std::vector<int> labels;
            if (cfg.strata_thresholds.empty()) {
                labels = stratify_by_quantiles(table.x, cfg.strata_count);
            } else {
                labels.reserve(table.size());
                for (double x : table.x) {
                    int lab = 1;
                    for (double t : cfg.strata_thresholds) lab += (x >= t) ? 1 : 0;
                    labels.push_back(lab);
                }
            }
            StrataAssignment sa = make_strata(std::move(labels), cfg.strata_count, cfg.nu);
            auto d = randomize_stratified_block(sa, design_seed);
            ObservedSample obs = observe(table, d, nullptr, &sa);

            std::size_t attrited = 0;
            for (auto r : obs.r) attrited += (r == 0);
            rec.attrition_rate = static_cast<double>(attrited) / static_cast<double>(n_units);

            for (EstimatorKind k : cfg.estimators) {
                try {
                    Estimate e;
                    switch (k) {
                        case EstimatorKind::diff_in_means: e = diff_in_means(obs); break;
                        case EstimatorKind::strata_fe: e = strata_fe_coefficient(obs, sa); break;
                        default:
                            throw estimation_error(to_string(k) + " not valid for strata");
                    }
                    rec.values[k] = e.value;
                    if (k == EstimatorKind::strata_fe)
                        rec.contrast_free_rate = static_cast<double>(e.degenerate_strata) /
                                                 static_cast<double>(cfg.strata_count);
                } catch (const error& err) {
                    rec.failures[k] = err.what();
                }
            }
        }
    } catch (const error& err) {
        // Design-stage failure: every requested estimator is unavailable.
        rec.failed_design = true;
        for (EstimatorKind k : cfg.estimators) rec.failures[k] = err.what();
    }
    return rec;
}

SummaryStats summarize(const ExperimentConfig& cfg, std::size_t n_units,
                       const std::vector<ReplicationRecord>& records,
                       const std::optional<EstimandTargets>& targets) {
    SummaryStats stats;
    stats.replications = records.size();

    double attr = 0.0, broken = 0.0, cf = 0.0;
    for (const auto& rec : records) {
        attr += rec.attrition_rate;
        broken += rec.broken_pair_rate;
        cf += rec.contrast_free_rate;
        bool any_failure = rec.failed_design || !rec.failures.empty();
        stats.failed_replications += any_failure ? 1 : 0;
    }
    double n_reps = static_cast<double>(records.size());
    stats.mean_attrition_rate = attr / n_reps;
    stats.broken_pair_rate = broken / n_reps;
    stats.contrast_free_strata_rate = cf / n_reps;

    for (EstimatorKind k : cfg.estimators) {
        EstimatorSummary s;
        KahanSum sum, sum_sq;
        std::size_t covered = 0;
        for (const auto& rec : records) {
            auto it = rec.values.find(k);
            if (it == rec.values.end()) {
                s.n_failed++;
                continue;
            }
            s.n_ok++;
            sum.add(it->second);
            sum_sq.add(it->second * it->second);
        }
        if (s.n_ok > 0) {
            s.mean = sum.value() / static_cast<double>(s.n_ok);
            double var =
                s.n_ok > 1
                    ? (sum_sq.value() - static_cast<double>(s.n_ok) * s.mean * s.mean) /
                          static_cast<double>(s.n_ok - 1)
                    : 0.0;
            s.sd = std::sqrt(std::max(var, 0.0));
        } else {
            s.mean = kNaN;
            s.sd = kNaN;
        }
        if (targets && s.n_ok > 0) {
            s.bias_theta = s.mean - targets->theta;
            s.bias_obs = s.mean - targets->theta_obs;
            s.bias_design = s.mean - targets->theta_design;
        } else {
            s.bias_theta = s.bias_obs = s.bias_design = kNaN;
        }
        if (k == EstimatorKind::diff_in_means && targets) {
            for (const auto& rec : records) {
                if (!rec.has_ci) continue;
                s.ci_count++;
                if (rec.ci_lower <= targets->theta_obs && targets->theta_obs <= rec.ci_upper)
                    ++covered;
            }
            s.coverage = s.ci_count > 0
                             ? static_cast<double>(covered) / static_cast<double>(s.ci_count)
                             : kNaN;
        } else {
            s.coverage = kNaN;
        }
        stats.by_estimator[k] = s;
    }

    if (2 * stats.failed_replications > stats.replications)
        throw estimation_error("replication failure rate above 50% (" +
                               std::to_string(stats.failed_replications) + " of " +
                               std::to_string(stats.replications) + ") at n=" +
                               std::to_string(n_units));
    return stats;
}

SummaryStats run_at(const ExperimentConfig& cfg, std::size_t n_units, std::uint64_t seed_base,
                    const std::optional<EstimandTargets>& targets) {
    std::vector<ReplicationRecord> records(cfg.replications);
    parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
        records[r] = run_one(cfg, n_units, SplitMix64::child_seed(seed_base, r));
    });
    return summarize(cfg, n_units, records, targets);
}

}  // namespace

SummaryStats run_replications(const ExperimentConfig& cfg,
                              const std::optional<EstimandTargets>& targets) {
    cfg.validate();
    return run_at(cfg, cfg.n_units, cfg.master_seed, targets);
}

std::vector<std::pair<std::size_t, SummaryStats>> convergence_study(
    const ExperimentConfig& cfg, const std::vector<std::size_t>& n_grid,
    const std::optional<EstimandTargets>& targets) {
    cfg.validate();
    if (n_grid.empty()) throw spec_error("convergence_study: empty grid");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1]) throw spec_error("convergence_study: grid must ascend");

    std::vector<std::pair<std::size_t, SummaryStats>> rows;
    rows.reserve(n_grid.size());
    for (std::size_t g = 0; g < n_grid.size(); ++g) {
        std::size_t n = n_grid[g];
        if (cfg.design == DesignKind::matched_pairs && n % 2 != 0)
            throw spec_error("convergence_study: odd n in grid for matched pairs");
        rows.emplace_back(n, run_at(cfg, n, SplitMix64::child_seed(cfg.master_seed, 1000 + g),
                                    targets));
    }
    return rows;
}

EstimandTargets compute_targets(const ExperimentConfig& cfg, std::size_t draws,
                                std::uint64_t seed) {
    EstimandTargets t;
    t.theta = true_ate(cfg.spec);
    t.theta_obs = estimand_obs(cfg.spec, draws, SplitMix64::child_seed(seed, 21)).value;
    if (cfg.design == DesignKind::matched_pairs) {
        t.theta_design = estimand_drop(cfg.spec, draws, SplitMix64::child_seed(seed, 22)).value;
    } else {
        StrataMap map;
        if (cfg.strata_thresholds.empty()) {
            map = quantile_strata_map(cfg.spec.covariate, cfg.strata_count);
        } else {
            auto thresholds = cfg.strata_thresholds;
            map = [thresholds](double x) {
                int lab = 1;
                for (double t : thresholds) lab += (x >= t) ? 1 : 0;
                return lab;
            };
        }
        t.theta_design = estimand_sfe(cfg.spec, map, cfg.strata_count, cfg.nu, draws,
                                      SplitMix64::child_seed(seed, 23)).value;
    }
    return t;
}

std::string SummaryStats::csv_text() const {
    std::ostringstream out;
    out << "estimator,n_ok,n_failed,mean,sd,bias_theta,bias_obs,bias_design,coverage,"
           "mean_attrition_rate,broken_pair_rate,contrast_free_strata_rate\n";
    for (const auto& [k, s] : by_estimator) {
        out << to_string(k) << "," << s.n_ok << "," << s.n_failed << "," << fmt_g(s.mean) << ","
            << fmt_g(s.sd) << "," << fmt_g(s.bias_theta) << "," << fmt_g(s.bias_obs) << ","
            << fmt_g(s.bias_design) << "," << fmt_g(s.coverage) << ","
            << fmt_g(mean_attrition_rate) << "," << fmt_g(broken_pair_rate) << ","
            << fmt_g(contrast_free_strata_rate) << "\n";
    }
    return out.str();
}

std::string SummaryStats::table_text() const {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-14s %8s %8s %12s %12s %12s %12s %10s\n", "estimator",
                  "ok", "failed", "mean", "sd", "bias(obs)", "bias(design)", "coverage");
    out << line;
    for (const auto& [k, s] : by_estimator) {
        std::snprintf(line, sizeof(line), "%-14s %8zu %8zu %12.6f %12.6f %12.6f %12.6f %10.4f\n",
                      to_string(k).c_str(), s.n_ok, s.n_failed, s.mean, s.sd, s.bias_obs,
                      s.bias_design, s.coverage);
        out << line;
    }
    std::snprintf(line, sizeof(line),
                  "replications %zu (failed %zu), mean attrition %.4f, broken pairs %.4f, "
                  "contrast-free strata %.4f\n",
                  replications, failed_replications, mean_attrition_rate, broken_pair_rate,
                  contrast_free_strata_rate);
    out << line;
    return out.str();
}

}  // namespace pairlab
