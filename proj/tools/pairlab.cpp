// Command-line front end: wires config files to the simulation, estimand,
// Monte Carlo and re-analysis pipelines with reproducible seeds.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pairlab/design.hpp"
#include "pairlab/errors.hpp"
#include "pairlab/estimands.hpp"
#include "pairlab/estimators.hpp"
#include "pairlab/inference.hpp"
#include "pairlab/montecarlo.hpp"
#include "pairlab/reanalysis.hpp"

namespace {

using namespace pairlab;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;  // estimation/runtime failure
constexpr int kExitConfig = 2;   // bad configuration or input file

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw spec_error("cannot open config file '" + path + "'");
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw spec_error("cannot parse '" + path + "': " + e.what());
    }
}

// Every output file starts with the resolved configuration and seed so a
// run can be reproduced from the artifact alone.
void write_output(const std::string& path, const std::string& subcommand,
                  const nlohmann::json& resolved_config, std::uint64_t seed,
                  const std::string& body) {
    std::ostringstream full;
    full << "# pairlab " << subcommand << "\n";
    full << "# seed: " << seed << "\n";
    full << "# config: " << resolved_config.dump() << "\n";
    full << body;
    if (path.empty() || path == "-") {
        std::cout << full.str();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw spec_error("cannot write output file '" + path + "'");
    out << full.str();
}

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string output = "-";
    std::string format = "text";  // "text" or "csv"
    std::optional<std::uint64_t> seed_override;
    int threads = 0;
};

DgpSpec resolve_dgp(const CommonOpts& opts, const nlohmann::json& cfg) {
    if (!opts.preset.empty()) return DgpSpec::preset(opts.preset);
    if (cfg.contains("dgp")) return DgpSpec::from_json(cfg.at("dgp"));
    throw spec_error("no DGP given: use --preset or a config file with a 'dgp' entry");
}

int cmd_simulate(const CommonOpts& opts, std::uint64_t seed, std::size_t n,
                 const std::string& design_name, int strata, double nu) {
    nlohmann::json cfg =
        opts.config_path.empty() ? nlohmann::json::object() : load_json_file(opts.config_path);
    DgpSpec spec = resolve_dgp(opts, cfg);
    if (cfg.contains("n_units") && n == 0) n = cfg.at("n_units").get<std::size_t>();
    if (n == 0) n = 1000;

    std::string design = design_name;
    if (cfg.contains("design")) {
        const auto& dj = cfg.at("design");
        if (design.empty()) design = dj.value("type", "matched_pairs");
        strata = dj.value("strata", strata);
        nu = dj.value("nu", nu);
    }
    if (design.empty()) design = "matched_pairs";

    PotentialTable table = draw_sample(spec, n, SplitMix64::child_seed(seed, 0));
    std::uint64_t design_seed = SplitMix64::child_seed(seed, 1);

    ObservedSample obs;
    std::ostringstream body;
    std::ostringstream estimates;
    if (design == "matched_pairs") {
        PairAssignment pa = pair_adjacent(table.x);
        auto d = randomize_within_pairs(pa, design_seed);
        obs = observe(table, d, &pa);
        Estimate dim = diff_in_means(obs);
        Estimate drop = theta_drop(obs, pa);
        estimates << "# diff_in_means: " << fmt_g(dim.value) << "\n";
        estimates << "# theta_drop: " << fmt_g(drop.value) << "\n";
        if (pa.n_pairs() >= 2) {
            VarianceEstimate v = mp_variance(obs, pa);
            ConfidenceInterval ci = confidence_interval(dim, v, 0.95);
            estimates << "# v_sq: " << fmt_g(v.v_sq) << "  ci95: [" << fmt_g(ci.lower) << ", "
                      << fmt_g(ci.upper) << "]\n";
        }
    } else if (design == "stratified") {
        auto labels = stratify_by_quantiles(table.x, strata);
        StrataAssignment sa = make_strata(std::move(labels), strata, nu);
        auto d = randomize_stratified_block(sa, design_seed);
        obs = observe(table, d, nullptr, &sa);
        Estimate dim = diff_in_means(obs);
        Estimate sfe = strata_fe_coefficient(obs, sa);
        estimates << "# diff_in_means: " << fmt_g(dim.value) << "\n";
        estimates << "# strata_fe: " << fmt_g(sfe.value) << "\n";
    } else {
        throw spec_error("unknown design '" + design + "'");
    }

    body << estimates.str();
    body << "unit,x,y,r,d";
    if (!obs.pair_id.empty()) body << ",pair_id";
    if (!obs.stratum_id.empty()) body << ",stratum_id";
    body << "\n";
    for (std::size_t i = 0; i < obs.size(); ++i) {
        body << i + 1 << "," << fmt_g(obs.x[i]) << ",";
        if (obs.r[i]) body << fmt_g(obs.y[i]);
        // attrited outcomes are left empty so the file round-trips through reanalyze
        body << "," << int(obs.r[i]) << "," << int(obs.d[i]);
        if (!obs.pair_id.empty()) body << "," << obs.pair_id[i] + 1;
        if (!obs.stratum_id.empty()) body << "," << obs.stratum_id[i];
        body << "\n";
    }

    nlohmann::json resolved;
    resolved["dgp"] = spec.to_json();
    resolved["design"] = design;
    resolved["n_units"] = n;
    write_output(opts.output, "simulate", resolved, seed, body.str());
    return kExitOk;
}

int cmd_estimands(const CommonOpts& opts, std::uint64_t seed, std::size_t draws, int strata,
                  double nu, bool with_sfe, bool with_variance) {
    nlohmann::json cfg =
        opts.config_path.empty() ? nlohmann::json::object() : load_json_file(opts.config_path);
    DgpSpec spec = resolve_dgp(opts, cfg);
    if (cfg.contains("draws") && draws == 0) draws = cfg.at("draws").get<std::size_t>();
    if (draws == 0) draws = 1000000;

    std::optional<SfeRequest> sfe;
    if (with_sfe) sfe = SfeRequest{strata, nu};
    EstimandReport rep = estimand_report(spec, draws, seed, sfe, with_variance);

    std::string body = (opts.format == "csv") ? rep.csv_header() + "\n" + rep.csv_row() + "\n"
                                              : rep.to_key_value_text();
    nlohmann::json resolved;
    resolved["dgp"] = spec.to_json();
    resolved["draws"] = draws;
    write_output(opts.output, "estimands", resolved, seed, body);
    return kExitOk;
}

int cmd_montecarlo(const CommonOpts& opts, std::optional<std::uint64_t> seed_flag,
                   std::size_t reps_flag, std::size_t n_flag, std::size_t target_draws) {
    if (opts.config_path.empty()) throw spec_error("montecarlo requires --config");
    nlohmann::json cfg = load_json_file(opts.config_path);
    ExperimentConfig ec = ExperimentConfig::from_json(cfg);
    if (seed_flag) ec.master_seed = *seed_flag;
    if (reps_flag > 0) ec.replications = reps_flag;
    if (n_flag > 0) ec.n_units = n_flag;
    if (opts.threads > 0) ec.threads = opts.threads;
    ec.validate();

    EstimandTargets targets =
        compute_targets(ec, target_draws, SplitMix64::child_seed(ec.master_seed, 999));
    SummaryStats stats = run_replications(ec, targets);

    std::ostringstream body;
    body << "# targets: theta=" << fmt_g(targets.theta) << " theta_obs="
         << fmt_g(targets.theta_obs) << " theta_design=" << fmt_g(targets.theta_design) << "\n";
    body << ((opts.format == "csv") ? stats.csv_text() : stats.table_text());
    write_output(opts.output, "montecarlo", ec.to_json(), ec.master_seed, body.str());
    return kExitOk;
}

int cmd_reanalyze(const CommonOpts& opts, const std::string& input, const CsvSchema& schema,
                  bool use_covariates) {
    TrialDataset ds = load_csv(input, schema);
    DualEstimate est = dual_estimates(ds, use_covariates);
    std::string body = (opts.format == "csv") ? dual_estimate_csv(est) : dual_estimate_text(est);
    nlohmann::json resolved;
    resolved["input"] = input;
    resolved["outcome_col"] = schema.outcome_col;
    resolved["treated_col"] = schema.treated_col;
    resolved["group_col"] = schema.group_col;
    resolved["covariate_cols"] = schema.covariate_cols;
    resolved["use_covariates"] = use_covariates;
    write_output(opts.output, "reanalyze", resolved, 0, body);
    return kExitOk;
}

int cmd_appendix_example(const CommonOpts& opts, std::uint64_t seed, std::size_t draws) {
    std::ostringstream body;
    char line[256];
    std::snprintf(line, sizeof(line), "%-14s %10s %12s %12s %12s %12s %12s\n", "preset", "theta",
                  "theta_obs", "(printed)", "theta_drop", "(printed)", "draws");
    body << line;
    struct Ref {
        const char* name;
        double obs, drop;
    };
    const Ref refs[] = {{"appendix-ex1", 1.17, -0.50}, {"appendix-ex2", 0.56, 0.86}};
    for (const Ref& ref : refs) {
        DgpSpec spec = DgpSpec::preset(ref.name);
        double theta = true_ate(spec);
        McValue obs = estimand_obs(spec, draws, SplitMix64::child_seed(seed, 10));
        McValue drop = estimand_drop(spec, draws, SplitMix64::child_seed(seed, 11));
        std::snprintf(line, sizeof(line), "%-14s %10.4f %12.4f %12.2f %12.4f %12.2f %12zu\n",
                      ref.name, theta, obs.value, ref.obs, drop.value, ref.drop, draws);
        body << line;
    }
    nlohmann::json resolved;
    resolved["draws"] = draws;
    write_output(opts.output, "appendix-example", resolved, seed, body.str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pairlab: estimator and estimand analysis for matched-pair and stratified "
                 "experiments with attrition"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::uint64_t seed = 20240801;
    std::size_t n_units = 0;
    std::size_t draws = 0;
    std::size_t reps = 0;
    std::size_t target_draws = 1000000;
    std::string design_name;
    int strata = 10;
    double nu = 0.5;
    bool with_sfe = false;
    bool with_variance = false;
    std::string input_path;
    CsvSchema schema;
    std::string covariate_cols;
    bool use_covariates = false;
    std::optional<std::uint64_t> seed_flag;

    auto add_common = [&](CLI::App* sub, bool with_config = true) {
        if (with_config) sub->add_option("--config", opts.config_path, "JSON config file");
        sub->add_option("--out", opts.output, "output file ('-' for stdout)");
        sub->add_option("--format", opts.format, "output format: text or csv")
            ->check(CLI::IsMember({"text", "csv"}));
        sub->add_option("--threads", opts.threads, "worker thread cap (0 = hardware)");
    };

    CLI::App* sim = app.add_subcommand("simulate", "draw one experiment and export the sample");
    add_common(sim);
    sim->add_option("--preset", opts.preset, "built-in DGP preset");
    sim->add_option("--seed", seed, "master seed");
    sim->add_option("--n", n_units, "number of units");
    sim->add_option("--design", design_name, "matched_pairs or stratified");
    sim->add_option("--strata", strata, "stratum count (stratified design)");
    sim->add_option("--nu", nu, "target treated share (stratified design)");

    CLI::App* est = app.add_subcommand("estimands", "integrate population estimands for a DGP");
    add_common(est);
    est->add_option("--preset", opts.preset, "built-in DGP preset");
    est->add_option("--seed", seed, "master seed");
    est->add_option("--draws", draws, "Monte Carlo draws");
    est->add_flag("--sfe", with_sfe, "include the strata-fixed-effects estimand");
    est->add_option("--strata", strata, "stratum count for --sfe");
    est->add_option("--nu", nu, "target treated share for --sfe");
    est->add_flag("--variance", with_variance, "include the matched-pair asymptotic variance");

    CLI::App* mc = app.add_subcommand("montecarlo", "replicate experiments and summarize");
    add_common(mc);
    mc->add_option("--seed", seed_flag, "master seed override");
    mc->add_option("--reps", reps, "replication count override");
    mc->add_option("--n", n_units, "units per replication override");
    mc->add_option("--target-draws", target_draws, "draws for the oracle targets");

    CLI::App* re = app.add_subcommand("reanalyze", "re-analyze an experiment data file");
    add_common(re, false);
    re->add_option("--input", input_path, "CSV data file")->required();
    re->add_option("--outcome-col", schema.outcome_col, "outcome column name");
    re->add_option("--treated-col", schema.treated_col, "treatment column name");
    re->add_option("--group-col", schema.group_col, "pair/stratum id column name");
    re->add_option("--covariate-cols", covariate_cols, "comma-separated covariate columns");
    re->add_flag("--covariates", use_covariates, "control for the covariate columns");

    CLI::App* ax = app.add_subcommand("appendix-example",
                                      "run both built-in example processes and print "
                                      "estimands next to their published reference values");
    add_common(ax, false);
    ax->add_option("--seed", seed, "master seed");
    ax->add_option("--draws", draws, "Monte Carlo draws (default 10^6)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (!covariate_cols.empty()) {
            std::stringstream ss(covariate_cols);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!item.empty()) schema.covariate_cols.push_back(item);
        }
        if (sim->parsed()) return cmd_simulate(opts, seed, n_units, design_name, strata, nu);
        if (est->parsed())
            return cmd_estimands(opts, seed, draws, strata, nu, with_sfe, with_variance);
        if (mc->parsed()) return cmd_montecarlo(opts, seed_flag, reps, n_units, target_draws);
        if (re->parsed()) return cmd_reanalyze(opts, input_path, schema, use_covariates);
        if (ax->parsed()) return cmd_appendix_example(opts, seed, draws == 0 ? 1000000 : draws);
        std::cerr << "no subcommand\n";
        return kExitConfig;
    } catch (const spec_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ingestion_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
