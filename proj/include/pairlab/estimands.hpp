#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pairlab/dgp.hpp"

namespace pairlab {

// A Monte Carlo integrated quantity with its standard error.
struct McValue {
    double value = 0.0;
    double se = 0.0;
};

// Maps a covariate value to a stratum label in 1..n_strata.
using StrataMap = std::function<int(double)>;

// Equal-probability bins of the covariate law (theoretical quantiles).
StrataMap quantile_strata_map(const CovariateLaw& law, int n_strata);

// Average treatment effect E[mu1(X) - mu0(X)] from covariate moments.
double true_ate(const DgpSpec& spec);

// Limit of the difference-in-means estimator:
//   E[R(1)Y(1)]/E[R(1)] - E[R(0)Y(0)]/E[R(0)],
// ratio of means over latent draws, delta-method standard error.
McValue estimand_obs(const DgpSpec& spec, std::size_t draws, std::uint64_t seed);

// Limit of the drop-pairs estimator, integrating the closed-form
// conditional moments over covariate draws.
McValue estimand_drop(const DgpSpec& spec, std::size_t draws, std::uint64_t seed);

// Same estimand via nested simulation (two independent error draws per
// covariate draw); slower, assumption-free cross-check.
McValue estimand_drop_nested(const DgpSpec& spec, std::size_t draws, std::uint64_t seed);

// Limit of the strata-fixed-effects coefficient under the given strata map
// and target proportion nu; standard error by batch means.
McValue estimand_sfe(const DgpSpec& spec, const StrataMap& strata, int n_strata, double nu,
                     std::size_t draws, std::uint64_t seed);

// Convex weight attached to the conditional treatment effect at X = x in
// the drop-pairs estimand. The normalizer is exact for discrete covariate
// laws and Monte Carlo integrated otherwise.
McValue rho_weight(const DgpSpec& spec, double x, std::size_t draws, std::uint64_t seed);

// Convex weight attached to stratum s in the strata-fixed-effects
// estimand, with its normalizer.
McValue lambda_weight(const DgpSpec& spec, const StrataMap& strata, int n_strata, int s,
                      double nu, std::size_t draws, std::uint64_t seed);

// Asymptotic variance of the root-n-scaled difference-in-means estimator
// under matched pairs, using adjusted potential outcomes. Conditional
// expectations come from the closed-form moments.
McValue asymptotic_variance(const DgpSpec& spec, std::size_t draws, std::uint64_t seed);

// Nested Monte Carlo version of asymptotic_variance (independent oracle).
McValue asymptotic_variance_nested(const DgpSpec& spec, std::size_t draws, std::uint64_t seed);

// For processes with common attrition and attrition independent of
// outcomes given X: the two attrition-weighted representations of the
// observed and drop estimands,
//   E[tau(X) q(X)] / E[q(X)]   and   E[tau(X) q(X)^2] / E[q(X)^2],
// with q(x) = E[R|X=x]. The first weights conditional effects by the
// survival probability, the second by its square; they must match
// estimand_obs / estimand_drop respectively.
struct AttritionWeightedAverages {
    McValue obs_weighted;
    McValue drop_weighted;
};
AttritionWeightedAverages attrition_weighted_averages(const DgpSpec& spec, std::size_t draws,
                                                      std::uint64_t seed);

struct EstimandReport {
    double theta = 0.0;
    McValue theta_obs;
    McValue theta_drop;
    std::optional<McValue> theta_sfe;
    std::optional<McValue> sigma_sq_mp;
    std::size_t mc_draws = 0;
    std::uint64_t seed = 0;

    std::string to_key_value_text() const;
    std::string csv_header() const;
    std::string csv_row() const;
};

struct SfeRequest {
    int n_strata;
    double nu;
};
EstimandReport estimand_report(const DgpSpec& spec, std::size_t draws, std::uint64_t seed,
                               std::optional<SfeRequest> sfe = std::nullopt,
                               bool with_variance = false);

}  // namespace pairlab
