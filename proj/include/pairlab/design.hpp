#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pairlab/dgp.hpp"

namespace pairlab {

// Matched pairs formed by sorting units on the covariate and pairing
// adjacent positions. `order` is the sorting permutation (unit indices in
// ascending covariate order, ties broken by original index); pair j holds
// units order[2j] and order[2j+1], so pairs are ascending in covariate.
struct PairAssignment {
    std::vector<std::size_t> order;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;

    std::size_t n_units() const { return order.size(); }
    std::size_t n_pairs() const { return pairs.size(); }
    // Unit index -> pair index.
    std::vector<int> pair_of() const;
};

PairAssignment pair_adjacent(std::span<const double> x);

// One treated unit per pair, uniformly, pairs independent.
std::vector<std::uint8_t> randomize_within_pairs(const PairAssignment& pa, std::uint64_t seed);

// Strata labels in 1..n_strata plus the target treated share nu.
struct StrataAssignment {
    std::vector<int> labels;
    int n_strata = 0;
    double nu = 0.5;

    std::size_t n_units() const { return labels.size(); }
    std::vector<std::size_t> counts() const;  // per stratum, index 0 = label 1
};

StrataAssignment make_strata(std::vector<int> labels, int n_strata, double nu);

// Empirical-quantile bins with labels 1..k; units with equal covariate
// values always share a label (collapsed to the lower bin).
std::vector<int> stratify_by_quantiles(std::span<const double> x, int k);

// Permuted-block assignment: stratum s gets floor(nu*n(s)) treated units
// plus one more with probability frac(nu*n(s)); positions uniform. The
// realized imbalance |sum_{i in s} (d_i - nu)| is below 1 surely.
std::vector<std::uint8_t> randomize_stratified_block(const StrataAssignment& sa,
                                                     std::uint64_t seed);

// The analyst's view after randomization and attrition. Attrited outcomes
// are recorded as zero with r = 0.
struct ObservedSample {
    std::vector<double> x, y;
    std::vector<std::uint8_t> r, d;
    std::vector<int> pair_id;     // empty unless a pair design was used
    std::vector<int> stratum_id;  // empty unless a stratified design was used

    std::size_t size() const { return y.size(); }
};

ObservedSample observe(const PotentialTable& table, std::span<const std::uint8_t> d,
                       const PairAssignment* pa = nullptr, const StrataAssignment* sa = nullptr);

}  // namespace pairlab
