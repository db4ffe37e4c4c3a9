#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pairlab/design.hpp"

namespace pairlab {

struct Estimate {
    double value = 0.0;
    std::size_t n_used = 0;      // units entering the computation
    std::size_t n_treated = 0;   // treated non-attritors used
    std::size_t n_control = 0;   // control non-attritors used
    int degenerate_strata = 0;   // strata without a treatment contrast (sfe only)
};

// Difference in mean observed outcomes across arms, non-attritors only.
Estimate diff_in_means(const ObservedSample& s);

// Within-pair difference averaged over pairs where both units are
// observed; pairs with an attritor are dropped.
Estimate theta_drop(const ObservedSample& s, const PairAssignment& pa);

// Coefficient on treatment from OLS of Y on treatment and pair indicators
// over non-attritors. Numerically identical to theta_drop by partialling
// out the indicators; computed here as an honest dense regression so the
// identity can be tested. Cost grows with the square of the pair count:
// meant for verification-scale samples, not large replication studies
// (theta_drop gives the same number in O(n)).
Estimate pair_fe_coefficient(const ObservedSample& s, const PairAssignment& pa);

// Residualized treatment among non-attritors: d_tilde_i = D_i - n1(S_i)/n(S_i)
// with counts taken over non-attritors.
struct OlsProjection {
    std::vector<double> d_tilde;    // 0 for attritors
    std::vector<std::size_t> n1;    // treated non-attritors per stratum
    std::vector<std::size_t> n;     // non-attritors per stratum
};
OlsProjection strata_projection(const ObservedSample& s, const StrataAssignment& sa);

// Coefficient on treatment from OLS of Y on treatment and strata
// indicators over non-attritors, computed through the residualized form
// sum(R d_tilde Y) / sum(R d_tilde^2). Strata lacking a within-stratum
// contrast contribute zero to both sums; their count is reported.
Estimate strata_fe_coefficient(const ObservedSample& s, const StrataAssignment& sa);

// Least squares via modified Gram-Schmidt with reorthogonalization.
// Columns that are exact linear combinations of earlier columns are
// dropped (first occurrence kept) and get coefficient zero.
struct OlsResult {
    std::vector<double> coef;          // aligned with input columns
    std::vector<std::uint8_t> dropped; // 1 where a column was dropped
    std::size_t rank = 0;
};
OlsResult ols_solve(const std::vector<std::vector<double>>& columns, std::span<const double> y);

}  // namespace pairlab
