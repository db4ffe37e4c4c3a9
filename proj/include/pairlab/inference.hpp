#pragma once

#include <vector>

#include "pairlab/design.hpp"
#include "pairlab/estimators.hpp"

namespace pairlab {

// Variance estimate for the difference-in-means estimator under a
// matched-pair design: v_sq = tau_sq - lambda_sq / 2. All normalizations
// are per pair. v_sq is reported as computed; `floored` marks a negative
// value that interval construction will clamp to zero.
struct VarianceEstimate {
    double tau_sq = 0.0;
    double lambda_sq = 0.0;
    double v_sq = 0.0;
    std::size_t n_pairs = 0;
    bool floored = false;
};

// Arm-centered, attrition-rescaled outcomes:
//   yhat_i = [R_i / ((1/n_pairs) sum_j R_j 1{D_j=D_i})]
//            * (Y_i - mean of observed Y in i's arm),
// zero for attritors.
std::vector<double> adjusted_outcomes(const ObservedSample& s);

// tau_sq averages squared within-pair differences of adjusted outcomes;
// lambda_sq pairs up consecutive pairs (in the covariate-sorted pair order
// produced by pair_adjacent) and averages signed cross-products. A trailing
// odd pair is ignored by lambda_sq.
VarianceEstimate mp_variance(const ObservedSample& s, const PairAssignment& pa);

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.0;
    double center = 0.0;
    bool contains(double v) const { return lower <= v && v <= upper; }
};

// Normal-approximation interval centered at the estimate with half-width
// z_{(1+level)/2} * sqrt(max(v_sq, 0) / n_pairs).
ConfidenceInterval confidence_interval(const Estimate& theta_hat, const VarianceEstimate& v,
                                       double level);

}  // namespace pairlab
