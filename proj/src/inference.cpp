#include "pairlab/inference.hpp"

#include <algorithm>
#include <cmath>

#include "pairlab/errors.hpp"
#include "pairlab/math.hpp"

namespace pairlab {

std::vector<double> adjusted_outcomes(const ObservedSample& s) {
    const std::size_t n = s.size();
    if (n == 0 || n % 2 != 0)
        throw estimation_error("adjusted_outcomes: need an even number of units");
    const double n_pairs = static_cast<double>(n) / 2.0;

    KahanSum sum_y[2];
    std::size_t count[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        if (!s.r[i]) continue;
        sum_y[s.d[i]].add(s.y[i]);
        count[s.d[i]]++;
    }
    if (count[0] == 0 || count[1] == 0)
        throw estimation_error("adjusted_outcomes: arm exhausted by attrition");

    double arm_mean[2], scale[2];
    for (int a = 0; a < 2; ++a) {
        arm_mean[a] = sum_y[a].value() / static_cast<double>(count[a]);
        scale[a] = static_cast<double>(count[a]) / n_pairs;
    }
    std::vector<double> yhat(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!s.r[i]) continue;
        int a = s.d[i];
        yhat[i] = (s.y[i] - arm_mean[a]) / scale[a];
    }
    return yhat;
}

VarianceEstimate mp_variance(const ObservedSample& s, const PairAssignment& pa) {
    if (pa.n_units() != s.size()) throw estimation_error("mp_variance: pair assignment mismatch");
    const std::size_t n_pairs = pa.n_pairs();
    if (n_pairs < 2) throw estimation_error("mp_variance: need at least two pairs");

    std::vector<double> yhat = adjusted_outcomes(s);

    KahanSum tau;
    for (const auto& [a, b] : pa.pairs) {
        double diff = yhat[b] - yhat[a];
        tau.add(diff * diff);
    }

    KahanSum lambda;
    for (std::size_t m = 0; m + 1 < n_pairs; m += 2) {
        const auto& [a1, b1] = pa.pairs[m];
        const auto& [a2, b2] = pa.pairs[m + 1];
        double g1 = (yhat[a1] - yhat[b1]) *
                    (static_cast<double>(s.d[a1]) - static_cast<double>(s.d[b1]));
        double g2 = (yhat[a2] - yhat[b2]) *
                    (static_cast<double>(s.d[a2]) - static_cast<double>(s.d[b2]));
        lambda.add(g1 * g2);
    }

    VarianceEstimate v;
    v.n_pairs = n_pairs;
    v.tau_sq = tau.value() / static_cast<double>(n_pairs);
    v.lambda_sq = 2.0 * lambda.value() / static_cast<double>(n_pairs);
    v.v_sq = v.tau_sq - 0.5 * v.lambda_sq;
    v.floored = v.v_sq < 0.0;
    return v;
}

ConfidenceInterval confidence_interval(const Estimate& theta_hat, const VarianceEstimate& v,
                                       double level) {
    if (!(level > 0.0 && level < 1.0))
        throw error("confidence_interval: level must lie strictly in (0,1)");
    if (v.n_pairs < 2) throw estimation_error("confidence_interval: need at least two pairs");
    double z = normal_quantile(0.5 * (1.0 + level));
    double half = z * std::sqrt(std::max(v.v_sq, 0.0) / static_cast<double>(v.n_pairs));
    ConfidenceInterval ci;
    ci.center = theta_hat.value;
    ci.lower = theta_hat.value - half;
    ci.upper = theta_hat.value + half;
    ci.level = level;
    return ci;
}

}  // namespace pairlab
