#include "pairlab/estimands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pairlab/errors.hpp"
#include "pairlab/parallel.hpp"

namespace pairlab {

namespace {

constexpr int kDefaultThreads = 0;

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Ratio-of-means a/b with delta-method variance from raw second moments.
struct RatioStats {
    double value;
    double var;
};
RatioStats ratio_delta(double mean_a, double mean_b, double m_aa, double m_ab, double m_bb,
                       std::size_t n) {
    double nn = static_cast<double>(n);
    double var_a = (m_aa - mean_a * mean_a) / nn;
    double cov_ab = (m_ab - mean_a * mean_b) / nn;
    double var_b = (m_bb - mean_b * mean_b) / nn;
    double r = mean_a / mean_b;
    double var = (var_a - 2.0 * r * cov_ab + r * r * var_b) / (mean_b * mean_b);
    return {r, std::max(var, 0.0)};
}

// Batch-means standard error: evaluate the estimand per chunk and take the
// spread of chunk values. Chunks where the evaluation is undefined are
// skipped.
template <class Eval>
double batch_se(const McChunkTable& table, Eval&& eval) {
    std::vector<double> values;
    values.reserve(table.sums.size());
    for (std::size_t c = 0; c < table.sums.size(); ++c) {
        double v;
        if (eval(table.sums[c], table.counts[c], v) && std::isfinite(v)) values.push_back(v);
    }
    if (values.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return sd / std::sqrt(static_cast<double>(values.size()));
}

}  // namespace

StrataMap quantile_strata_map(const CovariateLaw& law, int n_strata) {
    if (n_strata < 1) throw design_error("quantile_strata_map: need at least one stratum");
    if (law.kind == CovariateLaw::Kind::standard_normal) {
        int k = n_strata;
        return [k](double x) {
            int bin = static_cast<int>(normal_cdf(x) * k) + 1;
            return std::clamp(bin, 1, k);
        };
    }
    // Discrete laws: bins of cumulative mass, each support point assigned
    // by the mass strictly to its left.
    auto support = law.support();
    std::sort(support.begin(), support.end());
    std::vector<double> pts;
    std::vector<int> bins;
    double left = 0.0;
    for (auto [pt, w] : support) {
        int bin = std::clamp(static_cast<int>(left * n_strata) + 1, 1, n_strata);
        pts.push_back(pt);
        bins.push_back(bin);
        left += w;
    }
    return [pts, bins](double x) {
        std::size_t best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double dist = std::abs(pts[i] - x);
            if (dist < best_dist) {
                best_dist = dist;
                best = i;
            }
        }
        return bins[best];
    };
}

double true_ate(const DgpSpec& spec) {
    spec.validate();
    std::size_t deg = std::max(spec.mu1.coeffs.size(), spec.mu0.coeffs.size());
    double theta = 0.0;
    for (std::size_t k = 0; k < deg; ++k) {
        double c1 = k < spec.mu1.coeffs.size() ? spec.mu1.coeffs[k] : 0.0;
        double c0 = k < spec.mu0.coeffs.size() ? spec.mu0.coeffs[k] : 0.0;
        theta += (c1 - c0) * spec.covariate.moment(static_cast<int>(k));
    }
    return theta;
}

McValue estimand_obs(const DgpSpec& spec, std::size_t draws, std::uint64_t seed) {
    spec.validate();
    if (draws < 2) throw spec_error("estimand_obs: need at least 2 draws");
    LatentSampler sampler(spec);
    // Sums of (a, b, c, d) = (Y1 R1, R1, Y0 R0, R0) and their products.
    auto table = mc_chunks(draws, 14, seed, kDefaultThreads,
                           [&](SplitMix64& rng, std::size_t n, std::vector<double>& s) {
                               for (std::size_t i = 0; i < n; ++i) {
                                   auto row = sampler.draw(rng);
                                   double a = row.y1 * row.r1;
                                   double b = row.r1;
                                   double c = row.y0 * row.r0;
                                   double d = row.r0;
                                   s[0] += a; s[1] += b; s[2] += c; s[3] += d;
                                   s[4] += a * a; s[5] += a * b; s[6] += a * c; s[7] += a * d;
                                   s[8] += b * b; s[9] += b * c; s[10] += b * d;
                                   s[11] += c * c; s[12] += c * d;
                                   s[13] += d * d;
                               }
                           });
    auto t = table.totals();
    double n = static_cast<double>(draws);
    double ma = t[0] / n, mb = t[1] / n, mc = t[2] / n, md = t[3] / n;
    if (!(mb > 0.0) || !(md > 0.0))
        throw estimation_error("estimand_obs: attrition-survival mass is zero");

    double value = ma / mb - mc / md;
    // Delta method for g(a,b,c,d) = a/b - c/d over the 4 sample means.
    double g[4] = {1.0 / mb, -ma / (mb * mb), -1.0 / md, mc / (md * md)};
    double mom[4][4];
    mom[0][0] = t[4]; mom[0][1] = t[5]; mom[0][2] = t[6]; mom[0][3] = t[7];
    mom[1][1] = t[8]; mom[1][2] = t[9]; mom[1][3] = t[10];
    mom[2][2] = t[11]; mom[2][3] = t[12];
    mom[3][3] = t[13];
    double mean[4] = {ma, mb, mc, md};
    double var = 0.0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            double second = (j >= i) ? mom[i][j] : mom[j][i];
            double cov = (second / n - mean[i] * mean[j]) / n;
            var += g[i] * g[j] * cov;
        }
    }
    return {value, std::sqrt(std::max(var, 0.0))};
}

namespace {

McValue drop_from_uv_table(const McChunkTable& table, std::size_t draws) {
    auto t = table.totals();
    double n = static_cast<double>(draws);
    double mu = t[0] / n, mv = t[1] / n;
    if (!(mv > 0.0))
        throw estimation_error("estimand_drop: attrition-survival mass is zero");
    auto rs = ratio_delta(mu, mv, t[2] / n, t[3] / n, t[4] / n, draws);
    return {rs.value, std::sqrt(rs.var)};
}

}  // namespace

McValue estimand_drop(const DgpSpec& spec, std::size_t draws, std::uint64_t seed) {
    spec.validate();
    if (draws < 2) throw spec_error("estimand_drop: need at least 2 draws");
    auto table = mc_chunks(draws, 5, seed, kDefaultThreads,
                           [&](SplitMix64& rng, std::size_t n, std::vector<double>& s) {
                               for (std::size_t i = 0; i < n; ++i) {
                                   double x = spec.covariate.sample(rng);
                                   auto m1 = conditional_moments(spec, x, Arm::treatment);
                                   auto m0 = conditional_moments(spec, x, Arm::control);
                                   double u = m1.m1 * m0.p_r - m0.m1 * m1.p_r;
                                   double v = m1.p_r * m0.p_r;
                                   s[0] += u; s[1] += v;
                                   s[2] += u * u; s[3] += u * v; s[4] += v * v;
                               }
                           });
    return drop_from_uv_table(table, draws);
}

McValue estimand_drop_nested(const DgpSpec& spec, std::size_t draws, std::uint64_t seed) {
    spec.validate();
    if (draws < 2) throw spec_error("estimand_drop_nested: need at least 2 draws");
    LatentSampler sampler(spec);
    auto table = mc_chunks(draws, 5, seed, kDefaultThreads,
                           [&](SplitMix64& rng, std::size_t n, std::vector<double>& s) {
                               for (std::size_t i = 0; i < n; ++i) {
                                   double x = spec.covariate.sample(rng);
                                   auto a = sampler.draw_at(x, rng);
                                   auto b = sampler.draw_at(x, rng);
                                   double u = a.y1 * a.r1 * b.r0 - a.y0 * a.r0 * b.r1;
                                   double v = static_cast<double>(a.r1) * b.r0;
                                   s[0] += u; s[1] += v;
                                   s[2] += u * u; s[3] += u * v; s[4] += v * v;
                               }
                           });
    return drop_from_uv_table(table, draws);
}

namespace {

// Shared accumulation for the strata estimand: per stratum, the count and
// the conditional moment sums (p1, p0, m11, m10).
McChunkTable sfe_chunks(const DgpSpec& spec, const StrataMap& strata, int n_strata,
                        std::size_t draws, std::uint64_t seed) {
    std::size_t dims = 5 * static_cast<std::size_t>(n_strata);
    return mc_chunks(draws, dims, seed, kDefaultThreads,
                     [&](SplitMix64& rng, std::size_t n, std::vector<double>& s) {
                         for (std::size_t i = 0; i < n; ++i) {
                             double x = spec.covariate.sample(rng);
                             int lab = strata(x);
                             if (lab < 1 || lab > n_strata)
                                 throw design_error("strata map produced an out-of-range label");
                             auto m1 = conditional_moments(spec, x, Arm::treatment);
                             auto m0 = conditional_moments(spec, x, Arm::control);
                             std::size_t base = 5 * static_cast<std::size_t>(lab - 1);
                             s[base] += 1.0;
                             s[base + 1] += m1.p_r;
                             s[base + 2] += m0.p_r;
                             s[base + 3] += m1.m1;
                             s[base + 4] += m0.m1;
                         }
                     });
}

// Evaluates the strata-fixed-effects estimand (or one lambda weight) from
// accumulated sums. Returns false when undefined for these sums.
bool sfe_eval(const std::vector<double>& sums, std::size_t count, int n_strata, double nu,
              int lambda_stratum, double& out) {
    double total = static_cast<double>(count);
    double num = 0.0;
    double norm = 0.0;
    double lambda_term = 0.0;
    for (int s = 0; s < n_strata; ++s) {
        std::size_t base = 5 * static_cast<std::size_t>(s);
        double cnt = sums[base];
        if (cnt <= 0.0) return false;  // empty stratum mass
        double p_share = cnt / total;
        double p1 = sums[base + 1] / cnt;
        double p0 = sums[base + 2] / cnt;
        double m11 = sums[base + 3] / cnt;
        double m10 = sums[base + 4] / cnt;
        double surv = nu * p1 + (1.0 - nu) * p0;
        if (!(surv > 0.0)) return false;  // no survival mass in stratum
        double weight = p1 * p0 / surv;
        norm += p_share * weight;
        num += p_share * (m11 * p0 - m10 * p1) / surv;
        if (lambda_stratum == s + 1) lambda_term = weight;
    }
    if (!(norm > 0.0)) return false;
    out = (lambda_stratum > 0) ? lambda_term / norm : num / norm;
    return true;
}

}  // namespace

McValue estimand_sfe(const DgpSpec& spec, const StrataMap& strata, int n_strata, double nu,
                     std::size_t draws, std::uint64_t seed) {
    spec.validate();
    if (!(nu > 0.0 && nu < 1.0)) throw design_error("estimand_sfe: nu must lie in (0,1)");
    if (draws < 2) throw spec_error("estimand_sfe: need at least 2 draws");
    auto table = sfe_chunks(spec, strata, n_strata, draws, seed);
    auto totals = table.totals();
    double value;
    if (!sfe_eval(totals, draws, n_strata, nu, 0, value))
        throw estimation_error("estimand_sfe: estimand undefined (empty stratum mass or no survival)");
    double se = batch_se(table, [&](const std::vector<double>& s, std::size_t c, double& v) {
        return sfe_eval(s, c, n_strata, nu, 0, v);
    });
    return {value, se};
}

McValue lambda_weight(const DgpSpec& spec, const StrataMap& strata, int n_strata, int s,
                      double nu, std::size_t draws, std::uint64_t seed) {
    spec.validate();
    if (s < 1 || s > n_strata) throw design_error("lambda_weight: stratum out of range");
    if (!(nu > 0.0 && nu < 1.0)) throw design_error("lambda_weight: nu must lie in (0,1)");
    auto table = sfe_chunks(spec, strata, n_strata, draws, seed);
    auto totals = table.totals();
    double value;
    if (!sfe_eval(totals, draws, n_strata, nu, s, value))
        throw estimation_error("lambda_weight: weight undefined (empty stratum mass or no survival)");
    double se = batch_se(table, [&](const std::vector<double>& sums, std::size_t c, double& v) {
        return sfe_eval(sums, c, n_strata, nu, s, v);
    });
    return {value, se};
}

McValue rho_weight(const DgpSpec& spec, double x, std::size_t draws, std::uint64_t seed) {
    spec.validate();
    auto m1 = conditional_moments(spec, x, Arm::treatment);
    auto m0 = conditional_moments(spec, x, Arm::control);
    double numer = m1.p_r * m0.p_r;

    if (spec.covariate.discrete()) {
        double denom = 0.0;
        for (auto [pt, w] : spec.covariate.support()) {
            auto q1 = conditional_moments(spec, pt, Arm::treatment);
            auto q0 = conditional_moments(spec, pt, Arm::control);
            denom += w * q1.p_r * q0.p_r;
        }
        if (!(denom > 0.0)) throw estimation_error("rho_weight: weight undefined (zero denominator)");
        return {numer / denom, 0.0};
    }

    if (draws < 2) throw spec_error("rho_weight: need at least 2 draws");
    auto table = mc_chunks(draws, 2, seed, kDefaultThreads,
                           [&](SplitMix64& rng, std::size_t n, std::vector<double>& s) {
                               for (std::size_t i = 0; i < n; ++i) {
                                   double xv = spec.covariate.sample(rng);
                                   auto q1 = conditional_moments(spec, xv, Arm::treatment);
                                   auto q0 = conditional_moments(spec, xv, Arm::control);
                                   double v = q1.p_r * q0.p_r;
                                   s[0] += v;
                                   s[1] += v * v;
                               }
                           });
    auto t = table.totals();
    double n = static_cast<double>(draws);
    double md = t[0] / n;
    if (!(md > 0.0)) throw estimation_error("rho_weight: weight undefined (zero denominator)");
    double var_d = (t[1] / n - md * md) / n;
    double value = numer / md;
    double se = std::sqrt(std::max(numer * numer * var_d / (md * md * md * md), 0.0));
    return {value, se};
}

McValue asymptotic_variance(const DgpSpec& spec, std::size_t draws, std::uint64_t seed) {
    spec.validate();
    if (draws < 2) throw spec_error("asymptotic_variance: need at least 2 draws");
    std::uint64_t seed1 = SplitMix64::child_seed(seed, 1);
    std::uint64_t seed2 = SplitMix64::child_seed(seed, 2);

    // Pass 1: E[R(d)], E[Y(d)R(d)].
    auto pass1 = mc_chunks(draws, 4, seed1, kDefaultThreads,
                           [&](SplitMix64& rng, std::size_t n, std::vector<double>& s) {
                               for (std::size_t i = 0; i < n; ++i) {
                                   double x = spec.covariate.sample(rng);
                                   auto m1 = conditional_moments(spec, x, Arm::treatment);
                                   auto m0 = conditional_moments(spec, x, Arm::control);
                                   s[0] += m1.p_r; s[1] += m1.m1;
                                   s[2] += m0.p_r; s[3] += m0.m1;
                               }
                           });
    auto t1 = pass1.totals();
    double n = static_cast<double>(draws);
    double er1 = t1[0] / n, eyr1 = t1[1] / n, er0 = t1[2] / n, eyr0 = t1[3] / n;
    if (!(er1 > 0.0) || !(er0 > 0.0))
        throw estimation_error("asymptotic_variance: attrition-survival mass is zero");
    double c1 = eyr1 / er1, c0 = eyr0 / er0;

    // Pass 2: E[R(d)(Y(d)-c_d)^2] per arm and the conditional-mean term.
    auto eval = [&](const std::vector<double>& s, std::size_t cnt, double& out) {
        double m = static_cast<double>(cnt);
        if (!(m > 0.0)) return false;
        out = s[0] / m / (er1 * er1) + s[1] / m / (er0 * er0) - 0.5 * s[2] / m;
        return true;
    };
    auto pass2 = mc_chunks(draws, 3, seed2, kDefaultThreads,
                           [&](SplitMix64& rng, std::size_t cnt, std::vector<double>& s) {
                               for (std::size_t i = 0; i < cnt; ++i) {
                                   double x = spec.covariate.sample(rng);
                                   auto m1 = conditional_moments(spec, x, Arm::treatment);
                                   auto m0 = conditional_moments(spec, x, Arm::control);
                                   double w1 = m1.m2 - 2.0 * c1 * m1.m1 + c1 * c1 * m1.p_r;
                                   double w0 = m0.m2 - 2.0 * c0 * m0.m1 + c0 * c0 * m0.p_r;
                                   double h1 = (m1.m1 - c1 * m1.p_r) / er1;
                                   double h0 = (m0.m1 - c0 * m0.p_r) / er0;
                                   s[0] += w1;
                                   s[1] += w0;
                                   s[2] += (h1 + h0) * (h1 + h0);
                               }
                           });
    auto t2 = pass2.totals();
    double value = 0.0;
    if (!eval(t2, draws, value))
        throw estimation_error("asymptotic_variance: no draws accumulated");
    double se = batch_se(pass2, eval);
    return {value, se};
}

McValue asymptotic_variance_nested(const DgpSpec& spec, std::size_t draws, std::uint64_t seed) {
    spec.validate();
    if (draws < 2) throw spec_error("asymptotic_variance_nested: need at least 2 draws");
    LatentSampler sampler(spec);
    std::uint64_t seed1 = SplitMix64::child_seed(seed, 1);
    std::uint64_t seed2 = SplitMix64::child_seed(seed, 2);

    auto pass1 = mc_chunks(draws, 4, seed1, kDefaultThreads,
                           [&](SplitMix64& rng, std::size_t n, std::vector<double>& s) {
                               for (std::size_t i = 0; i < n; ++i) {
                                   auto row = sampler.draw(rng);
                                   s[0] += row.r1; s[1] += row.y1 * row.r1;
                                   s[2] += row.r0; s[3] += row.y0 * row.r0;
                               }
                           });
    auto t1 = pass1.totals();
    double n = static_cast<double>(draws);
    double er1 = t1[0] / n, er0 = t1[2] / n;
    if (!(er1 > 0.0) || !(er0 > 0.0))
        throw estimation_error("asymptotic_variance_nested: attrition-survival mass is zero");
    double c1 = (t1[1] / n) / er1, c0 = (t1[3] / n) / er0;

    auto adj = [&](const LatentSampler::Row& row, Arm d) {
        double r = (d == Arm::treatment) ? row.r1 : row.r0;
        double y = (d == Arm::treatment) ? row.y1 : row.y0;
        double er = (d == Arm::treatment) ? er1 : er0;
        double c = (d == Arm::treatment) ? c1 : c0;
        return (r / er) * (y - c);
    };
    auto eval = [&](const std::vector<double>& s, std::size_t cnt, double& out) {
        double m = static_cast<double>(cnt);
        if (!(m > 0.0)) return false;
        double var1 = s[0] / m - (s[3] / m) * (s[3] / m);
        double var0 = s[1] / m - (s[4] / m) * (s[4] / m);
        out = var1 + var0 - 0.5 * s[2] / m;
        return true;
    };
    auto pass2 = mc_chunks(draws, 5, seed2, kDefaultThreads,
                           [&](SplitMix64& rng, std::size_t cnt, std::vector<double>& s) {
                               for (std::size_t i = 0; i < cnt; ++i) {
                                   double x = spec.covariate.sample(rng);
                                   auto a = sampler.draw_at(x, rng);
                                   auto b = sampler.draw_at(x, rng);
                                   double a1 = adj(a, Arm::treatment);
                                   double a0 = adj(a, Arm::control);
                                   double b1 = adj(b, Arm::treatment);
                                   double b0 = adj(b, Arm::control);
                                   s[0] += a1 * a1;
                                   s[1] += a0 * a0;
                                   s[2] += (a1 + a0) * (b1 + b0);
                                   s[3] += a1;
                                   s[4] += a0;
                               }
                           });
    auto t2 = pass2.totals();
    double value = 0.0;
    if (!eval(t2, draws, value))
        throw estimation_error("asymptotic_variance_nested: no draws accumulated");
    double se = batch_se(pass2, eval);
    return {value, se};
}

AttritionWeightedAverages attrition_weighted_averages(const DgpSpec& spec, std::size_t draws,
                                       std::uint64_t seed) {
    spec.validate();
    if (!spec.common_attrition)
        throw capability_error("attrition_weighted_averages: requires common attrition");
    for (std::size_t y_row : {std::size_t{0}, std::size_t{1}})
        for (std::size_t r_col : {std::size_t{2}, std::size_t{3}})
            if (spec.error_cov[y_row * 4 + r_col] != 0.0)
                throw capability_error(
                    "attrition_weighted_averages: requires zero outcome-attrition covariance");
    if (draws < 2) throw spec_error("attrition_weighted_averages: need at least 2 draws");

    // Per draw: tau(x) = mu1 - mu0, q(x) = P(R=1 | X=x).
    auto table = mc_chunks(draws, 10, seed, kDefaultThreads,
                           [&](SplitMix64& rng, std::size_t n, std::vector<double>& s) {
                               for (std::size_t i = 0; i < n; ++i) {
                                   double x = spec.covariate.sample(rng);
                                   double tau = spec.mu1(x) - spec.mu0(x);
                                   double q = normal_cdf(spec.threshold(Arm::treatment)(x));
                                   double a1 = tau * q, b1 = q;
                                   double a2 = tau * q * q, b2 = q * q;
                                   s[0] += a1; s[1] += b1; s[2] += a2; s[3] += b2;
                                   s[4] += a1 * a1; s[5] += a1 * b1; s[6] += b1 * b1;
                                   s[7] += a2 * a2; s[8] += a2 * b2; s[9] += b2 * b2;
                               }
                           });
    auto t = table.totals();
    double n = static_cast<double>(draws);
    if (!(t[1] > 0.0) || !(t[3] > 0.0))
        throw estimation_error("attrition_weighted_averages: attrition-survival mass is zero");
    auto r1 = ratio_delta(t[0] / n, t[1] / n, t[4] / n, t[5] / n, t[6] / n, draws);
    auto r2 = ratio_delta(t[2] / n, t[3] / n, t[7] / n, t[8] / n, t[9] / n, draws);
    return {{r1.value, std::sqrt(r1.var)}, {r2.value, std::sqrt(r2.var)}};
}

std::string EstimandReport::to_key_value_text() const {
    std::ostringstream out;
    out << "theta = " << fmt_g(theta) << "\n";
    out << "theta_obs = " << fmt_g(theta_obs.value) << "\n";
    out << "theta_obs_se = " << fmt_g(theta_obs.se) << "\n";
    out << "theta_drop = " << fmt_g(theta_drop.value) << "\n";
    out << "theta_drop_se = " << fmt_g(theta_drop.se) << "\n";
    if (theta_sfe) {
        out << "theta_sfe = " << fmt_g(theta_sfe->value) << "\n";
        out << "theta_sfe_se = " << fmt_g(theta_sfe->se) << "\n";
    }
    if (sigma_sq_mp) {
        out << "sigma_sq_mp = " << fmt_g(sigma_sq_mp->value) << "\n";
        out << "sigma_sq_mp_se = " << fmt_g(sigma_sq_mp->se) << "\n";
    }
    out << "mc_draws = " << mc_draws << "\n";
    out << "seed = " << seed << "\n";
    return out.str();
}

std::string EstimandReport::csv_header() const {
    std::string h = "theta,theta_obs,theta_obs_se,theta_drop,theta_drop_se";
    if (theta_sfe) h += ",theta_sfe,theta_sfe_se";
    if (sigma_sq_mp) h += ",sigma_sq_mp,sigma_sq_mp_se";
    h += ",mc_draws,seed";
    return h;
}

std::string EstimandReport::csv_row() const {
    std::ostringstream out;
    out << fmt_g(theta) << "," << fmt_g(theta_obs.value) << "," << fmt_g(theta_obs.se) << ","
        << fmt_g(theta_drop.value) << "," << fmt_g(theta_drop.se);
    if (theta_sfe) out << "," << fmt_g(theta_sfe->value) << "," << fmt_g(theta_sfe->se);
    if (sigma_sq_mp) out << "," << fmt_g(sigma_sq_mp->value) << "," << fmt_g(sigma_sq_mp->se);
    out << "," << mc_draws << "," << seed;
    return out.str();
}

EstimandReport estimand_report(const DgpSpec& spec, std::size_t draws, std::uint64_t seed,
                               std::optional<SfeRequest> sfe, bool with_variance) {
    EstimandReport rep;
    rep.theta = true_ate(spec);
    rep.theta_obs = estimand_obs(spec, draws, SplitMix64::child_seed(seed, 10));
    rep.theta_drop = estimand_drop(spec, draws, SplitMix64::child_seed(seed, 11));
    if (sfe) {
        auto map = quantile_strata_map(spec.covariate, sfe->n_strata);
        rep.theta_sfe = estimand_sfe(spec, map, sfe->n_strata, sfe->nu, draws,
                                     SplitMix64::child_seed(seed, 12));
    }
    if (with_variance)
        rep.sigma_sq_mp = asymptotic_variance(spec, draws, SplitMix64::child_seed(seed, 13));
    rep.mc_draws = draws;
    rep.seed = seed;
    return rep;
}

}  // namespace pairlab
