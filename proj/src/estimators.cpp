#include "pairlab/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "pairlab/errors.hpp"
#include "pairlab/math.hpp"

namespace pairlab {

Estimate diff_in_means(const ObservedSample& s) {
    KahanSum sum_t, sum_c;
    std::size_t n_t = 0, n_c = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s.r[i]) continue;
        if (s.d[i]) {
            sum_t.add(s.y[i]);
            ++n_t;
        } else {
            sum_c.add(s.y[i]);
            ++n_c;
        }
    }
    if (n_t == 0 || n_c == 0)
        throw estimation_error("diff_in_means: arm exhausted by attrition");
    Estimate e;
    e.value = sum_t.value() / static_cast<double>(n_t) - sum_c.value() / static_cast<double>(n_c);
    e.n_used = n_t + n_c;
    e.n_treated = n_t;
    e.n_control = n_c;
    return e;
}

Estimate theta_drop(const ObservedSample& s, const PairAssignment& pa) {
    if (pa.n_units() != s.size()) throw estimation_error("theta_drop: pair assignment mismatch");
    KahanSum gaps;
    std::size_t complete = 0;
    for (const auto& [a, b] : pa.pairs) {
        if (!s.r[a] || !s.r[b]) continue;
        double dd = static_cast<double>(s.d[a]) - static_cast<double>(s.d[b]);
        gaps.add((s.y[a] - s.y[b]) * dd);
        ++complete;
    }
    if (complete == 0) throw estimation_error("theta_drop: all pairs broken by attrition");
    Estimate e;
    e.value = gaps.value() / static_cast<double>(complete);
    e.n_used = 2 * complete;
    e.n_treated = complete;
    e.n_control = complete;
    return e;
}

OlsProjection strata_projection(const ObservedSample& s, const StrataAssignment& sa) {
    if (sa.n_units() != s.size())
        throw estimation_error("strata_projection: assignment length mismatch");
    OlsProjection pr;
    pr.n1.assign(static_cast<std::size_t>(sa.n_strata), 0);
    pr.n.assign(static_cast<std::size_t>(sa.n_strata), 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s.r[i]) continue;
        auto sid = static_cast<std::size_t>(sa.labels[i] - 1);
        pr.n[sid]++;
        if (s.d[i]) pr.n1[sid]++;
    }
    pr.d_tilde.assign(s.size(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s.r[i]) continue;
        auto sid = static_cast<std::size_t>(sa.labels[i] - 1);
        pr.d_tilde[i] = static_cast<double>(s.d[i]) -
                        static_cast<double>(pr.n1[sid]) / static_cast<double>(pr.n[sid]);
    }
    return pr;
}

Estimate strata_fe_coefficient(const ObservedSample& s, const StrataAssignment& sa) {
    OlsProjection pr = strata_projection(s, sa);
    KahanSum num, den;
    std::size_t n_used = 0, n_t = 0, n_c = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s.r[i]) continue;
        num.add(pr.d_tilde[i] * s.y[i]);
        den.add(pr.d_tilde[i] * pr.d_tilde[i]);
        ++n_used;
        if (s.d[i]) ++n_t; else ++n_c;
    }
    int degenerate = 0;
    for (std::size_t sid = 0; sid < pr.n.size(); ++sid)
        if (pr.n[sid] == 0 || pr.n1[sid] == 0 || pr.n1[sid] == pr.n[sid]) ++degenerate;
    if (den.value() <= 0.0)
        throw estimation_error("strata_fe_coefficient: no within-stratum contrast");
    Estimate e;
    e.value = num.value() / den.value();
    e.n_used = n_used;
    e.n_treated = n_t;
    e.n_control = n_c;
    e.degenerate_strata = degenerate;
    return e;
}

OlsResult ols_solve(const std::vector<std::vector<double>>& columns, std::span<const double> y) {
    const std::size_t p = columns.size();
    if (p == 0) throw estimation_error("ols_solve: no columns");
    const std::size_t n = columns[0].size();
    for (const auto& c : columns)
        if (c.size() != n) throw estimation_error("ols_solve: ragged design matrix");
    if (y.size() != n) throw estimation_error("ols_solve: response length mismatch");
    if (n == 0) throw estimation_error("ols_solve: zero usable rows");

    // Modified Gram-Schmidt with one reorthogonalization pass. q holds the
    // orthonormal basis of kept columns; r is the triangular factor linking
    // kept columns to the basis.
    std::vector<std::vector<double>> q;
    std::vector<std::vector<double>> r;       // r[k][j]: <q_j, col_k> for kept col k
    std::vector<std::size_t> kept;
    std::vector<std::uint8_t> dropped(p, 0);
    const double rel_tol = 1e-12;

    for (std::size_t k = 0; k < p; ++k) {
        std::vector<double> v = columns[k];
        double norm0 = 0.0;
        for (double t : v) norm0 += t * t;
        norm0 = std::sqrt(norm0);
        std::vector<double> rk(q.size() + 1, 0.0);
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t j = 0; j < q.size(); ++j) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += q[j][i] * v[i];
                rk[j] += dot;
                for (std::size_t i = 0; i < n; ++i) v[i] -= dot * q[j][i];
            }
        }
        double norm = 0.0;
        for (double t : v) norm += t * t;
        norm = std::sqrt(norm);
        if (norm <= rel_tol * std::max(norm0, 1e-300) || norm0 == 0.0) {
            dropped[k] = 1;
            continue;
        }
        rk[q.size()] = norm;
        for (double& t : v) t /= norm;
        q.push_back(std::move(v));
        r.push_back(std::move(rk));
        kept.push_back(k);
    }
    if (kept.empty()) throw estimation_error("ols_solve: design matrix has rank zero");
    if (n < kept.size()) throw estimation_error("ols_solve: fewer rows than independent columns");

    // qty = Q^T y, then back-substitute through r.
    std::vector<double> qty(q.size(), 0.0);
    for (std::size_t j = 0; j < q.size(); ++j) {
        KahanSum dot;
        for (std::size_t i = 0; i < n; ++i) dot.add(q[j][i] * y[i]);
        qty[j] = dot.value();
    }
    std::vector<double> beta(q.size(), 0.0);
    for (std::size_t j = q.size(); j-- > 0;) {
        double acc = qty[j];
        for (std::size_t m = j + 1; m < q.size(); ++m) acc -= r[m][j] * beta[m];
        beta[j] = acc / r[j][j];
    }

    OlsResult out;
    out.coef.assign(p, 0.0);
    for (std::size_t j = 0; j < kept.size(); ++j) out.coef[kept[j]] = beta[j];
    out.dropped = std::move(dropped);
    out.rank = kept.size();
    return out;
}

Estimate pair_fe_coefficient(const ObservedSample& s, const PairAssignment& pa) {
    if (pa.n_units() != s.size())
        throw estimation_error("pair_fe_coefficient: pair assignment mismatch");

    std::vector<std::size_t> rows;  // non-attritors
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s.r[i]) rows.push_back(i);
    if (rows.empty()) throw estimation_error("pair_fe_coefficient: everyone attrited");

    std::size_t n_t = 0, n_c = 0, complete = 0;
    for (const auto& [a, b] : pa.pairs)
        if (s.r[a] && s.r[b]) ++complete;
    if (complete == 0)
        throw estimation_error("pair_fe_coefficient: all pairs broken by attrition");

    // Column 0: treatment. Then one indicator per pair with observed units;
    // singleton pairs stay in and are inert in the treatment coefficient.
    std::vector<int> pair_of = pa.pair_of();
    std::vector<int> col_of_pair(pa.n_pairs(), -1);
    std::vector<std::vector<double>> cols;
    cols.emplace_back(rows.size(), 0.0);
    std::vector<double> yy(rows.size(), 0.0);
    for (std::size_t idx = 0; idx < rows.size(); ++idx) {
        std::size_t i = rows[idx];
        cols[0][idx] = static_cast<double>(s.d[i]);
        yy[idx] = s.y[i];
        if (s.d[i]) ++n_t; else ++n_c;
        int pj = pair_of[i];
        if (col_of_pair[static_cast<std::size_t>(pj)] < 0) {
            col_of_pair[static_cast<std::size_t>(pj)] = static_cast<int>(cols.size());
            cols.emplace_back(rows.size(), 0.0);
        }
        cols[static_cast<std::size_t>(col_of_pair[static_cast<std::size_t>(pj)])][idx] = 1.0;
    }
    if (n_t == 0 || n_c == 0)
        throw estimation_error("pair_fe_coefficient: arm exhausted by attrition");

    OlsResult fit = ols_solve(cols, yy);
    if (fit.dropped[0])
        throw estimation_error("pair_fe_coefficient: treatment collinear with pair indicators");
    Estimate e;
    e.value = fit.coef[0];
    e.n_used = rows.size();
    e.n_treated = n_t;
    e.n_control = n_c;
    return e;
}

}  // namespace pairlab
