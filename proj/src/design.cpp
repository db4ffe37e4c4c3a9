#include "pairlab/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pairlab/errors.hpp"

namespace pairlab {

std::vector<int> PairAssignment::pair_of() const {
    std::vector<int> out(n_units(), -1);
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        out[pairs[j].first] = static_cast<int>(j);
        out[pairs[j].second] = static_cast<int>(j);
    }
    return out;
}

PairAssignment pair_adjacent(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0 || n % 2 != 0) throw design_error("pair_adjacent: need an even number of units");
    for (double v : x)
        if (!std::isfinite(v)) throw design_error("pair_adjacent: non-finite covariate");

    PairAssignment pa;
    pa.order.resize(n);
    std::iota(pa.order.begin(), pa.order.end(), std::size_t{0});
    std::sort(pa.order.begin(), pa.order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return a < b;
    });
    pa.pairs.reserve(n / 2);
    for (std::size_t j = 0; j < n / 2; ++j)
        pa.pairs.emplace_back(pa.order[2 * j], pa.order[2 * j + 1]);
    return pa;
}

std::vector<std::uint8_t> randomize_within_pairs(const PairAssignment& pa, std::uint64_t seed) {
    if (pa.n_units() == 0) throw design_error("randomize_within_pairs: empty assignment");
    SplitMix64 rng(seed);
    std::vector<std::uint8_t> d(pa.n_units(), 0);
    for (const auto& [first, second] : pa.pairs) {
        bool first_treated = (rng.next_u64() & 1u) != 0;
        d[first] = first_treated ? 1 : 0;
        d[second] = first_treated ? 0 : 1;
    }
    return d;
}

std::vector<std::size_t> StrataAssignment::counts() const {
    std::vector<std::size_t> c(static_cast<std::size_t>(n_strata), 0);
    for (int s : labels) c[static_cast<std::size_t>(s - 1)]++;
    return c;
}

StrataAssignment make_strata(std::vector<int> labels, int n_strata, double nu) {
    if (n_strata < 1) throw design_error("make_strata: need at least one stratum");
    if (!(nu > 0.0 && nu < 1.0)) throw design_error("make_strata: nu must lie strictly in (0,1)");
    for (int s : labels)
        if (s < 1 || s > n_strata) throw design_error("make_strata: label out of range");
    StrataAssignment sa;
    sa.labels = std::move(labels);
    sa.n_strata = n_strata;
    sa.nu = nu;
    return sa;
}

std::vector<int> stratify_by_quantiles(std::span<const double> x, int k) {
    const std::size_t n = x.size();
    if (k < 1) throw design_error("stratify_by_quantiles: k must be at least 1");
    if (static_cast<std::size_t>(k) > n)
        throw design_error("stratify_by_quantiles: more strata than units");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return a < b;
    });

    std::vector<int> labels(n, 0);
    for (std::size_t pos = 0; pos < n; ++pos) {
        int bin = static_cast<int>((pos * static_cast<std::size_t>(k)) / n) + 1;
        // Equal values share the lower bin (half-open value boundaries).
        if (pos > 0 && x[order[pos]] == x[order[pos - 1]]) bin = labels[order[pos - 1]];
        labels[order[pos]] = bin;
    }
    return labels;
}

std::vector<std::uint8_t> randomize_stratified_block(const StrataAssignment& sa,
                                                     std::uint64_t seed) {
    const std::size_t n = sa.n_units();
    if (n == 0) throw design_error("randomize_stratified_block: empty assignment");

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(sa.n_strata));
    for (std::size_t i = 0; i < n; ++i)
        members[static_cast<std::size_t>(sa.labels[i] - 1)].push_back(i);
    for (int s = 0; s < sa.n_strata; ++s)
        if (members[static_cast<std::size_t>(s)].empty())
            throw design_error("randomize_stratified_block: stratum " + std::to_string(s + 1) +
                               " is empty");

    SplitMix64 rng(seed);
    std::vector<std::uint8_t> d(n, 0);
    for (auto& unit_ids : members) {
        const std::size_t ns = unit_ids.size();
        double target = sa.nu * static_cast<double>(ns);
        auto base = static_cast<std::size_t>(std::floor(target));
        double frac = target - static_cast<double>(base);
        std::size_t treated = base + (rng.next_uniform() < frac ? 1 : 0);
        // Fisher-Yates over the stratum's units, original-index order first.
        for (std::size_t i = ns - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
            std::swap(unit_ids[i], unit_ids[j]);
        }
        for (std::size_t i = 0; i < treated; ++i) d[unit_ids[i]] = 1;
    }
    return d;
}

ObservedSample observe(const PotentialTable& table, std::span<const std::uint8_t> d,
                       const PairAssignment* pa, const StrataAssignment* sa) {
    const std::size_t n = table.size();
    if (d.size() != n) throw design_error("observe: treatment vector length mismatch");
    if (pa && pa->n_units() != n) throw design_error("observe: pair assignment length mismatch");
    if (sa && sa->n_units() != n) throw design_error("observe: strata assignment length mismatch");

    ObservedSample s;
    s.x = table.x;
    s.y.resize(n);
    s.r.resize(n);
    s.d.assign(d.begin(), d.end());
    for (std::size_t i = 0; i < n; ++i) {
        std::uint8_t r = d[i] ? table.r1[i] : table.r0[i];
        s.r[i] = r;
        s.y[i] = r ? (d[i] ? table.y1[i] : table.y0[i]) : 0.0;
    }
    if (pa) s.pair_id = pa->pair_of();
    if (sa) s.stratum_id = sa->labels;
    return s;
}

}  // namespace pairlab
