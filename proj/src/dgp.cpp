#include "pairlab/dgp.hpp"

#include <algorithm>
#include <cmath>

namespace pairlab {

// ---------------------------------------------------------------------------
// CovariateLaw
// ---------------------------------------------------------------------------

CovariateLaw CovariateLaw::standard_normal() {
    CovariateLaw law;
    law.kind = Kind::standard_normal;
    return law;
}

CovariateLaw CovariateLaw::bernoulli(double p) {
    CovariateLaw law;
    law.kind = Kind::bernoulli;
    law.p = p;
    return law;
}

CovariateLaw CovariateLaw::finite_grid(std::vector<double> points, std::vector<double> probs) {
    CovariateLaw law;
    law.kind = Kind::finite_grid;
    law.points = std::move(points);
    law.probs = std::move(probs);
    return law;
}

void CovariateLaw::validate() const {
    switch (kind) {
        case Kind::standard_normal:
            return;
        case Kind::bernoulli:
            if (!(p > 0.0 && p < 1.0))
                throw spec_error("bernoulli covariate: p must lie strictly in (0,1)");
            return;
        case Kind::finite_grid: {
            if (points.empty() || points.size() != probs.size())
                throw spec_error("finite grid covariate: points/probs size mismatch");
            double total = 0.0;
            for (double q : probs) {
                if (!(q > 0.0 && q < 1.0) && !(probs.size() == 1 && q == 1.0))
                    throw spec_error("finite grid covariate: probabilities must lie in (0,1)");
                total += q;
            }
            if (std::abs(total - 1.0) > 1e-9)
                throw spec_error("finite grid covariate: probabilities must sum to 1");
            for (double pt : points)
                if (!std::isfinite(pt)) throw spec_error("finite grid covariate: non-finite point");
            return;
        }
    }
    throw spec_error("unknown covariate law");
}

double CovariateLaw::moment(int k) const {
    if (k < 0) throw capability_error("covariate moment of negative order");
    if (k == 0) return 1.0;
    switch (kind) {
        case Kind::standard_normal:
            return std_normal_moment(k);
        case Kind::bernoulli:
            return p;  // 0^k = 0, 1^k = 1
        case Kind::finite_grid: {
            double m = 0.0;
            for (std::size_t i = 0; i < points.size(); ++i)
                m += probs[i] * std::pow(points[i], k);
            return m;
        }
    }
    throw capability_error("unknown covariate law");
}

double CovariateLaw::sample(SplitMix64& rng) const {
    switch (kind) {
        case Kind::standard_normal:
            return rng.next_normal();
        case Kind::bernoulli:
            return rng.next_uniform() < p ? 1.0 : 0.0;
        case Kind::finite_grid: {
            double u = rng.next_uniform();
            double acc = 0.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                acc += probs[i];
                if (u < acc) return points[i];
            }
            return points.back();
        }
    }
    throw capability_error("unknown covariate law");
}

std::vector<std::pair<double, double>> CovariateLaw::support(int resolution) const {
    std::vector<std::pair<double, double>> out;
    switch (kind) {
        case Kind::standard_normal: {
            out.reserve(resolution);
            double w = 1.0 / resolution;
            for (int i = 0; i < resolution; ++i)
                out.emplace_back(normal_quantile((i + 0.5) * w), w);
            return out;
        }
        case Kind::bernoulli:
            out.emplace_back(0.0, 1.0 - p);
            out.emplace_back(1.0, p);
            return out;
        case Kind::finite_grid:
            for (std::size_t i = 0; i < points.size(); ++i)
                out.emplace_back(points[i], probs[i]);
            return out;
    }
    throw capability_error("unknown covariate law");
}

// ---------------------------------------------------------------------------
// DgpSpec
// ---------------------------------------------------------------------------

void DgpSpec::validate() const {
    covariate.validate();
    for (std::size_t i = 0; i < 4; ++i) {
        if (std::abs(error_cov[i * 4 + i] - 1.0) > 1e-12)
            throw spec_error("error covariance must have unit diagonal");
        for (std::size_t j = 0; j < 4; ++j) {
            if (!std::isfinite(error_cov[i * 4 + j]))
                throw spec_error("error covariance has non-finite entries");
            if (std::abs(error_cov[i * 4 + j] - error_cov[j * 4 + i]) > 1e-12)
                throw spec_error("error covariance must be symmetric");
        }
    }
    // PSD check (throws on eigenvalue < -1e-10). With common_attrition the
    // control threshold is forced to nu1 by threshold(); nu0 is ignored.
    symmetric_sqrt(error_cov, 4);

    // Attrition must not be certain for either arm: E[R(d)] > 0 over the
    // covariate law. Individual support points may still attrit surely.
    for (Arm d : {Arm::treatment, Arm::control}) {
        double mass = 0.0;
        for (auto [x, w] : covariate.support()) {
            double nu = threshold(d)(x);
            if (!std::isfinite(nu) && nu > 0) nu = 1e300;
            mass += w * normal_cdf(nu);
        }
        if (!(mass > 0.0))
            throw spec_error("attrition probability is one for arm " +
                             std::to_string(static_cast<int>(d)));
    }
}

nlohmann::json DgpSpec::to_json() const {
    nlohmann::json j;
    switch (covariate.kind) {
        case CovariateLaw::Kind::standard_normal:
            j["covariate"] = {{"law", "standard_normal"}};
            break;
        case CovariateLaw::Kind::bernoulli:
            j["covariate"] = {{"law", "bernoulli"}, {"p", covariate.p}};
            break;
        case CovariateLaw::Kind::finite_grid:
            j["covariate"] = {{"law", "finite_grid"},
                              {"points", covariate.points},
                              {"probs", covariate.probs}};
            break;
    }
    j["mu1"] = mu1.coeffs;
    j["mu0"] = mu0.coeffs;
    j["nu1"] = nu1.coeffs;
    j["nu0"] = nu0.coeffs;
    std::vector<std::vector<double>> rows(4, std::vector<double>(4));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t k = 0; k < 4; ++k) rows[i][k] = error_cov[i * 4 + k];
    j["error_cov"] = rows;
    j["common_attrition"] = common_attrition;
    return j;
}

DgpSpec DgpSpec::from_json(const nlohmann::json& j) {
    try {
        if (j.contains("preset")) return preset(j.at("preset").get<std::string>());
        DgpSpec spec;
        if (j.contains("covariate")) {
            const auto& c = j.at("covariate");
            std::string law = c.value("law", "standard_normal");
            if (law == "standard_normal") {
                spec.covariate = CovariateLaw::standard_normal();
            } else if (law == "bernoulli") {
                spec.covariate = CovariateLaw::bernoulli(c.at("p").get<double>());
            } else if (law == "finite_grid") {
                spec.covariate = CovariateLaw::finite_grid(
                    c.at("points").get<std::vector<double>>(),
                    c.at("probs").get<std::vector<double>>());
            } else {
                throw spec_error("unknown covariate law '" + law + "'");
            }
        }
        spec.mu1 = Polynomial(j.value("mu1", std::vector<double>{}));
        spec.mu0 = Polynomial(j.value("mu0", std::vector<double>{}));
        spec.nu1 = Polynomial(j.value("nu1", std::vector<double>{}));
        spec.nu0 = Polynomial(j.value("nu0", std::vector<double>{}));
        if (j.contains("error_cov")) {
            auto rows = j.at("error_cov").get<std::vector<std::vector<double>>>();
            if (rows.size() != 4) throw spec_error("error_cov must be 4x4");
            for (std::size_t i = 0; i < 4; ++i) {
                if (rows[i].size() != 4) throw spec_error("error_cov must be 4x4");
                for (std::size_t k = 0; k < 4; ++k) spec.error_cov[i * 4 + k] = rows[i][k];
            }
        }
        spec.common_attrition = j.value("common_attrition", false);
        if (spec.common_attrition) spec.nu0 = spec.nu1;
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw spec_error(std::string("malformed dgp config: ") + e.what());
    }
}

DgpSpec DgpSpec::preset(const std::string& name) {
    DgpSpec spec;
    spec.covariate = CovariateLaw::standard_normal();
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t k = 0; k < 4; ++k) spec.error_cov[i * 4 + k] = (i == k) ? 1.0 : -0.3;
    if (name == "appendix-ex1") {
        spec.mu1 = Polynomial{0.0, 2.0};
        spec.mu0 = Polynomial{0.0, 0.0, 0.0, 1.0};
        spec.nu1 = Polynomial{0.0, 1.0};
        spec.nu0 = Polynomial{0.0, 0.0, 1.0};
    } else if (name == "appendix-ex2") {
        spec.mu1 = Polynomial{0.0, 2.0};
        spec.mu0 = Polynomial{0.0, 1.0};
        spec.nu1 = Polynomial{0.0, 1.0};
        spec.nu0 = Polynomial{0.0, 1.0};
    } else {
        throw spec_error("unknown preset '" + name + "'");
    }
    spec.validate();
    return spec;
}

std::vector<std::string> DgpSpec::preset_names() {
    return {"appendix-ex1", "appendix-ex2"};
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

void PotentialTable::reserve(std::size_t n) {
    x.reserve(n);
    y1.reserve(n);
    y0.reserve(n);
    r1.reserve(n);
    r0.reserve(n);
}

void PotentialTable::append(double xv, double y1v, double y0v, std::uint8_t r1v,
                            std::uint8_t r0v) {
    x.push_back(xv);
    y1.push_back(y1v);
    y0.push_back(y0v);
    r1.push_back(r1v);
    r0.push_back(r0v);
}

LatentSampler::LatentSampler(const DgpSpec& spec) : spec_(spec) {
    auto root = symmetric_sqrt(spec.error_cov, 4);
    std::copy(root.begin(), root.end(), chol_.begin());
}

LatentSampler::Row LatentSampler::draw(SplitMix64& rng) const {
    double x = spec_.covariate.sample(rng);
    return draw_at(x, rng);
}

LatentSampler::Row LatentSampler::draw_at(double x, SplitMix64& rng) const {
    double z[4];
    for (double& zi : z) zi = rng.next_normal();
    double eps[4];
    for (std::size_t i = 0; i < 4; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 4; ++k) acc += chol_[i * 4 + k] * z[k];
        eps[i] = acc;
    }
    if (spec_.common_attrition) eps[3] = eps[2];

    Row row;
    row.x = x;
    row.y1 = spec_.mu1(x) + eps[0];
    row.y0 = spec_.mu0(x) + eps[1];
    row.r1 = eps[2] <= spec_.threshold(Arm::treatment)(x) ? 1 : 0;
    row.r0 = eps[3] <= spec_.threshold(Arm::control)(x) ? 1 : 0;
    if (!std::isfinite(row.y1) || !std::isfinite(row.y0) || !std::isfinite(row.x))
        throw numeric_error("non-finite latent draw (polynomial overflow?)");
    return row;
}

PotentialTable draw_sample(const DgpSpec& spec, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw spec_error("draw_sample: n must be at least 1");
    spec.validate();
    LatentSampler sampler(spec);
    SplitMix64 rng(seed);
    PotentialTable table;
    table.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = sampler.draw(rng);
        table.append(row.x, row.y1, row.y0, row.r1, row.r0);
    }
    return table;
}

ConditionalMoments conditional_moments(const DgpSpec& spec, double x, Arm d) {
    if (!std::isfinite(x)) throw numeric_error("conditional_moments: non-finite x");
    double mu = spec.mean_fn(d)(x);
    double nu = spec.threshold(d)(x);
    double sigma = spec.outcome_attrition_cov(d);
    if (!std::isfinite(mu) || !std::isfinite(nu))
        throw numeric_error("conditional_moments: polynomial overflow");

    // With (eY, eR) bivariate normal, unit variances, cov sigma:
    //   E[1{eR<=nu}]        = Phi(nu)
    //   E[eY   1{eR<=nu}]   = -sigma phi(nu)
    //   E[eY^2 1{eR<=nu}]   = Phi(nu) - sigma^2 nu phi(nu)
    double Phi = normal_cdf(nu);
    double phi = normal_pdf(nu);
    ConditionalMoments m;
    m.p_r = Phi;
    m.m1 = mu * Phi - sigma * phi;
    m.m2 = (mu * mu + 1.0) * Phi - 2.0 * mu * sigma * phi - sigma * sigma * nu * phi;
    return m;
}

}  // namespace pairlab
