#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairlab/math.hpp"
#include "pairlab/rng.hpp"

namespace pairlab {

enum class Arm : int { control = 0, treatment = 1 };

// Marginal law of the scalar baseline covariate X.
struct CovariateLaw {
    enum class Kind { standard_normal, bernoulli, finite_grid };

    Kind kind = Kind::standard_normal;
    double p = 0.5;                // bernoulli success probability
    std::vector<double> points;    // finite grid support
    std::vector<double> probs;     // finite grid probabilities

    static CovariateLaw standard_normal();
    static CovariateLaw bernoulli(double p);
    static CovariateLaw finite_grid(std::vector<double> points, std::vector<double> probs);

    void validate() const;
    bool discrete() const { return kind != Kind::standard_normal; }

    double moment(int k) const;  // E[X^k]
    double sample(SplitMix64& rng) const;

    // Support points with probabilities for discrete laws; for the normal
    // law, an equal-weight grid of `resolution` quantile midpoints used by
    // validation checks.
    std::vector<std::pair<double, double>> support(int resolution = 512) const;
};

// Latent-data generating process: X ~ law, errors (eY1, eY0, eR1, eR0)
// jointly Gaussian with unit variances, Y(d) = mu_d(X) + eY(d) and
// R(d) = 1{eR(d) <= nu_d(X)}.
struct DgpSpec {
    CovariateLaw covariate;
    Polynomial mu1, mu0;  // conditional outcome means
    Polynomial nu1, nu0;  // attrition thresholds
    // Row-major 4x4 covariance of (eY1, eY0, eR1, eR0).
    std::array<double, 16> error_cov{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
    // When set, eR(0) is replaced by eR(1) and nu0 by nu1, so that
    // R(1) = R(0) row by row.
    bool common_attrition = false;

    void validate() const;

    const Polynomial& mean_fn(Arm d) const {
        return d == Arm::treatment ? mu1 : mu0;
    }
    const Polynomial& threshold(Arm d) const {
        if (common_attrition) return nu1;
        return d == Arm::treatment ? nu1 : nu0;
    }
    // cov(eY(d), eR(d)) as actually sampled (accounts for common_attrition
    // replacing eR(0) with eR(1)).
    double outcome_attrition_cov(Arm d) const {
        std::size_t y_row = (d == Arm::treatment) ? 0 : 1;
        std::size_t r_col = (common_attrition || d == Arm::treatment) ? 2 : 3;
        return error_cov[y_row * 4 + r_col];
    }

    nlohmann::json to_json() const;
    static DgpSpec from_json(const nlohmann::json& j);
    static DgpSpec preset(const std::string& name);  // "appendix-ex1", "appendix-ex2"
    static std::vector<std::string> preset_names();
};

// Latent unit tuples (X, Y(1), Y(0), R(1), R(0)), column layout.
struct PotentialTable {
    std::vector<double> x, y1, y0;
    std::vector<std::uint8_t> r1, r0;

    std::size_t size() const { return x.size(); }
    void reserve(std::size_t n);
    void append(double xv, double y1v, double y0v, std::uint8_t r1v, std::uint8_t r0v);
};

// Draws one latent row at a time; factorizes the error covariance once.
class LatentSampler {
public:
    explicit LatentSampler(const DgpSpec& spec);

    struct Row {
        double x, y1, y0;
        std::uint8_t r1, r0;
    };
    Row draw(SplitMix64& rng) const;
    // Redraw the four errors at a fixed covariate value (used by nested
    // Monte Carlo integration).
    Row draw_at(double x, SplitMix64& rng) const;

private:
    const DgpSpec& spec_;
    std::array<double, 16> chol_;  // symmetric square root of error_cov
};

// i.i.d. sample of n latent rows, deterministic in (spec, n, seed).
PotentialTable draw_sample(const DgpSpec& spec, std::size_t n, std::uint64_t seed);

// Conditional moments of the observed-outcome building blocks at X = x:
//   p_r = E[R(d) | X=x],  m1 = E[Y(d) R(d) | X=x],  m2 = E[Y(d)^2 R(d) | X=x].
// Closed forms for the Gaussian-threshold family.
struct ConditionalMoments {
    double p_r, m1, m2;
};
ConditionalMoments conditional_moments(const DgpSpec& spec, double x, Arm d);

}  // namespace pairlab
