#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "pairlab/errors.hpp"

namespace pairlab {

inline constexpr double kPi = 3.14159265358979323846;

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

// Accurate in both tails via erfc.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Inverse standard normal CDF, Wichura's PPND16 (algorithm AS 241).
// Relative error below 1e-15 over (0, 1).
double normal_quantile(double p);

// E[Z^k] for Z ~ N(0,1): 0 for odd k, (k-1)!! for even k.
double std_normal_moment(int k);

// Dense polynomial in one variable, coefficients in ascending powers.
struct Polynomial {
    std::vector<double> coeffs;

    Polynomial() = default;
    Polynomial(std::initializer_list<double> c) : coeffs(c) {}
    explicit Polynomial(std::vector<double> c) : coeffs(std::move(c)) {}

    double operator()(double x) const {
        double acc = 0.0;
        for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
        return acc;
    }

    bool operator==(const Polynomial&) const = default;
};

// Compensated (Kahan) accumulator. Sum order still matters for bit-exact
// reproducibility; the compensation keeps identities like the no-attrition
// collapse tight at the 1e-12 level.
class KahanSum {
public:
    void add(double v) {
        double y = v - carry_;
        double t = sum_ + y;
        carry_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

// Eigen-decomposition of a dense symmetric matrix by cyclic Jacobi sweeps.
// Returns eigenvalues (ascending) and the orthogonal matrix of column
// eigenvectors, row-major. Intended for small matrices (the 4x4 error
// covariances here).
struct SymmetricEigen {
    std::vector<double> values;
    std::vector<double> vectors;  // row-major n x n, column k = eigenvector k
};
SymmetricEigen symmetric_eigen(std::span<const double> matrix, std::size_t n);

// Symmetric PSD square root with eigenvalue clipping at zero. Eigenvalues
// below -tolerance raise spec_error.
std::vector<double> symmetric_sqrt(std::span<const double> matrix, std::size_t n,
                                   double tolerance = 1e-10);

}  // namespace pairlab
