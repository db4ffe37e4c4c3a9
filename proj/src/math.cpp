#include "pairlab/math.hpp"

#include <algorithm>
#include <cmath>

namespace pairlab {

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw numeric_error("normal_quantile: p must lie in (0,1)");
    const double q = p - 0.5;
    double r;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -val : val;
}

double std_normal_moment(int k) {
    if (k < 0) throw numeric_error("std_normal_moment: negative order");
    if (k % 2 == 1) return 0.0;
    double m = 1.0;
    for (int j = k - 1; j > 0; j -= 2) m *= static_cast<double>(j);
    return m;
}

SymmetricEigen symmetric_eigen(std::span<const double> matrix, std::size_t n) {
    if (matrix.size() != n * n) throw numeric_error("symmetric_eigen: size mismatch");
    std::vector<double> a(matrix.begin(), matrix.end());
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    auto off_diag = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a[i * n + j] * a[i * n + j];
        return s;
    };

    for (int sweep = 0; sweep < 100 && off_diag() > 1e-30; ++sweep) {
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                double app = a[p * n + p];
                double aqq = a[q * n + q];
                double phi = 0.5 * std::atan2(2.0 * apq, aqq - app);
                double c = std::cos(phi);
                double s = std::sin(phi);
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k * n + p];
                    double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p * n + k];
                    double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v[k * n + p];
                    double vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    SymmetricEigen out;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a[i * n + i];

    // Sort ascending, permuting eigenvector columns alongside.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return out.values[x] < out.values[y]; });
    SymmetricEigen sorted;
    sorted.values.resize(n);
    sorted.vectors.assign(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        sorted.values[k] = out.values[order[k]];
        for (std::size_t i = 0; i < n; ++i) sorted.vectors[i * n + k] = v[i * n + order[k]];
    }
    return sorted;
}

std::vector<double> symmetric_sqrt(std::span<const double> matrix, std::size_t n,
                                   double tolerance) {
    SymmetricEigen eig = symmetric_eigen(matrix, n);
    for (double lam : eig.values) {
        if (lam < -tolerance)
            throw spec_error("covariance matrix is not positive semi-definite (eigenvalue " +
                             std::to_string(lam) + ")");
    }
    std::vector<double> root(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double s = std::sqrt(std::max(eig.values[k], 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                root[i * n + j] += s * eig.vectors[i * n + k] * eig.vectors[j * n + k];
    }
    return root;
}

}  // namespace pairlab
