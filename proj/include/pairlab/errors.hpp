#pragma once

#include <stdexcept>
#include <string>

namespace pairlab {

// Base class for everything this library throws on purpose.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid DGP or experiment configuration (bad covariance matrix, bad
// probabilities, malformed config file values).
class spec_error : public error {
public:
    using error::error;
};

// A request the implementation cannot serve (unsupported covariate law,
// estimand undefined for the given process).
class capability_error : public error {
public:
    using error::error;
};

// Invalid design-side input: odd sample size for pairing, empty stratum,
// more strata than units.
class design_error : public error {
public:
    using error::error;
};

// An estimator could not be computed from the data at hand (arm exhausted
// by attrition, all pairs broken, no within-stratum contrast).
class estimation_error : public error {
public:
    using error::error;
};

// Non-finite intermediate values (overflow in polynomial evaluation, etc.).
class numeric_error : public error {
public:
    using error::error;
};

// CSV / data-file ingestion problems; messages carry row or column context.
class ingestion_error : public error {
public:
    using error::error;
};

}  // namespace pairlab
