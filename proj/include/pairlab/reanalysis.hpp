#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pairlab {

// One experiment record as read from a CSV file. A missing outcome cell
// means the unit attrited.
struct TrialRow {
    std::optional<double> outcome;
    std::uint8_t treated = 0;
    std::string group;
    std::vector<double> covariates;
};

struct TrialDataset {
    std::vector<TrialRow> rows;
    std::vector<std::string> covariate_names;

    std::size_t size() const { return rows.size(); }
};

// Header-name mapping from CSV columns to dataset fields.
struct CsvSchema {
    std::string outcome_col = "outcome";
    std::string treated_col = "treated";
    std::string group_col = "group";
    std::vector<std::string> covariate_cols;
};

TrialDataset load_csv(const std::string& path, const CsvSchema& schema);

// Fraction of rows with a missing outcome.
double attrition_rate(const TrialDataset& ds);

// Point estimates from the regression of outcome on treatment with
// group-id fixed effects (original) and without them (alternative),
// computed on the non-attrited rows, plus the comparison diagnostics.
struct DualEstimate {
    double original = 0.0;
    double alternative = 0.0;
    double abs_pct_diff = 0.0;
    double signed_pct_change = 0.0;
    double attrition_rate = 0.0;
};
DualEstimate dual_estimates(const TrialDataset& ds, bool use_covariates);

// abs_pct_diff    = |original - alternative| / |original| * 100
// signed_pct_change = (|alternative| - |original|) / |original| * 100
std::pair<double, double> pct_diffs(double original, double alternative);

std::string dual_estimate_csv(const DualEstimate& e);
std::string dual_estimate_text(const DualEstimate& e);

}  // namespace pairlab
