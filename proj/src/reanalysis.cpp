#include "pairlab/reanalysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "pairlab/errors.hpp"
#include "pairlab/estimators.hpp"
#include "pairlab/math.hpp"

namespace pairlab {

namespace {

// Splits one CSV line; handles double-quoted fields with embedded commas.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    if (quoted)
        throw ingestion_error("line " + std::to_string(line_no) + ": unterminated quote");
    fields.push_back(cur);
    return fields;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& field, std::size_t line_no, const std::string& col) {
    const std::string t = trim(field);
    try {
        std::size_t used = 0;
        double v = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument("trailing characters");
        if (!std::isfinite(v)) throw std::invalid_argument("not finite");
        return v;
    } catch (const std::exception&) {
        throw ingestion_error("line " + std::to_string(line_no) + ": cannot parse '" + t +
                              "' in column '" + col + "' as a number");
    }
}

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

TrialDataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ingestion_error("cannot open '" + path + "'");

    // Skip comment lines (our own exporters put provenance headers there).
    std::string header_line;
    std::size_t header_no = 0;
    do {
        if (!std::getline(in, header_line)) throw ingestion_error("'" + path + "' is empty");
        ++header_no;
    } while (!header_line.empty() && header_line[0] == '#');
    auto header = split_csv_line(header_line, header_no);
    for (auto& h : header) h = trim(h);

    auto column_index = [&](const std::string& name) {
        std::size_t found = header.size();
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                if (found != header.size())
                    throw ingestion_error("duplicate header column '" + name + "'");
                found = i;
            }
        }
        if (found == header.size())
            throw ingestion_error("missing column '" + name + "' in '" + path + "'");
        return found;
    };

    std::size_t outcome_ix = column_index(schema.outcome_col);
    std::size_t treated_ix = column_index(schema.treated_col);
    std::size_t group_ix = column_index(schema.group_col);
    std::vector<std::size_t> cov_ix;
    for (const auto& name : schema.covariate_cols) cov_ix.push_back(column_index(name));

    TrialDataset ds;
    ds.covariate_names = schema.covariate_cols;
    std::string line;
    std::size_t line_no = header_no;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        if (line[0] == '#') continue;
        auto fields = split_csv_line(line, line_no);
        if (fields.size() != header.size())
            throw ingestion_error("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields, found " +
                                  std::to_string(fields.size()));
        TrialRow row;
        const std::string outcome = trim(fields[outcome_ix]);
        if (!outcome.empty())
            row.outcome = parse_double(outcome, line_no, schema.outcome_col);
        const std::string treated = trim(fields[treated_ix]);
        if (treated == "0") {
            row.treated = 0;
        } else if (treated == "1") {
            row.treated = 1;
        } else {
            throw ingestion_error("line " + std::to_string(line_no) + ": treated must be 0 or 1, got '" +
                                  treated + "'");
        }
        row.group = trim(fields[group_ix]);
        if (row.group.empty())
            throw ingestion_error("line " + std::to_string(line_no) + ": empty group id");
        for (std::size_t k = 0; k < cov_ix.size(); ++k)
            row.covariates.push_back(
                parse_double(fields[cov_ix[k]], line_no, schema.covariate_cols[k]));
        ds.rows.push_back(std::move(row));
    }
    if (ds.rows.size() < 2)
        throw ingestion_error("'" + path + "' has fewer than 2 data rows");
    return ds;
}

double attrition_rate(const TrialDataset& ds) {
    if (ds.rows.empty()) throw estimation_error("attrition_rate: empty dataset");
    std::size_t missing = 0;
    for (const auto& row : ds.rows) missing += row.outcome.has_value() ? 0 : 1;
    return static_cast<double>(missing) / static_cast<double>(ds.rows.size());
}

std::pair<double, double> pct_diffs(double original, double alternative) {
    if (original == 0.0)
        throw estimation_error("pct_diffs: undefined for a zero original estimate");
    double abs_diff = std::abs(original - alternative) / std::abs(original) * 100.0;
    double signed_change =
        (std::abs(alternative) - std::abs(original)) / std::abs(original) * 100.0;
    return {abs_diff, signed_change};
}

DualEstimate dual_estimates(const TrialDataset& ds, bool use_covariates) {
    // Complete-case rows only.
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.rows.size(); ++i)
        if (ds.rows[i].outcome) rows.push_back(i);
    if (rows.empty()) throw estimation_error("dual_estimates: all outcomes missing");

    std::size_t n_t = 0, n_c = 0;
    for (std::size_t i : rows) (ds.rows[i].treated ? n_t : n_c)++;
    if (n_t == 0 || n_c == 0)
        throw estimation_error("dual_estimates: arm exhausted by attrition");

    const std::size_t n = rows.size();
    const std::size_t n_cov = use_covariates ? ds.covariate_names.size() : 0;
    for (std::size_t i : rows)
        if (ds.rows[i].covariates.size() < n_cov)
            throw estimation_error("dual_estimates: row missing covariates");

    std::vector<double> y(n), d(n);
    std::vector<std::vector<double>> covs(n_cov, std::vector<double>(n));
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k < n; ++k) {
        const TrialRow& row = ds.rows[rows[k]];
        y[k] = *row.outcome;
        d[k] = static_cast<double>(row.treated);
        for (std::size_t c = 0; c < n_cov; ++c) covs[c][k] = row.covariates[c];
        groups[row.group].push_back(k);
    }

    // Original: partial the group indicators out of every regressor by
    // within-group demeaning, then run the short regression. This gives the
    // same treatment coefficient as the full fixed-effects regression.
    std::vector<double> y_w = y, d_w = d;
    std::vector<std::vector<double>> covs_w = covs;
    for (const auto& [name, members] : groups) {
        auto demean = [&](std::vector<double>& col) {
            KahanSum sum;
            for (std::size_t k : members) sum.add(col[k]);
            double mean = sum.value() / static_cast<double>(members.size());
            for (std::size_t k : members) col[k] -= mean;
        };
        demean(y_w);
        demean(d_w);
        for (auto& c : covs_w) demean(c);
    }
    std::vector<std::vector<double>> design_w;
    design_w.push_back(std::move(d_w));
    for (auto& c : covs_w) design_w.push_back(std::move(c));
    OlsResult fit_w = ols_solve(design_w, y_w);
    if (fit_w.dropped[0])
        throw estimation_error("dual_estimates: no within-group treatment contrast");

    // Alternative: intercept + treatment (+ covariates).
    std::vector<std::vector<double>> design_a;
    design_a.emplace_back(n, 1.0);
    design_a.push_back(d);
    for (auto& c : covs) design_a.push_back(c);
    OlsResult fit_a = ols_solve(design_a, y);
    if (fit_a.dropped[1])
        throw estimation_error("dual_estimates: treatment column is collinear");

    DualEstimate out;
    out.original = fit_w.coef[0];
    out.alternative = fit_a.coef[1];
    out.attrition_rate = attrition_rate(ds);
    if (out.original == 0.0) {
        out.abs_pct_diff = std::numeric_limits<double>::quiet_NaN();
        out.signed_pct_change = std::numeric_limits<double>::quiet_NaN();
    } else {
        auto [abs_diff, signed_change] = pct_diffs(out.original, out.alternative);
        out.abs_pct_diff = abs_diff;
        out.signed_pct_change = signed_change;
    }
    return out;
}

std::string dual_estimate_csv(const DualEstimate& e) {
    std::ostringstream out;
    out << "original,alternative,abs_pct_diff,signed_pct_change,attrition_rate\n";
    out << fmt_g(e.original) << "," << fmt_g(e.alternative) << "," << fmt_g(e.abs_pct_diff)
        << "," << fmt_g(e.signed_pct_change) << "," << fmt_g(e.attrition_rate) << "\n";
    return out.str();
}

std::string dual_estimate_text(const DualEstimate& e) {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof(line), "%-24s %14.6f\n", "original (with FE)", e.original);
    out << line;
    std::snprintf(line, sizeof(line), "%-24s %14.6f\n", "alternative (no FE)", e.alternative);
    out << line;
    std::snprintf(line, sizeof(line), "%-24s %14.4f\n", "abs pct diff (%)", e.abs_pct_diff);
    out << line;
    std::snprintf(line, sizeof(line), "%-24s %14.4f\n", "signed pct change (%)",
                  e.signed_pct_change);
    out << line;
    std::snprintf(line, sizeof(line), "%-24s %14.6f\n", "attrition rate", e.attrition_rate);
    out << line;
    return out.str();
}

}  // namespace pairlab
