#pragma once

// Human-readable tables: dwell thresholds, admissibility verdicts, margins.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "certify.hpp"
#include "documents.hpp"
#include "dwell.hpp"
#include "synth.hpp"

namespace seqdwell {

/// Half-away-from-zero rounding at `digits` decimals.
inline double round_half_away(double x, int digits) {
    if (digits < 0) throw InputError("digits must be non-negative");
    const double scale = std::pow(10.0, digits);
    return std::round(x * scale) / scale;
}

inline std::string fixed(double x, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << x;
    return os.str();
}

struct ThresholdRow {
    Scheme scheme = Scheme::sbasdt;
    DwellKey key;
    double mu = 1.0;
    double lambda = 0.0;
    double tau = 0.0;  // full precision
};

inline std::vector<ThresholdRow> threshold_rows(const DwellPolicy& policy) {
    std::vector<ThresholdRow> rows;
    for (const auto& [key, tau] : threshold_table(policy))
        rows.push_back({policy.scheme, key, policy.mu_for(key), policy.lambda_for(key), tau});
    return rows;
}

namespace detail {

inline std::string render(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& body) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& row : body)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) os << "  ";
            os << std::setw(static_cast<int>(width[c])) << (c == 0 ? std::left : std::right) << cells[c];
        }
        os << "\n";
    };
    line(header);
    std::vector<std::string> rule;
    for (auto w : width) rule.emplace_back(w, '-');
    line(rule);
    for (const auto& row : body) line(row);
    return os.str();
}

}  // namespace detail

/// Columns: scheme, key, mu, lambda, tau* (full), tau* at `digits`, tau* at one digit.
inline std::string threshold_table_text(const std::vector<ThresholdRow>& rows, int digits = 2) {
    std::vector<std::vector<std::string>> body;
    for (const auto& r : rows)
        body.push_back({std::string(to_string(r.scheme)), r.key.to_string(), fixed(r.mu, 4), fixed(r.lambda, 4),
                        fixed(r.tau, 6), fixed(round_half_away(r.tau, digits), digits),
                        fixed(round_half_away(r.tau, 1), 1)});
    return detail::render({"scheme", "key", "mu", "lambda", "tau*", "tau*(" + std::to_string(digits) + ")", "tau*(1)"},
                          body);
}

inline Json threshold_rows_to_json(const std::vector<ThresholdRow>& rows, int digits = 2) {
    Json out = Json::array();
    for (const auto& r : rows)
        out.push_back({{"scheme", std::string(to_string(r.scheme))},
                       {"key", r.key.to_string()},
                       {"mu", r.mu},
                       {"lambda", r.lambda},
                       {"tau", r.tau},
                       {"tau_rounded", round_half_away(r.tau, digits)},
                       {"tau_1digit", round_half_away(r.tau, 1)}});
    return out;
}

inline std::string admissibility_table_text(const AdmissibilityReport& report) {
    std::vector<std::vector<std::string>> body;
    for (const auto& k : report.keys) {
        const bool bounded = std::isfinite(k.worst_slack);
        body.push_back({k.key.to_string(), fixed(k.tau, 6), std::to_string(k.chatter), std::to_string(k.events),
                        bounded ? fixed(k.worst_slack, 6) : "-",
                        bounded ? "[" + fixed(k.worst_t1, 4) + ", " + fixed(k.worst_t2, 4) + "]" : "-",
                        k.admissible ? "ok" : "VIOLATED"});
    }
    return detail::render({"key", "tau*", "N0", "events", "worst slack", "interval", "verdict"}, body) +
           (report.admissible ? "admissible\n" : "inadmissible\n");
}

inline std::string margin_table_text(const MarginReport& report) {
    std::vector<std::vector<std::string>> body;
    for (const auto& c : report.conditions) {
        std::ostringstream v, a;
        v << std::scientific << std::setprecision(3) << c.value;
        a << std::scientific << std::setprecision(3) << c.allowed;
        body.push_back({c.condition, std::to_string(c.mode), c.pair ? c.pair->to_string() : "-", v.str(), a.str(),
                        c.ok ? "ok" : "FAIL"});
    }
    return detail::render({"condition", "mode", "pair", "value", "allowed", "verdict"}, body);
}

inline std::string gain_table_text(const GainReport& report, TimeDomain domain) {
    std::vector<std::vector<std::string>> body;
    for (const auto& m : report.modes)
        body.push_back({std::to_string(m.mode), fixed(m.measure, 6), fixed(m.bound, 6), m.pass ? "ok" : "FAIL"});
    return detail::render({"mode", domain == TimeDomain::continuous ? "abscissa" : "radius", "bound", "verdict"}, body);
}

}  // namespace seqdwell
