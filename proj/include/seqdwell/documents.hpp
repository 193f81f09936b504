#pragma once

// JSON and CSV documents: system descriptions, switching signals, dwell
// policies, certificates, gains, reports and trajectories.

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "certify.hpp"
#include "dwell.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "sim.hpp"
#include "synth.hpp"

namespace seqdwell {

using Json = nlohmann::ordered_json;

namespace detail {

inline double number_at(const Json& j, const std::string& path) {
    if (!j.is_number()) throw InputError(path + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw InputError(path + ": expected a finite number");
    return v;
}

inline int integer_at(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) throw InputError(path + ": expected an integer");
    return j.get<int>();
}

inline const Json& field(const Json& obj, const char* name, const std::string& path) {
    if (!obj.is_object()) throw InputError(path + ": expected an object");
    const auto it = obj.find(name);
    if (it == obj.end()) throw InputError(path + (path.empty() ? "" : ".") + name + ": missing required field");
    return *it;
}

inline int mode_key(const std::string& key, const std::string& path) {
    try {
        std::size_t used = 0;
        const int id = std::stoi(key, &used);
        if (used == key.size() && id >= 1) return id;
    } catch (const std::exception&) {
    }
    throw InputError(path + ": key \"" + key + "\" is not a mode id");
}

}  // namespace detail

inline Matrix parse_matrix(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw InputError(path + ": expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    Eigen::Index cols = -1;
    Matrix m;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        const std::string rpath = path + "[" + std::to_string(r) + "]";
        if (!row.is_array() || row.empty()) throw InputError(rpath + ": expected a non-empty row array");
        if (cols < 0) {
            cols = static_cast<Eigen::Index>(row.size());
            m.resize(rows, cols);
        } else if (static_cast<Eigen::Index>(row.size()) != cols) {
            throw InputError(rpath + ": row has " + std::to_string(row.size()) + " entries, expected " +
                             std::to_string(cols));
        }
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = detail::number_at(row[static_cast<std::size_t>(c)], rpath + "[" + std::to_string(c) + "]");
    }
    return m;
}

inline Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Input matrices are column-oriented (n x m). A single row of length n is
/// accepted for single-input systems and read as the column B.
inline SwitchedSystem parse_system(const Json& doc) {
    const auto domain = parse_time_domain(detail::field(doc, "time_domain", "").get<std::string>());
    const int n = detail::integer_at(detail::field(doc, "state_dim", ""), "state_dim");
    const int m = doc.contains("input_dim") ? detail::integer_at(doc["input_dim"], "input_dim") : 0;
    if (n <= 0) throw InputError("state_dim: must be positive");
    if (m < 0) throw InputError("input_dim: must be non-negative");
    const auto& jmodes = detail::field(doc, "modes", "");
    if (!jmodes.is_array()) throw InputError("modes: expected an array");
    if (jmodes.size() < 2) throw InputError("modes: a switched system needs at least two modes");

    std::vector<Mode> modes;
    for (std::size_t i = 0; i < jmodes.size(); ++i) {
        const std::string path = "modes[" + std::to_string(i) + "]";
        const auto& jm = jmodes[i];
        const int id = detail::integer_at(detail::field(jm, "id", path), path + ".id");
        Matrix a = parse_matrix(detail::field(jm, "A", path), path + ".A");
        Matrix b;
        if (jm.contains("B")) {
            b = parse_matrix(jm["B"], path + ".B");
            if (m == 1 && n > 1 && b.rows() == 1 && b.cols() == n) b.transposeInPlace();
        }
        modes.push_back({id, LinearDynamics{std::move(a), std::move(b)}});
    }
    return {domain, n, m, std::move(modes)};
}

inline SwitchedSystem parse_system_text(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw InputError(std::string("system document: invalid JSON: ") + e.what());
    }
    return parse_system(doc);
}

inline Json system_to_json(const SwitchedSystem& system) {
    Json doc;
    doc["time_domain"] = std::string(to_string(system.time_domain()));
    doc["state_dim"] = system.state_dim();
    doc["input_dim"] = system.input_dim();
    Json modes = Json::array();
    for (const auto& mode : system.modes()) {
        const auto& lin = mode.linear();
        Json jm;
        jm["id"] = mode.id;
        jm["A"] = matrix_to_json(lin.a);
        if (system.input_dim() > 0) jm["B"] = matrix_to_json(lin.b);
        modes.push_back(std::move(jm));
    }
    doc["modes"] = std::move(modes);
    return doc;
}

inline SwitchingSignal parse_signal(const Json& doc) {
    const int initial = detail::integer_at(detail::field(doc, "initial_mode", ""), "initial_mode");
    const auto& jsegs = detail::field(doc, "segments", "");
    if (!jsegs.is_array()) throw InputError("segments: expected an array of [mode, dwell]");
    std::vector<Segment> segs;
    for (std::size_t i = 0; i < jsegs.size(); ++i) {
        const std::string path = "segments[" + std::to_string(i) + "]";
        const auto& js = jsegs[i];
        if (!js.is_array() || js.size() != 2) throw InputError(path + ": expected [mode, dwell]");
        segs.push_back({detail::integer_at(js[0], path + "[0]"), detail::number_at(js[1], path + "[1]")});
    }
    return {initial, std::move(segs)};
}

inline Json signal_to_json(const SwitchingSignal& signal) {
    Json doc;
    doc["initial_mode"] = signal.initial_mode();
    Json segs = Json::array();
    for (const auto& s : signal.segments()) segs.push_back(Json::array({s.mode, s.dwell}));
    doc["segments"] = std::move(segs);
    return doc;
}

inline DwellKey parse_dwell_key(Scheme scheme, const std::string& key, const std::string& path) {
    if (key.find('|') == std::string::npos) {
        if (is_sequence_based(scheme)) throw InputError(path + ": scheme " + std::string(to_string(scheme)) +
                                                        " needs pair keys, got \"" + key + "\"");
        return {detail::mode_key(key, path), std::nullopt};
    }
    std::string body = key;
    std::optional<int> mode;
    if (!body.empty() && body.front() == '(' && body.back() == ')') {
        body = body.substr(1, body.size() - 2);
        const auto comma = body.find(',');
        if (comma == std::string::npos) throw InputError(path + ": malformed key \"" + key + "\"");
        mode = detail::mode_key(body.substr(0, comma), path);
        body = body.substr(comma + 1);
    }
    const auto pair = OrderedPair::parse(body);
    if (!is_sequence_based(scheme)) throw InputError(path + ": scheme " + std::string(to_string(scheme)) +
                                                     " uses mode keys, got \"" + key + "\"");
    const DwellKey expected = key_for(scheme, pair);
    if (mode && *mode != expected.mode)
        throw InputError(path + ": key \"" + key + "\" does not belong to scheme " + std::string(to_string(scheme)) +
                         " (expected " + expected.to_string() + ")");
    return expected;
}

/// `lambda` as {mode: rate}, or one number shared by `num_modes` modes.
inline std::map<int, double> parse_lambda(const Json& doc, int num_modes) {
    const auto& jl = detail::field(doc, "lambda", "");
    std::map<int, double> lambda;
    if (jl.is_number()) {
        if (num_modes <= 0) throw InputError("lambda: a scalar rate needs a known number of modes");
        for (int p = 1; p <= num_modes; ++p) lambda[p] = detail::number_at(jl, "lambda");
    } else if (jl.is_object()) {
        for (const auto& [k, v] : jl.items()) lambda[detail::mode_key(k, "lambda")] = detail::number_at(v, "lambda." + k);
    } else {
        throw InputError("lambda: expected an object {mode: rate} or a number");
    }
    if (num_modes > 0 && static_cast<int>(lambda.size()) != num_modes)
        throw InputError("lambda: expected " + std::to_string(num_modes) + " entries, got " +
                         std::to_string(lambda.size()));
    return lambda;
}

/// Reads `scheme`, `lambda`, `mu` and optional `chatter` from a policy
/// document (or a system document carrying those fields). `lambda` and `mu`
/// may also be single numbers shared by every mode / pair. Mode-keyed mu
/// under a sequence-based scheme is broadcast over predecessors; pair-keyed
/// mu under ADT/MDADT collapses to mu_p = max_q mu_{p|q}.
inline DwellPolicy parse_policy(const Json& doc, TimeDomain domain, int num_modes,
                                std::optional<Scheme> scheme_override = std::nullopt) {
    DwellPolicy pol;
    pol.domain = domain;
    if (scheme_override)
        pol.scheme = *scheme_override;
    else if (doc.contains("scheme"))
        pol.scheme = parse_scheme(doc["scheme"].get<std::string>());
    else
        throw InputError("scheme: missing (give it in the policy document or on the command line)");

    pol.lambda = parse_lambda(doc, num_modes);
    const int s = num_modes > 0 ? num_modes : pol.num_modes();

    const auto& jm = detail::field(doc, "mu", "");
    std::map<OrderedPair, double> pair_mu;
    std::map<int, double> mode_mu;
    if (jm.is_number()) {
        for (int p = 1; p <= s; ++p) mode_mu[p] = detail::number_at(jm, "mu");
    } else if (jm.is_object()) {
        for (const auto& [k, v] : jm.items()) {
            const double value = detail::number_at(v, "mu." + k);
            if (k.find('|') != std::string::npos)
                pair_mu[OrderedPair::parse(k)] = value;
            else
                mode_mu[detail::mode_key(k, "mu")] = value;
        }
    } else {
        throw InputError("mu: expected an object or a number");
    }
    if (!pair_mu.empty() && !mode_mu.empty()) throw InputError("mu: mix of pair keys and mode keys");
    if (is_sequence_based(pol.scheme)) {
        pol.pair_mu = pair_mu;
        for (const auto& [p, value] : mode_mu)
            for (int q = 1; q <= s; ++q)
                if (q != p) pol.pair_mu[{p, q}] = value;
    } else {
        pol.mode_mu = mode_mu;
        for (const auto& [pq, value] : pair_mu) {
            auto [it, inserted] = pol.mode_mu.emplace(pq.p, value);
            if (!inserted) it->second = std::max(it->second, value);
        }
    }

    if (doc.contains("chatter")) {
        const auto& jc = doc["chatter"];
        if (!jc.is_object()) throw InputError("chatter: expected an object {key: N0}");
        for (const auto& [k, v] : jc.items()) {
            const std::string path = "chatter." + k;
            pol.chatter[parse_dwell_key(pol.scheme, k, path)] = detail::integer_at(v, path);
        }
    }
    pol.validate();
    return pol;
}

inline Json policy_to_json(const DwellPolicy& pol) {
    Json doc;
    doc["scheme"] = std::string(to_string(pol.scheme));
    doc["time_domain"] = std::string(to_string(pol.domain));
    Json lambda = Json::object();
    for (const auto& [p, l] : pol.lambda) lambda[std::to_string(p)] = l;
    doc["lambda"] = std::move(lambda);
    Json mu = Json::object();
    if (is_sequence_based(pol.scheme))
        for (const auto& [pq, v] : pol.pair_mu) mu[pq.to_string()] = v;
    else
        for (const auto& [p, v] : pol.mode_mu) mu[std::to_string(p)] = v;
    doc["mu"] = std::move(mu);
    if (!pol.chatter.empty()) {
        Json chatter = Json::object();
        for (const auto& [key, n0] : pol.chatter) chatter[key.to_string()] = n0;
        doc["chatter"] = std::move(chatter);
    }
    return doc;
}

inline Json thresholds_to_json(const std::map<DwellKey, double>& table) {
    Json out = Json::object();
    for (const auto& [key, tau] : table) out[key.to_string()] = tau;
    return out;
}

inline Json certificate_to_json(const StabilityCertificate& cert) {
    Json doc;
    doc["scheme"] = std::string(to_string(cert.scheme));
    doc["time_domain"] = std::string(to_string(cert.domain));
    Json lambda = Json::object();
    Json p = Json::object();
    Json bounds = Json::object();
    Json decay = Json::object();
    for (const auto& [mode, l] : cert.lambda) lambda[std::to_string(mode)] = l;
    for (const auto& [mode, pm] : cert.p) p[std::to_string(mode)] = matrix_to_json(pm.matrix());
    for (const auto& [mode, b] : cert.bounds) bounds[std::to_string(mode)] = {{"k1", b.k1}, {"k2", b.k2}};
    for (const auto& [mode, d] : cert.decay_margin) decay[std::to_string(mode)] = d;
    Json mu = Json::object();
    Json jump = Json::object();
    for (const auto& [pq, v] : cert.mu) mu[pq.to_string()] = v;
    for (const auto& [pq, v] : cert.jump_margin) jump[pq.to_string()] = v;
    doc["lambda"] = std::move(lambda);
    doc["P"] = std::move(p);
    doc["mu"] = std::move(mu);
    doc["thresholds"] = thresholds_to_json(cert.thresholds);
    doc["margins"] = {{"decay", std::move(decay)}, {"jump", std::move(jump)}};
    doc["class_k_bounds"] = std::move(bounds);
    doc["solver"] = {{"lyapunov_rhs", "identity"},
                     {"q_scale", cert.q_scale},
                     {"tolerance", cert.tolerance},
                     {"method", "shifted Lyapunov equation, Kronecker vectorization"}};
    return doc;
}

inline StabilityCertificate parse_certificate(const Json& doc) {
    StabilityCertificate cert;
    cert.scheme = parse_scheme(detail::field(doc, "scheme", "").get<std::string>());
    cert.domain = parse_time_domain(detail::field(doc, "time_domain", "").get<std::string>());
    for (const auto& [k, v] : detail::field(doc, "lambda", "").items())
        cert.lambda[detail::mode_key(k, "lambda")] = detail::number_at(v, "lambda." + k);
    for (const auto& [k, v] : detail::field(doc, "P", "").items()) {
        const int mode = detail::mode_key(k, "P");
        const Matrix m = parse_matrix(v, "P." + k);
        if (m.rows() != m.cols()) throw InputError("P." + k + ": expected a square matrix");
        cert.p[mode] = SymmetricMatrix(m);
        const auto ev = sym_eig(cert.p[mode]).eigenvalues;
        cert.bounds[mode] = {ev.minCoeff(), ev.maxCoeff()};
    }
    for (const auto& [k, v] : detail::field(doc, "mu", "").items())
        cert.mu[OrderedPair::parse(k)] = detail::number_at(v, "mu." + k);
    if (doc.contains("thresholds"))
        for (const auto& [k, v] : doc["thresholds"].items())
            cert.thresholds[parse_dwell_key(cert.scheme, k, "thresholds." + k)] = detail::number_at(v, "thresholds." + k);
    if (doc.contains("solver")) {
        const auto& s = doc["solver"];
        if (s.contains("q_scale")) cert.q_scale = detail::number_at(s["q_scale"], "solver.q_scale");
        if (s.contains("tolerance")) cert.tolerance = detail::number_at(s["tolerance"], "solver.tolerance");
    }
    if (doc.contains("margins")) {
        const auto& m = doc["margins"];
        if (m.contains("decay"))
            for (const auto& [k, v] : m["decay"].items()) cert.decay_margin[detail::mode_key(k, "margins.decay")] = v.get<double>();
        if (m.contains("jump"))
            for (const auto& [k, v] : m["jump"].items()) cert.jump_margin[OrderedPair::parse(k)] = v.get<double>();
    }
    return cert;
}

inline GainMap parse_gains(const Json& doc) {
    if (!doc.is_object()) throw InputError("gains: expected an object {mode: [[row]]}");
    GainMap gains;
    for (const auto& [k, v] : doc.items()) gains[detail::mode_key(k, "gains")] = parse_matrix(v, "gains." + k);
    return gains;
}

inline Json gains_to_json(const GainMap& gains) {
    Json doc = Json::object();
    for (const auto& [mode, k] : gains) doc[std::to_string(mode)] = matrix_to_json(k);
    return doc;
}

inline Json margin_report_to_json(const MarginReport& report) {
    Json conds = Json::array();
    for (const auto& c : report.conditions) {
        Json jc{{"condition", c.condition}, {"mode", c.mode}, {"value", c.value}, {"allowed", c.allowed}, {"ok", c.ok}};
        if (c.pair) jc["pair"] = c.pair->to_string();
        conds.push_back(std::move(jc));
    }
    return {{"passed", report.passed}, {"conditions", std::move(conds)}};
}

inline Json admissibility_to_json(const AdmissibilityReport& report) {
    Json keys = Json::array();
    for (const auto& k : report.keys) {
        Json jk{{"key", k.key.to_string()}, {"tau", k.tau}, {"chatter", k.chatter}, {"events", k.events},
                {"admissible", k.admissible}};
        if (std::isfinite(k.worst_slack)) {
            jk["worst_slack"] = k.worst_slack;
            jk["worst_interval"] = Json::array({k.worst_t1, k.worst_t2});
        } else {
            jk["worst_slack"] = nullptr;
        }
        keys.push_back(std::move(jk));
    }
    return {{"scheme", std::string(to_string(report.scheme))}, {"admissible", report.admissible}, {"keys", std::move(keys)}};
}

inline Json gain_report_to_json(const GainReport& report) {
    Json modes = Json::array();
    for (const auto& m : report.modes)
        modes.push_back({{"mode", m.mode}, {"measure", m.measure}, {"bound", m.bound}, {"pass", m.pass}});
    return {{"passed", report.passed}, {"modes", std::move(modes)}};
}

/// CSV with header t,mode,x1..xn,V1..Vs (V columns only when the trajectory carries them).
inline std::string trajectory_to_csv(const Trajectory& traj) {
    std::ostringstream os;
    os << std::setprecision(17);
    const std::size_t n = traj.samples.empty() ? 0 : static_cast<std::size_t>(traj.samples.front().x.size());
    const std::size_t s = traj.samples.empty() ? 0 : traj.samples.front().v.size();
    os << "t,mode";
    for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
    for (std::size_t i = 1; i <= s; ++i) os << ",V" << i;
    os << "\n";
    for (const auto& smp : traj.samples) {
        os << smp.t << "," << smp.mode;
        for (Eigen::Index i = 0; i < smp.x.size(); ++i) os << "," << smp.x(i);
        for (double v : smp.v) os << "," << v;
        os << "\n";
    }
    return os.str();
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InputError(path + ": invalid JSON: " + e.what());
    }
}

}  // namespace seqdwell
