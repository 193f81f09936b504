#pragma once

// Command dispatch for the seqdwell executable. Flag parsing lives in
// tools/seqdwell.cpp; everything here works on a filled RunConfig so it can be
// driven from tests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "certify.hpp"
#include "documents.hpp"
#include "dwell.hpp"
#include "errors.hpp"
#include "example.hpp"
#include "model.hpp"
#include "report.hpp"
#include "sim.hpp"
#include "synth.hpp"

namespace seqdwell::cli {

enum ExitCode : int { pass = 0, fail = 1, input_error = 2 };

struct RunConfig {
    std::string command;
    std::optional<std::string> system;
    std::optional<std::string> policy;
    std::optional<std::string> signal;
    std::optional<std::string> gains;
    std::optional<std::string> certificate;
    std::optional<std::string> out;  // output directory
    std::optional<Scheme> scheme;
    std::uint64_t seed = 7;
    double horizon = 10.0;
    double step = 0.01;
    int digits = 2;
    std::vector<double> x0;  // empty: all ones
    std::optional<double> violation;
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> names{"certify",    "synthesize", "thresholds", "check-signal",
                                                "gen-signal", "simulate",   "report"};
    return names;
}

namespace detail {

struct Context {
    const RunConfig& cfg;
    std::ostream& out;

    [[nodiscard]] const std::string& need(const std::optional<std::string>& path, const char* flag) const {
        if (!path) throw InputError(cfg.command + ": " + flag + " is required");
        return *path;
    }

    void write(const std::string& name, const std::string& text) const {
        if (!cfg.out) return;
        std::filesystem::create_directories(*cfg.out);
        const auto path = std::filesystem::path(*cfg.out) / name;
        std::ofstream f(path);
        if (!f) throw InputError("cannot write " + path.string());
        f << text;
    }

    void write(const std::string& name, const Json& doc) const { write(name, doc.dump(2) + "\n"); }
};

struct Loaded {
    SwitchedSystem system;
    Json doc;
};

inline Loaded load_system(const Context& ctx) {
    Json doc = read_json_file(ctx.need(ctx.cfg.system, "--system"));
    return {parse_system(doc), std::move(doc)};
}

/// Policy fields come from --policy, else from the system document itself.
inline Json policy_doc(const Context& ctx, const Json* system_doc) {
    if (ctx.cfg.policy) return read_json_file(*ctx.cfg.policy);
    if (system_doc && system_doc->contains("lambda")) return *system_doc;
    throw InputError(ctx.cfg.command + ": --policy is required");
}

inline Scheme scheme_of(const Context& ctx, const Json& pdoc) {
    if (ctx.cfg.scheme) return *ctx.cfg.scheme;
    if (pdoc.contains("scheme")) return parse_scheme(pdoc["scheme"].get<std::string>());
    return Scheme::sbasdt;
}

inline TimeDomain domain_of(const Json& pdoc) {
    return pdoc.contains("time_domain") ? parse_time_domain(pdoc["time_domain"].get<std::string>())
                                        : TimeDomain::continuous;
}

inline Vector initial_state(const RunConfig& cfg, int n) {
    if (cfg.x0.empty()) return Vector::Ones(n);
    if (static_cast<int>(cfg.x0.size()) != n)
        throw InputError("--x0: expected " + std::to_string(n) + " components, got " + std::to_string(cfg.x0.size()));
    return Eigen::Map<const Vector>(cfg.x0.data(), n);
}

inline int cmd_certify(const Context& ctx) {
    auto [system, sdoc] = load_system(ctx);
    const Json pdoc = policy_doc(ctx, &sdoc);
    const Scheme scheme = scheme_of(ctx, pdoc);
    const auto lambda = parse_lambda(pdoc, system.num_modes());
    if (ctx.cfg.gains) system = closed_loop(system, parse_gains(read_json_file(*ctx.cfg.gains)));
    const auto cert = certify_linear(system, lambda, scheme);
    const auto margins = verify_certificate(system, cert);
    ctx.out << threshold_table_text(threshold_rows(cert.policy()), ctx.cfg.digits) << "\n"
            << margin_table_text(margins);
    Json doc = certificate_to_json(cert);
    doc["verification"] = margin_report_to_json(margins);
    ctx.write("certificate.json", doc);
    return margins.passed ? pass : fail;
}

inline int cmd_synthesize(const Context& ctx) {
    const auto [system, sdoc] = load_system(ctx);
    const Json pdoc = policy_doc(ctx, &sdoc);
    const Scheme scheme = scheme_of(ctx, pdoc);
    const auto lambda = parse_lambda(pdoc, system.num_modes());
    const auto result = synthesize(system, lambda, scheme);
    const auto gains = validate_gains(system, result.gains, lambda);
    const auto margins = verify_certificate(closed_loop(system, result.gains), result.certificate);

    ctx.out << "gains (u = K x)\n";
    for (const auto& [mode, k] : result.gains) {
        ctx.out << "  K" << mode << " = [";
        for (Eigen::Index j = 0; j < k.cols(); ++j) ctx.out << (j ? ", " : "") << fixed(k(0, j), 6);
        ctx.out << "]\n";
    }
    ctx.out << "\n" << gain_table_text(gains, system.time_domain()) << "\n"
            << threshold_table_text(threshold_rows(result.certificate.policy()), ctx.cfg.digits);

    Json synth;
    Json u = Json::object(), t = Json::object(), poles = Json::object();
    for (const auto& [mode, m] : result.u) u[std::to_string(mode)] = matrix_to_json(m);
    for (const auto& [mode, m] : result.t) t[std::to_string(mode)] = matrix_to_json(m);
    for (const auto& [mode, v] : result.target_poles) poles[std::to_string(mode)] = v;
    synth["U"] = std::move(u);
    synth["T"] = std::move(t);
    synth["target_poles"] = std::move(poles);
    synth["placement"] = {{"delta", result.constants.delta},
                          {"spread", result.constants.spread},
                          {"shrink", result.constants.shrink},
                          {"ratio", result.constants.ratio}};
    synth["gain_check"] = gain_report_to_json(gains);
    Json cert = certificate_to_json(result.certificate);
    cert["verification"] = margin_report_to_json(margins);
    ctx.write("gains.json", gains_to_json(result.gains));
    ctx.write("certificate.json", cert);
    ctx.write("synthesis.json", synth);
    return gains.passed && margins.passed ? pass : fail;
}

inline int cmd_thresholds(const Context& ctx) {
    std::optional<Loaded> sys;
    if (ctx.cfg.system) sys = load_system(ctx);
    const Json pdoc = policy_doc(ctx, sys ? &sys->doc : nullptr);
    const TimeDomain domain = sys ? sys->system.time_domain() : domain_of(pdoc);
    const auto pol = parse_policy(pdoc, domain, sys ? sys->system.num_modes() : 0, ctx.cfg.scheme);
    const auto rows = threshold_rows(pol);
    const std::string text = threshold_table_text(rows, ctx.cfg.digits);
    ctx.out << text;
    ctx.write("thresholds.json", Json{{"policy", policy_to_json(pol)},
                                      {"digits", ctx.cfg.digits},
                                      {"rows", threshold_rows_to_json(rows, ctx.cfg.digits)}});
    ctx.write("thresholds.txt", text);
    return pass;
}

inline int cmd_check_signal(const Context& ctx) {
    const auto signal = parse_signal(read_json_file(ctx.need(ctx.cfg.signal, "--signal")));
    std::optional<Loaded> sys;
    if (ctx.cfg.system) {
        sys = load_system(ctx);
        signal.validate_for(sys->system);
    }
    if (!ctx.cfg.policy && !(sys && sys->doc.contains("mu"))) {
        ctx.out << "valid signal: " << signal.size() << " segments, horizon " << signal.horizon() << "\n";
        return pass;
    }
    const Json pdoc = policy_doc(ctx, sys ? &sys->doc : nullptr);
    const TimeDomain domain = sys ? sys->system.time_domain() : domain_of(pdoc);
    const auto pol = parse_policy(pdoc, domain, sys ? sys->system.num_modes() : 0, ctx.cfg.scheme);
    const auto report = check_admissible(signal, pol);
    const std::string text = admissibility_table_text(report);
    ctx.out << text;
    ctx.write("admissibility.json", admissibility_to_json(report));
    ctx.write("admissibility.txt", text);
    return report.admissible ? pass : fail;
}

inline int cmd_gen_signal(const Context& ctx) {
    std::optional<Loaded> sys;
    if (ctx.cfg.system) sys = load_system(ctx);
    const Json pdoc = policy_doc(ctx, sys ? &sys->doc : nullptr);
    const TimeDomain domain = sys ? sys->system.time_domain() : domain_of(pdoc);
    SignalGenSpec spec;
    spec.policy = parse_policy(pdoc, domain, sys ? sys->system.num_modes() : 0, ctx.cfg.scheme);
    spec.horizon = ctx.cfg.horizon;
    spec.seed = ctx.cfg.seed;
    spec.violation_factor = ctx.cfg.violation;
    const auto signal = generate_signal(spec);
    const auto report = check_admissible(signal, spec.policy);

    Json doc = signal_to_json(signal);
    doc["metadata"] = {{"scheme", std::string(to_string(spec.policy.scheme))},
                       {"seed", spec.seed},
                       {"horizon", spec.horizon},
                       {"multiplier_min", spec.multiplier_min},
                       {"multiplier_max", spec.multiplier_max},
                       {"min_dwell", spec.min_dwell},
                       {"admissible", report.admissible}};
    if (spec.violation_factor) doc["metadata"]["violation_factor"] = *spec.violation_factor;
    if (ctx.cfg.out)
        ctx.write("signal.json", doc);
    else
        ctx.out << doc.dump(2) << "\n";
    if (ctx.cfg.out) ctx.out << admissibility_table_text(report);
    return pass;
}

inline int cmd_simulate(const Context& ctx) {
    auto [system, sdoc] = load_system(ctx);
    const auto signal = parse_signal(read_json_file(ctx.need(ctx.cfg.signal, "--signal")));
    if (ctx.cfg.gains) system = closed_loop(system, parse_gains(read_json_file(*ctx.cfg.gains)));
    std::optional<StabilityCertificate> cert;
    if (ctx.cfg.certificate) cert = parse_certificate(read_json_file(*ctx.cfg.certificate));
    const double step = system.time_domain() == TimeDomain::discrete ? 1.0 : ctx.cfg.step;
    const Vector x0 = initial_state(ctx.cfg, system.state_dim());
    const auto traj = simulate(system, signal, x0, step, cert ? LyapunovFunctions::quadratic(*cert) : LyapunovFunctions{});

    const auto& last = traj.samples.back();
    Json summary{{"samples", traj.samples.size()},
                 {"step", step},
                 {"diverged", traj.diverged},
                 {"final_time", last.t},
                 {"final_norm", last.x.norm()},
                 {"initial_norm", x0.norm()}};
    ctx.out << "samples " << traj.samples.size() << ", final t = " << last.t << ", |x(T)|/|x0| = "
            << last.x.norm() / x0.norm() << (traj.diverged ? " (diverged)" : "") << "\n";
    bool ok = !traj.diverged;
    if (traj.samples.size() >= 10) {
        const auto fit = fit_gues(traj);
        summary["gues"] = {{"eta", fit.eta}, {"gamma", fit.gamma}, {"varsigma", fit.varsigma}, {"residual", fit.residual}};
        ctx.out << "GUES fit: eta = " << fit.eta << ", gamma = " << fit.gamma << "\n";
    }
    if (cert && !traj.diverged) {
        const auto env = check_envelope(traj, *cert, signal);
        summary["envelope"] = {{"max_excess", env.max_excess}, {"worst_time", env.worst_time}, {"pass", env.pass}};
        ctx.out << "envelope: max excess " << env.max_excess << " at t = " << env.worst_time
                << (env.pass ? " (pass)" : " (FAIL)") << "\n";
        ok = ok && env.pass;
    }
    ctx.write("trajectory.csv", trajectory_to_csv(traj));
    ctx.write("simulation.json", summary);
    return ok ? pass : fail;
}

inline int cmd_report(const Context& ctx) {
    const bool bundled = !ctx.cfg.system;
    const ExampleBundle ex = bundled_example();
    std::optional<Loaded> sys;
    if (!bundled) sys = load_system(ctx);
    const SwitchedSystem& system = bundled ? ex.system : sys->system;

    std::vector<DwellPolicy> policies;
    if (bundled && !ctx.cfg.policy) {
        for (auto s : {Scheme::sbasdt, Scheme::sbapdt, Scheme::mdadt}) policies.push_back(ex.policy(s));
    } else {
        const Json pdoc = policy_doc(ctx, sys ? &sys->doc : nullptr);
        for (auto s : {Scheme::sbasdt, Scheme::sbapdt, Scheme::mdadt})
            policies.push_back(parse_policy(pdoc, system.time_domain(), system.num_modes(), s));
    }

    Json doc;
    doc["digits"] = ctx.cfg.digits;
    std::string text;
    Json tables = Json::array();
    for (const auto& pol : policies) {
        const auto rows = threshold_rows(pol);
        text += threshold_table_text(rows, ctx.cfg.digits) + "\n";
        tables.push_back({{"policy", policy_to_json(pol)}, {"rows", threshold_rows_to_json(rows, ctx.cfg.digits)}});
    }
    doc["thresholds"] = std::move(tables);

    bool ok = true;
    if (bundled) {
        Json checks = Json::object();
        for (const auto& [name, gains] : {std::pair{"mdadt", &ex.mdadt_gains}, std::pair{"sbasdt", &ex.sbasdt_gains}}) {
            const auto report = validate_gains(system, *gains, ex.lambda);
            text += std::string("published ") + name + " gains\n" + gain_table_text(report, system.time_domain()) + "\n";
            checks[name] = {{"gains", gains_to_json(*gains)}, {"check", gain_report_to_json(report)}};
            ok = ok && report.passed;
        }
        doc["published_gains"] = std::move(checks);
    }
    ctx.out << text;
    ctx.write("report.json", doc);
    ctx.write("report.txt", text);
    return ok ? pass : fail;
}

}  // namespace detail

/// Runs one command. Diagnostics go to `err`; exit codes follow ExitCode.
inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    const detail::Context ctx{cfg, out};
    try {
        if (cfg.digits < 0 || cfg.digits > 12) throw InputError("--digits must be in [0, 12]");
        if (!(cfg.step > 0.0)) throw InputError("--step must be positive");
        if (!(cfg.horizon > 0.0)) throw InputError("--horizon must be positive");
        if (cfg.command == "certify") return detail::cmd_certify(ctx);
        if (cfg.command == "synthesize") return detail::cmd_synthesize(ctx);
        if (cfg.command == "thresholds") return detail::cmd_thresholds(ctx);
        if (cfg.command == "check-signal") return detail::cmd_check_signal(ctx);
        if (cfg.command == "gen-signal") return detail::cmd_gen_signal(ctx);
        if (cfg.command == "simulate") return detail::cmd_simulate(ctx);
        if (cfg.command == "report") return detail::cmd_report(ctx);
        throw InputError("unknown command \"" + cfg.command + "\"");
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << "\n";
        return fail;
    } catch (const NumericError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return fail;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return input_error;
    } catch (const UnsupportedError& e) {
        err << "unsupported: " << e.what() << "\n";
        return input_error;
    } catch (const nlohmann::json::exception& e) {
        err << "input error: " << e.what() << "\n";
        return input_error;
    }
}

}  // namespace seqdwell::cli
