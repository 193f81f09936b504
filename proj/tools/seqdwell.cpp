#include <CLI11.hpp>

#include <map>
#include <string>

#include <seqdwell/cli.hpp>

namespace {

void add_common(CLI::App& sub, seqdwell::cli::RunConfig& cfg, std::string& scheme) {
    sub.add_option("--system", cfg.system, "system document (JSON)");
    sub.add_option("--policy", cfg.policy, "dwell policy document (JSON)");
    sub.add_option("--signal", cfg.signal, "switching signal document (JSON)");
    sub.add_option("--gains", cfg.gains, "feedback gains (JSON), applied as u = K x");
    sub.add_option("--certificate", cfg.certificate, "certificate from `certify` or `synthesize`");
    sub.add_option("--out", cfg.out, "output directory for artifacts");
    sub.add_option("--scheme", scheme, "adt | mdadt | sbasdt | sbapdt")
        ->check(CLI::IsMember({"adt", "mdadt", "sbasdt", "sbapdt"}, CLI::ignore_case));
    sub.add_option("--seed", cfg.seed, "signal generator seed");
    sub.add_option("--horizon", cfg.horizon, "signal horizon");
    sub.add_option("--step", cfg.step, "sampling step (continuous systems)");
    sub.add_option("--digits", cfg.digits, "rounding digits in tables");
    sub.add_option("--x0", cfg.x0, "initial state, defaults to all ones")->delimiter(',');
    sub.add_option("--violation", cfg.violation, "gen-signal: shrink dwells by this factor");
}

const std::map<std::string, std::string> summaries{
    {"certify", "build and verify multiple Lyapunov functions"},
    {"synthesize", "place closed-loop poles and certify the result"},
    {"thresholds", "print dwell thresholds for a policy"},
    {"check-signal", "test a switching signal against a policy"},
    {"gen-signal", "draw a random admissible switching signal"},
    {"simulate", "simulate and compare against the certificate envelope"},
    {"report", "threshold tables and gain checks for the bundled example"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dwell-time stability toolkit for switched linear systems"};
    app.require_subcommand(1);
    seqdwell::cli::RunConfig cfg;
    std::string scheme;
    for (const auto& name : seqdwell::cli::commands()) add_common(*app.add_subcommand(name, summaries.at(name)), cfg, scheme);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return seqdwell::cli::input_error;
    }
    cfg.command = app.get_subcommands().front()->get_name();
    if (!scheme.empty()) cfg.scheme = seqdwell::parse_scheme(scheme);
    return seqdwell::cli::run(cfg);
}
