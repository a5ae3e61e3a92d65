#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <dryfric/commands.hpp>
#include <dryfric/validate.hpp>

namespace {

// flat JSON parameter file mirroring the flags; explicit flags win because
// the file is folded into the bound defaults before parsing
template <class C>
void apply_params_file(C& c, const std::string& path, const char* command) {
    nlohmann::json base = c;
    nlohmann::json file;
    try {
        dryfric::detail::open_in(path) >> file;
    } catch (const dryfric::IoError& e) {
        throw std::invalid_argument(std::string("--params: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("--params " + path + ": " + e.what());
    }
    if (!file.is_object())
        throw std::invalid_argument("--params " + path +
                                    ": must hold a flat JSON object");
    for (const auto& [k, v] : file.items()) {
        if (!base.contains(k))
            throw std::invalid_argument("--params: unknown key '" + k + "' for " +
                                        command);
        base[k] = v;
    }
    try {
        c = base.get<C>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("--params " + path + ": " + e.what());
    }
}

std::uint64_t env_seed() {
    const char* s = std::getenv("DRYFRIC_SEED");
    if (!s || !*s) return 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end == s || *end != '\0')
        throw std::invalid_argument(
            "DRYFRIC_SEED must be an unsigned integer, got: " + std::string(s));
    return v;
}

void print_console(const nlohmann::ordered_json& console) {
    for (const auto& [k, v] : console.items()) {
        if (v.is_array()) {
            for (const auto& item : v)
                std::printf("%s\n", item.get<std::string>().c_str());
        } else if (v.is_string()) {
            std::printf("%s = %s\n", k.c_str(), v.get<std::string>().c_str());
        } else {
            std::printf("%s = %s\n", k.c_str(), v.dump().c_str());
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    using namespace dryfric;

    CLI::App app{"Langevin dynamics with dry friction: exact laws, quadrature, "
                 "and Monte Carlo"};
    app.require_subcommand(1);

    // --params is handled before CLI11 sees the arguments, so it can feed the
    // bound defaults; the registration below only documents it in --help
    std::vector<std::string> args;
    std::string params_path;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    for (auto it = args.begin(); it != args.end();) {
        if (*it == "--params") {
            if (std::next(it) == args.end()) {
                std::fprintf(stderr, "error: --params requires a file path\n");
                return 2;
            }
            params_path = *std::next(it);
            it = args.erase(it, std::next(it, 2));
        } else if (it->rfind("--params=", 0) == 0) {
            params_path = it->substr(9);
            it = args.erase(it);
        } else {
            ++it;
        }
    }
    const std::string subname =
        args.empty() || args.front().rfind("-", 0) == 0 ? "" : args.front();

    StationaryCommand st;
    Figure1Command fig;
    PropagatorCommand pr;
    SimulateCommand sim;
    ValidateCommand val;
    std::string rerun_manifest, rerun_out_dir, params_doc;

    auto* c_st = app.add_subcommand("stationary", "stationary density curve");
    c_st->add_option("--nu", st.nu, "noise scale nu = D/(2 c delta)");
    c_st->add_option("--tau", st.tau, "friction-to-viscosity ratio delta/alpha");
    c_st->add_option("--y", st.y, "drift target a/alpha");
    c_st->add_option("--grid-lo", st.grid_lo, "grid start (with --grid-hi)");
    c_st->add_option("--grid-hi", st.grid_hi, "grid end (defaults to automatic)");
    c_st->add_option("--points", st.points, "grid points (0 = automatic)");
    c_st->add_option("--out", st.out, "output CSV path");
    c_st->add_option("--params", params_doc, "flat JSON file mirroring the flags");

    auto* c_fig = app.add_subcommand("figure1", "limit-law curve family as CSV");
    c_fig->add_option("--out-dir", fig.out_dir, "output directory");
    c_fig->add_option("--params", params_doc, "flat JSON file mirroring the flags");

    auto* c_pr = app.add_subcommand("propagator", "transition density p(v, t | v0)");
    c_pr->add_option("--v0", pr.v0, "initial velocity");
    c_pr->add_option("--t", pr.t, "horizon");
    c_pr->add_option("--delta", pr.delta, "dry friction threshold");
    c_pr->add_option("--a", pr.a, "constant force (positive pushes positive v)");
    c_pr->add_option("--alpha", pr.alpha, "viscous coefficient");
    c_pr->add_option("--method", pr.method, "closed | quadrature | girsanov");
    c_pr->add_option("--grid-lo", pr.grid_lo, "grid start (with --grid-hi)");
    c_pr->add_option("--grid-hi", pr.grid_hi, "grid end (defaults to automatic)");
    c_pr->add_option("--points", pr.points, "grid points (0 = automatic)");
    c_pr->add_option("--n-paths", pr.n_paths, "paths for method girsanov");
    c_pr->add_option("--dt", pr.dt, "time step for method girsanov");
    c_pr->add_option("--seed", pr.seed, "RNG seed (default: DRYFRIC_SEED or 0)");
    c_pr->add_option("--bandwidth", pr.bandwidth,
                     "kernel bandwidth for method girsanov (0 = automatic)");
    c_pr->add_option("--out", pr.out, "output CSV path");
    c_pr->add_option("--params", params_doc, "flat JSON file mirroring the flags");

    auto* c_sim = app.add_subcommand("simulate", "Euler-Maruyama path ensemble");
    c_sim->add_option("--alpha", sim.alpha, "viscous coefficient");
    c_sim->add_option("--a", sim.a, "constant force (positive pushes positive v)");
    c_sim->add_option("--delta", sim.delta, "dry friction threshold");
    c_sim->add_option("--diffusion", sim.diffusion, "diffusion constant D");
    c_sim->add_option("--drift-scale", sim.drift_scale,
                      "drift prefactor c in -c(alpha v - a + delta sgn v)");
    c_sim->add_option("--v0", sim.v0, "initial velocity");
    c_sim->add_option("--t", sim.t, "horizon");
    c_sim->add_option("--dt", sim.dt, "time step");
    c_sim->add_option("--n-paths", sim.n_paths, "number of paths");
    c_sim->add_option("--seed", sim.seed, "RNG seed (default: DRYFRIC_SEED or 0)");
    c_sim->add_flag("--functionals", sim.functionals,
                    "record path functionals (local time, occupation, moments)");
    c_sim->add_option("--out", sim.out, "output CSV path");
    c_sim->add_option("--params", params_doc, "flat JSON file mirroring the flags");

    auto* c_val = app.add_subcommand("validate", "run the verification gates");
    c_val->add_option("--level", val.level, "fast | full");
    c_val->add_option("--seed", val.seed, "RNG seed (default: DRYFRIC_SEED or 0)");
    c_val->add_option("--report", val.report, "machine-readable report path");
    c_val->add_option("--params", params_doc, "flat JSON file mirroring the flags");

    auto* c_re = app.add_subcommand("rerun", "replay a command from its manifest");
    c_re->add_option("manifest", rerun_manifest, "manifest JSON path")->required();
    c_re->add_option("--out-dir", rerun_out_dir,
                     "redirect outputs into this directory");

    try {
        const std::uint64_t es = env_seed();
        pr.seed = es;
        sim.seed = es;
        val.seed = es;

        if (!params_path.empty()) {
            if (subname == "stationary") apply_params_file(st, params_path, "stationary");
            else if (subname == "figure1") apply_params_file(fig, params_path, "figure1");
            else if (subname == "propagator") apply_params_file(pr, params_path, "propagator");
            else if (subname == "simulate") apply_params_file(sim, params_path, "simulate");
            else if (subname == "validate") apply_params_file(val, params_path, "validate");
            else
                throw std::invalid_argument(
                    "--params is only supported for stationary, figure1, "
                    "propagator, simulate, validate");
        }

        std::vector<const char*> ptrs{argv[0]};
        for (const auto& a : args) ptrs.push_back(a.c_str());
        app.parse(static_cast<int>(ptrs.size()), ptrs.data());

        CommandResult res;
        if (c_st->parsed()) res = run_stationary(st);
        else if (c_fig->parsed()) res = run_figure1(fig);
        else if (c_pr->parsed()) res = run_propagator(pr);
        else if (c_sim->parsed()) res = run_simulate(sim);
        else if (c_val->parsed()) res = run_validate(val);
        else res = run_rerun(rerun_manifest, rerun_out_dir);

        print_console(res.console);
        return res.exit_code;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const NonConvergence& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
