// Command-line front end: run scenarios, sweep parameter grids, list
// presets and re-validate serialized reports.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mcflab/mcflab.hpp"

namespace {

mcflab::ScenarioConfig load_config(const std::string& preset_name,
                                   const std::string& config_path) {
    if (!preset_name.empty() && !config_path.empty())
        throw std::invalid_argument("give either --preset or --config, not both");
    if (!preset_name.empty()) return mcflab::preset(preset_name);
    if (!config_path.empty()) return mcflab::ScenarioConfig::parse_file(config_path);
    throw std::invalid_argument("need --preset or --config");
}

void apply_overrides(mcflab::ScenarioConfig& cfg, const std::string& seed,
                     const std::string& g_rescaling, const std::string& k1_exponent) {
    if (!seed.empty()) cfg.set("seed", seed);
    if (!g_rescaling.empty()) cfg.set("g_rescaling", g_rescaling);
    if (!k1_exponent.empty()) cfg.set("k1_exponent", k1_exponent);
}

int print_result(const mcflab::ScenarioResult& r) {
    if (r.exit_code == mcflab::kExitConfigError) {
        std::cerr << "error: " << r.diagnostic << "\n";
        return r.exit_code;
    }
    if (r.trajectory.truncated)
        std::cout << "trajectory truncated: " << r.trajectory.truncation_reason << "\n";
    for (const auto& rep : r.reports)
        std::cout << rep.name << ": " << mcflab::verdict_name(rep.verdict)
                  << "  (min slack " << mcflab::format_double(rep.min_slack())
                  << ", tol " << mcflab::format_double(rep.tolerance) << ")\n";
    return r.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mcflab: forced mean curvature flow laboratory"};
    app.require_subcommand(1);

    std::string preset_name, config_path, out_dir, seed, g_rescaling, k1_exponent;

    auto* run = app.add_subcommand("run", "run one scenario");
    run->add_option("--preset", preset_name, "built-in scenario name");
    run->add_option("--config", config_path, "key = value config file");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed", seed, "seed override");
    run->add_option("--g-rescaling", g_rescaling, "derived|paper");
    run->add_option("--k1-exponent", k1_exponent, "derivation|paper");

    std::vector<std::string> params;
    auto* sw = app.add_subcommand("sweep", "run a parameter grid and merge results");
    sw->add_option("--preset", preset_name, "built-in scenario name");
    sw->add_option("--config", config_path, "key = value config file");
    sw->add_option("--out", out_dir, "output directory");
    sw->add_option("--seed", seed, "seed override");
    sw->add_option("--g-rescaling", g_rescaling, "derived|paper");
    sw->add_option("--k1-exponent", k1_exponent, "derivation|paper");
    sw->add_option("--param", params, "key=v1,v2,... (repeatable; grid is the product)");

    auto* lp = app.add_subcommand("list-presets", "list built-in scenarios");

    std::vector<std::string> report_files;
    auto* vr = app.add_subcommand("verify-report", "re-validate serialized reports");
    vr->add_option("files", report_files, "report files")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (lp->parsed()) {
            for (const auto& n : mcflab::preset_names()) std::cout << n << "\n";
            return 0;
        }
        if (run->parsed()) {
            mcflab::ScenarioConfig cfg = load_config(preset_name, config_path);
            apply_overrides(cfg, seed, g_rescaling, k1_exponent);
            return print_result(mcflab::run_scenario(cfg, out_dir));
        }
        if (sw->parsed()) {
            mcflab::ScenarioConfig base = load_config(preset_name, config_path);
            apply_overrides(base, seed, g_rescaling, k1_exponent);
            std::vector<std::string> keys;
            std::vector<std::vector<std::string>> values;
            for (const auto& p : params) {
                const auto eq = p.find('=');
                if (eq == std::string::npos)
                    throw std::invalid_argument("--param needs key=v1,v2,...");
                keys.push_back(p.substr(0, eq));
                std::vector<std::string> vals;
                std::stringstream ss(p.substr(eq + 1));
                std::string v;
                while (std::getline(ss, v, ',')) vals.push_back(v);
                if (vals.empty()) throw std::invalid_argument("empty value list for --param");
                values.push_back(vals);
            }
            if (keys.empty()) throw std::invalid_argument("sweep needs at least one --param");
            std::vector<mcflab::ScenarioConfig> grid{base};
            for (std::size_t k = 0; k < keys.size(); ++k) {
                std::vector<mcflab::ScenarioConfig> next;
                for (const auto& g : grid)
                    for (const auto& v : values[k]) {
                        mcflab::ScenarioConfig c = g;
                        c.set(keys[k], v);
                        next.push_back(c);
                    }
                grid = std::move(next);
            }
            if (grid.size() < 2) throw std::invalid_argument("sweep grid has fewer than 2 points");
            mcflab::SweepResult res = mcflab::sweep(grid, keys, out_dir);
            if (res.exit_code == mcflab::kExitConfigError) {
                std::cerr << "error: " << res.diagnostic << "\n";
                return res.exit_code;
            }
            res.table.write_csv(std::cout);
            return res.exit_code;
        }
        if (vr->parsed()) {
            int code = 0;
            for (const auto& f : report_files) {
                std::ifstream is(f);
                if (!is) {
                    std::cerr << f << ": cannot open\n";
                    return 1;
                }
                std::stringstream buf;
                buf << is.rdbuf();
                std::string why;
                if (mcflab::verify_report_text(buf.str(), why)) {
                    std::cout << f << ": ok\n";
                } else {
                    std::cout << f << ": INVALID (" << why << ")\n";
                    code = 2;
                }
            }
            return code;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
