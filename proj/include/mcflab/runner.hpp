#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mcflab/scenario.hpp"

namespace mcflab {

inline constexpr const char* kVersion = "0.1.0";

/// Exit statuses of run_scenario / sweep.
enum ExitStatus : int {
    kExitPass = 0,
    kExitConfigError = 1,
    kExitCheckFailed = 2,
    kExitAllVacuous = 3,
};

struct ScenarioResult {
    int exit_code = kExitPass;
    std::string diagnostic;
    ScenarioConfig resolved;
    FlowTrajectory trajectory;
    std::vector<CheckReport> reports;
    TimeSeriesTable scales;
    std::string manifest_text;
    double tuned_delta0 = 0.0;
    bool tuned = false;
};

namespace detail {

inline const std::vector<std::string>& known_checks() {
    static const std::vector<std::string> names = {
        "monotonicity-compact", "l2-control-compact",  "l2-control-localized",
        "almost-monotone-J",    "mean-value",          "discrete-loja",
        "distance-decay",       "extension-phi-bound", "graph-persistence"};
    return names;
}

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto a = item.find_first_not_of(" \t");
        const auto b = item.find_last_not_of(" \t");
        if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
    }
    return out;
}

inline const char* column_reference(const std::string& col) {
    if (col == "f") return "Gaussian area F_{0,1}";
    if (col == "f_hat") return "cutoff Gaussian area, psi_t^2 weight";
    if (col == "mu_compact") return "compact modification factor exp(K^2 e^{-t})";
    if (col == "f_tilde_compact") return "compact modified functional mu F";
    if (col == "mu_loc") return "localized modification factor exp(K1 e^{-t})";
    if (col == "f_tilde_loc") return "localized modified functional mu F_hat + K3 e^{-nt/2}";
    if (col == "phi2_full") return "squared Gaussian L2 norm of the shrinker quantity";
    if (col == "phi2_ball")
        return "squared Gaussian L2 norm of the shrinker quantity on B(3 r0 e^{t/2})";
    if (col == "phi_max") return "sup norm of the shrinker quantity";
    if (col == "area") return "surface measure";
    if (col == "graph_ok") return "state is a normal graph over the model (0/1)";
    if (col.rfind("graph_", 0) == 0) return "graph norm over the model";
    if (col == "t") return "flow time";
    if (col == "step") return "step index";
    if (col == "T") return "window center time";
    if (col == "window_integral") return "two-sided window integral of |phi|^2 on the ball";
    if (col == "r_t") return "shrinker scale R_T";
    if (col == "r_t_defined") return "R_T defined flag (0: integral >= 1 or zero)";
    if (col == "r_star") return "combined scale R_*";
    if (col == "r_loc") return "localisation scale 2 sqrt(T+1)";
    if (col.rfind("u", 0) == 0) return "normal graph offset over the model";
    return "auxiliary";
}

inline void write_table_file(const std::filesystem::path& path, const TimeSeriesTable& t,
                             long seed) {
    std::ofstream os(path);
    os << "# seed " << seed << "\n";
    for (const auto& c : t.columns)
        os << "# column " << c << ": " << column_reference(c) << "\n";
    t.write_csv(os);
}

} // namespace detail

/// Resolve scenario defaults in place so that the serialized config
/// fully determines the run.
inline void resolve_defaults(ScenarioConfig& cfg) {
    auto def = [&](const std::string& k, const std::string& v) {
        if (!cfg.has(k)) cfg.set(k, v);
    };
    def("scenario", "custom");
    def("geometry", "circle");
    def("picture", "rescaled");
    def("resolution", cfg.get("geometry") == "circle" ? "128" : "512");
    def("t0", "0");
    def("t1", "1");
    def("dt", "0.001");
    def("z_extent", format_double(4.0 * std::numbers::pi));
    def("perturb_eps", "0");
    def("perturb_mode", "2");
    def("q1", "1");
    def("q2", "1.5");
    def("initial_scale", "1");
    def("tune_radius", "off");
    def("forcing", "none");
    def("forcing_c", "0");
    def("forcing_moll", "2");
    def("forcing_dir", "1,0,0");
    def("r0", "1");
    def("cutoff", "bump");
    def("k1_exponent", "derivation");
    def("g_rescaling", "derived");
    def("checks", "");
    def("seed", "20080");
    def("state_stride", "10");
    def("graph_stride", "0");
    def("sigma_bar", "0.5");
    def("center_a", "0");
    def("center_b", "0");
    def("mean_value_beta", "0.25");
    def("mean_value_radius", "2.5");
    def("ext_radius", "1.5");
    def("ext_mu", "0.25");
    def("graph_eps", "0.5");
}

/// Build the initial-state recipe from a resolved config.
inline InitialStateSpec initial_spec_from_config(const ScenarioConfig& cfg) {
    InitialStateSpec spec;
    spec.kind = cfg.get("geometry");
    spec.resolution = static_cast<std::size_t>(cfg.get_int("resolution", 128));
    spec.z_extent = cfg.get_num("z_extent", 4.0 * std::numbers::pi);
    spec.eps = cfg.get_num("perturb_eps", 0.0);
    spec.mode = static_cast<int>(cfg.get_int("perturb_mode", 2));
    spec.q1 = cfg.get_num("q1", 1.0);
    spec.q2 = cfg.get_num("q2", 1.5);
    spec.a2 = spec.eps != 0.0 ? detail::cylinder_mode_coefficient(spec.q1, spec.q2) : 0.0;
    spec.model = spec.kind == "circle" ? ShrinkerModel::circle() : ShrinkerModel::cylinder();
    return spec;
}

inline ForcingSpec forcing_from_config(const ScenarioConfig& cfg, double working_radius) {
    const std::string kind = cfg.get("forcing", "none");
    const double c = cfg.get_num("forcing_c", 0.0);
    if (kind == "none" || c == 0.0) return ForcingSpec::zero();
    if (kind == "radial")
        return ForcingSpec::radial(c, cfg.get_num("forcing_moll", 2.0), working_radius);
    if (kind == "constant") {
        const auto parts = detail::split_list(cfg.get("forcing_dir", "1,0,0"));
        Vec3 dir{1.0, 0.0, 0.0};
        if (parts.size() == 3)
            dir = Vec3{std::strtod(parts[0].c_str(), nullptr),
                       std::strtod(parts[1].c_str(), nullptr),
                       std::strtod(parts[2].c_str(), nullptr)};
        return ForcingSpec::constant(dir * c, working_radius);
    }
    if (kind == "bump") {
        const auto parts = detail::split_list(cfg.get("forcing_dir", "1,0,0"));
        Vec3 dir{1.0, 0.0, 0.0};
        if (parts.size() == 3)
            dir = Vec3{std::strtod(parts[0].c_str(), nullptr),
                       std::strtod(parts[1].c_str(), nullptr),
                       std::strtod(parts[2].c_str(), nullptr)};
        return ForcingSpec::bump(c, dir, Vec3{0.0, 0.0, 0.0},
                                 cfg.get_num("forcing_rin", 1.0),
                                 cfg.get_num("forcing_rout", 3.0), working_radius);
    }
    throw std::invalid_argument("unknown forcing kind: " + kind);
}

/// Run one scenario; when out_dir is non-empty, writes series.csv,
/// graphs.csv, scales.csv, one report_<check>.txt per check, the
/// resolved config and a manifest.  Exit codes: 0 all checks pass,
/// 2 some failed, 3 all vacuous, 1 configuration/runtime error.
inline ScenarioResult run_scenario(ScenarioConfig cfg, const std::string& out_dir = "") {
    ScenarioResult result;
    resolve_defaults(cfg);
    result.resolved = cfg;
    try {
        const std::string picture_name = cfg.get("picture");
        if (picture_name != "rescaled" && picture_name != "unrescaled")
            throw std::invalid_argument("picture must be rescaled|unrescaled");
        const Picture picture =
            picture_name == "rescaled" ? Picture::Rescaled : Picture::Unrescaled;
        const auto check_names = detail::split_list(cfg.get("checks"));
        for (const auto& c : check_names) {
            bool known = false;
            for (const auto& k : detail::known_checks()) known = known || k == c;
            if (!known) throw std::invalid_argument("unknown check: " + c);
        }

        InitialStateSpec spec = initial_spec_from_config(cfg);
        const double scale0 = cfg.get_num("initial_scale", 1.0);
        const double working_radius =
            spec.kind == "circle" ? 8.0 * scale0
                                  : std::hypot(4.0, spec.z_extent) + 2.0;
        ForcingSpec forcing = forcing_from_config(cfg, working_radius);
        if (forcing.kind != ForcingKind::Zero) {
            const double self_err = forcing.derivative_self_test();
            if (self_err > 1e-4)
                throw std::invalid_argument("forcing derivative self-test failed");
            if (forcing.sampled_sup() > forcing.k_bound * (1.0 + 1e-9))
                throw std::invalid_argument("forcing exceeds declared bound");
        }

        const RescaleConvention conv = cfg.get("g_rescaling") == "paper"
                                           ? RescaleConvention::PaperExponent
                                           : RescaleConvention::Derived;
        double delta0 = 0.0;
        if (cfg.get("tune_radius") == "on") {
            delta0 = tune_radius_offset(spec, forcing, cfg.get_num("t0", 0.0),
                                        cfg.get_num("t1", 1.0), cfg.get_num("dt", 1e-3),
                                        conv);
            result.tuned = true;
            result.tuned_delta0 = delta0;
        }
        SurfaceState initial = spec.build(delta0);
        if (scale0 != 1.0) {
            if (initial.family == Family::Curve)
                for (Vec2& p : initial.pts) p = p * scale0;
            else
                for (double& ri : initial.r) ri *= scale0;
            initial.update_weights();
        }
        initial.validate();

        double lambda0 = cfg.get_num("lambda0", 0.0);
        std::string lambda0_prov = "configured";
        if (lambda0 <= 0.0) {
            lambda0 = 1.25 * measure_area_ratio(initial);
            lambda0_prov = "measured";
            cfg.set_num("lambda0", lambda0);
            result.resolved = cfg;
        }
        const FunctionalConfig fcfg = FunctionalConfig::make(
            cfg.get_num("r0", 1.0), forcing.k_bound, lambda0,
            cfg.get("cutoff") == "none" ? CutoffKind::None : CutoffKind::Bump,
            cfg.get("k1_exponent") == "paper" ? K1Variant::Paper : K1Variant::Derivation);

        TrajectoryOptions opt;
        opt.picture = picture;
        opt.t0 = cfg.get_num("t0", 0.0);
        opt.t1 = cfg.get_num("t1", 1.0);
        opt.dt = cfg.get_num("dt", 1e-3);
        opt.convention = conv;
        opt.state_stride = static_cast<int>(cfg.get_int("state_stride", 10));
        opt.graph_stride = static_cast<int>(cfg.get_int("graph_stride", 0));
        opt.cfg = fcfg;
        opt.model = spec.model;
        opt.record_graphs = spec.kind != "dumbbell";
        initial.time_stamp = opt.t0;

        result.trajectory = run_trajectory(initial, forcing, opt);
        const FlowTrajectory& traj = result.trajectory;

        // scale readouts where the two-sided window fits
        if (picture == Picture::Rescaled && opt.t1 - opt.t0 >= 2.2 && !traj.truncated) {
            result.scales.columns = {"T", "window_integral", "r_t_defined",
                                     "r_t", "r_star", "r_loc"};
            const auto tser = traj.series.column("t");
            const auto pser = traj.series.column("phi2_ball");
            for (double tc = opt.t0 + 1.0; tc <= opt.t1 - 1.0 + 1e-9; tc += 0.25) {
                const ScaleReadout sc = shrinker_scale_from_series(tser, pser, tc);
                result.scales.rows.push_back(
                    {sc.t, sc.phi_window_integral, sc.r_t_defined ? 1.0 : 0.0,
                     std::isfinite(sc.r_t) ? sc.r_t : -1.0, sc.r_star, sc.r_loc});
            }
        }

        const long seed = cfg.get_int("seed", 0);
        auto window_samples = [&](double start) {
            std::vector<double> ts;
            for (double tc = start; tc <= opt.t1 - 1.05; tc += 0.25) ts.push_back(tc);
            return ts;
        };
        for (const auto& name : check_names) {
            CheckReport rep;
            if (name == "monotonicity-compact")
                rep = check_monotonicity_compact(traj, fcfg);
            else if (name == "l2-control-compact" || name == "l2-control-localized") {
                const double span = opt.t1 - opt.t0;
                const double t1c = cfg.get_num("l2_t1", opt.t0 + 0.1 * span);
                const double t2c = cfg.get_num("l2_t2", opt.t1 - 0.1 * span);
                rep = check_l2_control(traj, fcfg, t1c, t2c, name == "l2-control-localized");
            } else if (name == "almost-monotone-J")
                rep = almost_monotone_J(
                    traj, GaussCenter{cfg.get_num("center_a", 0.0), cfg.get_num("center_b", 0.0)},
                    cfg.get_num("sigma_bar", 0.5), fcfg);
            else if (name == "mean-value") {
                const double span = opt.t1 - opt.t0;
                rep = check_mean_value(traj, opt.t0 + 0.05 * span, opt.t1 - 0.05 * span,
                                       cfg.get_num("mean_value_beta", 0.25),
                                       cfg.get_num("mean_value_radius", 2.5));
            } else if (name == "discrete-loja")
                rep = check_discrete_loja(
                    traj, spec.model, fcfg,
                    window_samples(std::max(opt.t0 + 1.25, fcfg.localized_onset() + 1.0)),
                    cfg.get_num("graph_eps", 0.5));
            else if (name == "distance-decay")
                rep = check_distance_decay(traj, spec.model);
            else if (name == "extension-phi-bound")
                rep = check_extension_phi_bound(traj, spec.model, fcfg,
                                                window_samples(opt.t0 + 1.25),
                                                cfg.get_num("ext_radius", 1.5),
                                                cfg.get_num("ext_mu", 0.25),
                                                cfg.get_num("graph_eps", 0.5));
            else if (name == "graph-persistence")
                rep = check_graph_persistence(traj, forcing);
            rep.notes.push_back("seed: " + std::to_string(seed));
            rep.notes.push_back("scenario: " + cfg.get("scenario"));
            result.reports.push_back(rep);
        }

        // manifest
        std::ostringstream mf;
        mf << "manifest_version: 1\n";
        mf << "mcflab_version: " << kVersion << "\n";
        {
            const auto now = std::chrono::system_clock::now();
            const std::time_t tt = std::chrono::system_clock::to_time_t(now);
            char buf[64];
            std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
            mf << "timestamp: " << buf << "\n";   // excluded from byte comparisons
        }
        mf << "seed: " << seed << "\n";
        for (const auto& [k, v] : cfg.kv) mf << "config." << k << ": " << v << "\n";
        mf << "forcing.k_bound: " << format_double(forcing.k_bound) << " [measured]\n";
        mf << "functional.k_psi: " << format_double(fcfg.k_psi) << " [measured]\n";
        mf << "functional.lambda0: " << format_double(lambda0) << " [" << lambda0_prov
           << "]\n";
        const int dim = initial.dim();
        mf << "functional.c_annulus_n" << dim << ": "
           << format_double(fcfg.annulus_constant(dim)) << " [formula]\n";
        mf << "functional.K1: " << format_double(fcfg.k1()) << " [formula, variant "
           << (fcfg.k1_variant == K1Variant::Derivation ? "derivation" : "paper") << "]\n";
        mf << "functional.K2: " << format_double(fcfg.k2(dim)) << " [formula]\n";
        mf << "functional.K3: " << format_double(fcfg.k3(dim)) << " [formula]\n";
        mf << "convention.g_rescaling: " << convention_name(conv) << "\n";
        mf << "tolerance.a: " << format_double(kTolA) << " [formula]\n";
        mf << "tolerance.b: " << format_double(kTolB) << " [formula]\n";
        if (result.tuned)
            mf << "tuned_delta0: " << format_double(result.tuned_delta0) << " [measured]\n";
        mf << "truncated: " << (traj.truncated ? "yes" : "no") << "\n";
        if (traj.truncated) mf << "truncation_reason: " << traj.truncation_reason << "\n";
        result.manifest_text = mf.str();

        if (!out_dir.empty()) {
            namespace fs = std::filesystem;
            fs::create_directories(out_dir);
            detail::write_table_file(fs::path(out_dir) / "series.csv", traj.series, seed);
            if (!traj.graph_samples.rows.empty())
                detail::write_table_file(fs::path(out_dir) / "graphs.csv",
                                         traj.graph_samples, seed);
            if (!result.scales.rows.empty())
                detail::write_table_file(fs::path(out_dir) / "scales.csv", result.scales,
                                         seed);
            for (const auto& rep : result.reports) {
                std::ofstream os(fs::path(out_dir) / ("report_" + rep.name + ".txt"));
                os << rep.to_text();
            }
            std::ofstream(fs::path(out_dir) / "manifest.txt") << result.manifest_text;
            std::ofstream(fs::path(out_dir) / "config.txt") << cfg.to_text();
        }

        if (!result.reports.empty()) {
            bool any_fail = false, all_vacuous = true;
            for (const auto& rep : result.reports) {
                any_fail = any_fail || rep.verdict == Verdict::Fail;
                all_vacuous = all_vacuous && rep.verdict == Verdict::Vacuous;
            }
            result.exit_code =
                any_fail ? kExitCheckFailed : (all_vacuous ? kExitAllVacuous : kExitPass);
        }
        return result;
    } catch (const std::exception& e) {
        result.exit_code = kExitConfigError;
        result.diagnostic = e.what();
        return result;
    }
}

struct SweepResult {
    int exit_code = kExitPass;
    std::string diagnostic;
    TimeSeriesTable table;
    std::vector<ScenarioResult> runs;
};

/// Run >= 2 configs that differ only in the declared keys and merge the
/// fitted constants / verdict summary into one comparison table.
inline SweepResult sweep(const std::vector<ScenarioConfig>& configs,
                         const std::vector<std::string>& varied_keys,
                         const std::string& out_dir = "") {
    SweepResult out;
    if (configs.size() < 2) {
        out.exit_code = kExitConfigError;
        out.diagnostic = "sweep needs at least 2 configs";
        return out;
    }
    std::vector<ScenarioConfig> resolved = configs;
    for (auto& c : resolved) resolve_defaults(c);
    auto is_varied = [&](const std::string& k) {
        if (k == "scenario" || k == "seed") return true;
        for (const auto& vk : varied_keys)
            if (vk == k) return true;
        return false;
    };
    for (std::size_t i = 1; i < resolved.size(); ++i) {
        for (const auto& [k, v] : resolved[0].kv)
            if (!is_varied(k) && resolved[i].get(k) != v) {
                out.exit_code = kExitConfigError;
                out.diagnostic = "configs differ in undeclared key: " + k;
                return out;
            }
    }
    std::vector<std::string> cols = varied_keys;
    bool cols_done = false;
    for (std::size_t i = 0; i < resolved.size(); ++i) {
        const std::string sub =
            out_dir.empty() ? "" : out_dir + "/run_" + std::to_string(i);
        ScenarioResult r = run_scenario(resolved[i], sub);
        if (r.exit_code == kExitConfigError) {
            out.exit_code = kExitConfigError;
            out.diagnostic = r.diagnostic;
            return out;
        }
        std::vector<double> row;
        for (const auto& vk : varied_keys) row.push_back(resolved[i].get_num(vk, 0.0));
        for (const auto& rep : r.reports) {
            if (!cols_done) cols.push_back(rep.name + ".min_slack");
            row.push_back(rep.slacks.empty() ? 0.0 : rep.min_slack());
            if (!cols_done) cols.push_back(rep.name + ".verdict");
            row.push_back(rep.verdict == Verdict::Pass      ? 1.0
                          : rep.verdict == Verdict::Vacuous ? -1.0
                                                            : 0.0);
            for (const auto& c : rep.constants) {
                if (c.provenance != "fitted" && c.provenance != "measured") continue;
                if (!cols_done) cols.push_back(rep.name + "." + c.name);
                row.push_back(c.value);
            }
        }
        if (!cols_done) {
            out.table.columns = cols;
            cols_done = true;
        }
        if (row.size() != out.table.columns.size()) {
            out.exit_code = kExitConfigError;
            out.diagnostic = "incompatible configs: check/constant sets differ across runs";
            return out;
        }
        out.table.rows.push_back(std::move(row));
        out.runs.push_back(std::move(r));
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        detail::write_table_file(std::filesystem::path(out_dir) / "sweep.csv", out.table,
                                 resolved[0].get_int("seed", 0));
    }
    for (const auto& r : out.runs)
        if (r.exit_code == kExitCheckFailed) out.exit_code = kExitCheckFailed;
    return out;
}

/// Re-validate a serialized report: verdict must be reproducible from
/// the slack table + tolerance, and every constant needs a known
/// provenance tag.
inline bool verify_report_text(const std::string& text, std::string& why) {
    CheckReport rep = CheckReport::from_text(text);
    for (const auto& c : rep.constants) {
        if (c.provenance != "formula" && c.provenance != "fitted" &&
            c.provenance != "configured" && c.provenance != "measured") {
            why = "constant '" + c.name + "' has unexplained provenance '" + c.provenance +
                  "'";
            return false;
        }
    }
    const Verdict stored = rep.verdict;
    rep.decide();
    if (rep.verdict != stored) {
        why = "stored verdict does not match slack table";
        return false;
    }
    why.clear();
    return true;
}

} // namespace mcflab
