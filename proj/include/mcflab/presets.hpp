#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mcflab/runner.hpp"
#include "mcflab/scenario.hpp"

namespace mcflab {

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {
        "circle-shrinker-static",   "cylinder-shrinker-static",
        "circle-perturbed",         "circle-perturbed-forced",
        "cylinder-perturbed",       "cylinder-perturbed-forced",
        "circle-mcff-shrinking",    "cylinder-mcff-shrinking",
        "circle-mcff-perturbed",    "cylinder-mcff-perturbed",
        "dumbbell-pinch"};
    return names;
}

/// Built-in scenario definitions.  Rescaled perturbed presets tune the
/// radius offset onto the stable manifold of the discrete flow so the
/// trajectories converge to the model over the whole span.
inline ScenarioConfig preset(const std::string& name) {
    ScenarioConfig c;
    c.set("scenario", name);
    if (name == "circle-shrinker-static") {
        c.set("geometry", "circle");
        c.set("picture", "rescaled");
        c.set("resolution", "128");
        c.set("t0", "0");
        c.set("t1", "6.5");
        c.set("dt", "0.001");
        c.set("perturb_eps", "0");
        c.set("checks",
              "monotonicity-compact,l2-control-compact,l2-control-localized");
        return c;
    }
    if (name == "cylinder-shrinker-static") {
        c.set("geometry", "cylinder");
        c.set("picture", "rescaled");
        c.set("resolution", "512");
        c.set("t0", "0");
        c.set("t1", "6.5");
        c.set("dt", "0.001");
        c.set("perturb_eps", "0");
        c.set("checks",
              "monotonicity-compact,l2-control-compact,l2-control-localized");
        return c;
    }
    if (name == "circle-perturbed" || name == "circle-perturbed-forced") {
        c.set("geometry", "circle");
        c.set("picture", "rescaled");
        c.set("resolution", "128");
        c.set("t0", "0");
        c.set("t1", "8");
        c.set("dt", "0.0005");
        c.set("perturb_eps", "0.05");
        c.set("perturb_mode", "2");
        c.set("tune_radius", "on");
        if (name == "circle-perturbed-forced") {
            c.set("forcing", "radial");
            c.set("forcing_c", "0.08");
            c.set("forcing_moll", "2");
        }
        c.set("checks",
              "monotonicity-compact,l2-control-compact,l2-control-localized,"
              "distance-decay,mean-value,graph-persistence");
        return c;
    }
    if (name == "cylinder-perturbed" || name == "cylinder-perturbed-forced") {
        c.set("geometry", "cylinder");
        c.set("picture", "rescaled");
        c.set("resolution", "512");
        c.set("t0", "0");
        c.set("t1", "9");
        c.set("dt", "0.002");
        c.set("perturb_eps", "0.02");
        c.set("q1", "1");
        c.set("q2", "1.5");
        c.set("tune_radius", "on");
        if (name == "cylinder-perturbed-forced") {
            c.set("forcing", "radial");
            c.set("forcing_c", "0.08");
            c.set("forcing_moll", "2");
        }
        c.set("checks",
              "monotonicity-compact,l2-control-compact,l2-control-localized,"
              "discrete-loja,distance-decay,extension-phi-bound,mean-value");
        return c;
    }
    if (name == "circle-mcff-shrinking" || name == "circle-mcff-perturbed") {
        c.set("geometry", "circle");
        c.set("picture", "unrescaled");
        c.set("resolution", "256");
        c.set("initial_scale", format_double(2.0 / kSqrt2));   // start at radius 2
        c.set("t0", "-2");
        c.set("t1", "-1.05");
        c.set("dt", "0.0002");
        c.set("perturb_eps", name == "circle-mcff-perturbed" ? "0.05" : "0");
        c.set("perturb_mode", "2");
        if (name == "circle-mcff-perturbed") {
            c.set("forcing", "radial");
            c.set("forcing_c", "0.08");
            c.set("forcing_moll", "2");
        }
        c.set("sigma_bar", "0.5");
        c.set("checks", "almost-monotone-J");
        return c;
    }
    if (name == "cylinder-mcff-shrinking" || name == "cylinder-mcff-perturbed") {
        c.set("geometry", "cylinder");
        c.set("picture", "unrescaled");
        c.set("resolution", "512");
        c.set("initial_scale", format_double(2.0 / kSqrt2));
        c.set("t0", "-2");
        c.set("t1", "-1.05");
        c.set("dt", "0.001");
        c.set("perturb_eps", name == "cylinder-mcff-perturbed" ? "0.05" : "0");
        c.set("q1", "1");
        c.set("q2", "1.5");
        if (name == "cylinder-mcff-perturbed") {
            c.set("forcing", "radial");
            c.set("forcing_c", "0.08");
            c.set("forcing_moll", "2");
        }
        c.set("sigma_bar", "0.5");
        c.set("checks", "almost-monotone-J");
        return c;
    }
    if (name == "dumbbell-pinch") {
        c.set("geometry", "dumbbell");
        c.set("picture", "unrescaled");
        c.set("resolution", "512");
        c.set("t0", "0");
        c.set("t1", "0.5");
        c.set("dt", "0.001");
        c.set("checks", "");
        return c;
    }
    throw std::invalid_argument("unknown preset: " + name);
}

} // namespace mcflab
