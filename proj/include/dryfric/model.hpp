#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace dryfric {

inline double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

// Canonical SDE: dv = -c [alpha v - a + delta sgn(v)] dt + sqrt(D) dB,
// with c = drift_scale in {1/2, 1}. Every formula elsewhere is written
// against this one form; convention mapping happens here only.
struct ModelParams {
    double alpha = 1.0;
    double a = 0.0;
    double delta = 1.0;
    double diffusion = 1.0;
    double drift_scale = 0.5;

    void check() const {
        if (!std::isfinite(alpha) || !std::isfinite(a) || !std::isfinite(delta) ||
            !std::isfinite(diffusion))
            throw std::invalid_argument("model: non-finite parameter");
        // delta = 0 and diffusion = 0 are allowed as simulation limits
        // (frictionless / deterministic); reduce() below insists on > 0
        if (!(delta >= 0)) throw std::invalid_argument("model: delta must be >= 0");
        if (!(alpha >= 0)) throw std::invalid_argument("model: alpha must be >= 0");
        if (!(diffusion >= 0)) throw std::invalid_argument("model: diffusion must be >= 0");
        if (drift_scale != 0.5 && drift_scale != 1.0)
            throw std::invalid_argument("model: drift_scale must be 1/2 or 1");
    }

    bool operator==(const ModelParams&) const = default;
};

// nu is the noise scale entering exp(-U/nu); it absorbs drift_scale, so the
// same (nu, tau, y) always feeds the same stationary formula. tau and y are
// undefined without viscosity.
struct ReducedParams {
    double nu = 1.0;
    std::optional<double> tau;
    std::optional<double> y;
    double w = 0.0;

    void check() const {
        if (!(nu > 0)) throw std::invalid_argument("reduced: nu must be > 0");
        if (tau && !(*tau > 0)) throw std::invalid_argument("reduced: tau must be > 0");
        if (!std::isfinite(w)) throw std::invalid_argument("reduced: w must be finite");
    }
};

enum class Regime { Stuck, PartlyStuck, Viscous };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::Stuck: return "stuck";
        case Regime::PartlyStuck: return "partly_stuck";
        case Regime::Viscous: return "viscous";
    }
    return "?";
}

inline ReducedParams reduce(const ModelParams& p) {
    p.check();
    if (!(p.delta > 0)) throw std::invalid_argument("reduce: delta must be > 0");
    if (!(p.diffusion > 0))
        throw std::invalid_argument("reduce: diffusion must be > 0");
    ReducedParams r;
    r.nu = p.diffusion / (2.0 * p.drift_scale * p.delta);
    r.w = p.a / p.delta;
    if (p.alpha > 0) {
        r.tau = p.delta / p.alpha;
        r.y = p.a / p.alpha;
    }
    return r;
}

// inverse of reduce up to the overall scale freedom; delta anchors it
inline ModelParams reconstruct(const ReducedParams& r, double delta,
                               double drift_scale) {
    r.check();
    if (!r.tau) throw std::invalid_argument("reconstruct: tau required");
    ModelParams p;
    p.delta = delta;
    p.alpha = delta / *r.tau;
    p.a = r.w * delta;
    p.diffusion = r.nu * 2.0 * drift_scale * delta;
    p.drift_scale = drift_scale;
    p.check();
    return p;
}

// |a| vs delta with relative tolerance 1e-12 on the equality branch
inline Regime classify_regime(const ModelParams& p) {
    p.check();
    if (!(p.delta > 0))
        throw std::invalid_argument("classify_regime: delta must be > 0");
    const double ratio = std::fabs(p.a) / p.delta;
    if (std::fabs(ratio - 1.0) <= 1e-12) return Regime::PartlyStuck;
    return ratio < 1.0 ? Regime::Stuck : Regime::Viscous;
}

struct ScaledQuery {
    ModelParams params;  // diffusion == 1
    double time = 0.0;
};

// Law(v^{alpha,a,delta,D}(t)) = Law(v^{alpha/D, a/D, delta/D, 1}(D t)),
// valid for the drift_scale = 1 convention only.
inline ScaledQuery scale_to_unit_diffusion(const ModelParams& p, double t) {
    p.check();
    if (p.drift_scale != 1.0)
        throw std::invalid_argument(
            "scale_to_unit_diffusion: drift_scale must be 1 (fold the 1/2 into "
            "alpha, a, delta first)");
    if (!(p.diffusion > 0))
        throw std::invalid_argument("scale_to_unit_diffusion: diffusion must be > 0");
    if (!(t >= 0)) throw std::invalid_argument("scale_to_unit_diffusion: t must be >= 0");
    ScaledQuery q;
    q.params = {p.alpha / p.diffusion, p.a / p.diffusion, p.delta / p.diffusion, 1.0, 1.0};
    q.time = p.diffusion * t;
    return q;
}

inline void to_json(nlohmann::json& j, const ModelParams& p) {
    j = {{"alpha", p.alpha},
         {"a", p.a},
         {"delta", p.delta},
         {"diffusion", p.diffusion},
         {"drift_scale", p.drift_scale}};
}

inline void from_json(const nlohmann::json& j, ModelParams& p) {
    j.at("alpha").get_to(p.alpha);
    j.at("a").get_to(p.a);
    j.at("delta").get_to(p.delta);
    j.at("diffusion").get_to(p.diffusion);
    j.at("drift_scale").get_to(p.drift_scale);
    p.check();
}

inline void to_json(nlohmann::json& j, const ReducedParams& r) {
    j = {{"nu", r.nu},
         {"tau", r.tau ? nlohmann::json(*r.tau) : nlohmann::json()},
         {"y", r.y ? nlohmann::json(*r.y) : nlohmann::json()},
         {"w", r.w}};
}

inline void from_json(const nlohmann::json& j, ReducedParams& r) {
    j.at("nu").get_to(r.nu);
    r.tau.reset();
    r.y.reset();
    if (j.contains("tau") && !j["tau"].is_null()) r.tau = j["tau"].get<double>();
    if (j.contains("y") && !j["y"].is_null()) r.y = j["y"].get<double>();
    j.at("w").get_to(r.w);
    r.check();
}

}
