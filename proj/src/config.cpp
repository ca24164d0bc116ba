#include "amlrisk/config.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "amlrisk/digest.hpp"
#include "json_util.hpp"

namespace amlrisk {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 5> kKeys{"epsilon", "impact_mode", "normalization_degenerate_value",
                                                "downgrade.levels", "downgrade.weights"};

double parse_double(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::invalid_argument, key + ": not a number '" + text + "'", key);
    }
    return v;
}

json weights_json(const std::string& text) {
    // Accept a JSON array or a comma separated list.
    json j = json::parse(text, nullptr, false);
    if (!j.is_discarded() && j.is_array()) return j;
    json out = json::array();
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) out.push_back(parse_double("downgrade.weights", part));
    return out;
}

}  // namespace

std::string_view to_string(ImpactMode m) { return m == ImpactMode::noisy_or ? "noisy-or" : "literal-product"; }

ImpactMode parse_impact_mode(std::string_view text) {
    if (text == "noisy-or") return ImpactMode::noisy_or;
    if (text == "literal-product") return ImpactMode::literal_product;
    throw Error(ErrorCode::invalid_argument, "impact_mode must be noisy-or or literal-product", "impact_mode");
}

void EngineConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw Error(ErrorCode::invalid_argument, "epsilon must be positive", "epsilon");
    }
    if (!(normalization_degenerate_value >= 0.0 && normalization_degenerate_value <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "normalization_degenerate_value must lie in [0,1]",
                    "normalization_degenerate_value");
    }
    downgrade.validate();
}

json EngineConfig::to_json() const {
    return {{"epsilon", epsilon},
            {"impact_mode", to_string(impact_mode)},
            {"normalization_degenerate_value", normalization_degenerate_value},
            {"score_cap", kScoreCap},
            {"downgrade", downgrade.to_json()}};
}

std::string EngineConfig::digest() const { return content_id("cfg-", to_json().dump()); }

void apply_overrides(EngineConfig& config, const ConfigOverrides& overrides) {
    json levels = config.downgrade.to_json()["levels"];
    json weights = config.downgrade.to_json()["weights"];
    bool downgrade_changed = false;
    for (const auto& [key, value] : overrides) {
        if (key == "epsilon") {
            config.epsilon = parse_double(key, value);
        } else if (key == "impact_mode") {
            config.impact_mode = parse_impact_mode(value);
        } else if (key == "normalization_degenerate_value") {
            config.normalization_degenerate_value = parse_double(key, value);
        } else if (key == "downgrade.levels") {
            levels = json::parse(value, nullptr, false);
            if (levels.is_discarded()) {
                throw Error(ErrorCode::invalid_argument, "downgrade.levels must be a JSON array", key);
            }
            downgrade_changed = true;
        } else if (key == "downgrade.weights") {
            weights = weights_json(value);
            downgrade_changed = true;
        } else {
            throw Error(ErrorCode::invalid_argument, "unknown config key '" + key + "'", key);
        }
    }
    if (downgrade_changed) config.downgrade = downgrade_from_json(levels, weights);
    config.validate();
}

EngineConfig config_from_json(const json& doc) {
    detail::check_keys(doc, "config", {}, {"epsilon", "impact_mode", "normalization_degenerate_value", "score_cap", "downgrade"});
    EngineConfig c;
    // The cap is fixed; it is echoed in serialized configs but cannot be changed.
    if (doc.contains("score_cap") && detail::get_number(doc, "score_cap", "config") != EngineConfig::kScoreCap) {
        throw Error(ErrorCode::invalid_argument, "score_cap is fixed at 10", "score_cap");
    }
    if (doc.contains("epsilon")) c.epsilon = detail::get_number(doc, "epsilon", "config");
    if (doc.contains("impact_mode")) c.impact_mode = parse_impact_mode(detail::get_string(doc, "impact_mode", "config"));
    if (doc.contains("normalization_degenerate_value")) {
        c.normalization_degenerate_value = detail::get_number(doc, "normalization_degenerate_value", "config");
    }
    if (doc.contains("downgrade")) {
        const json& d = doc.at("downgrade");
        detail::check_keys(d, "downgrade", {}, {"levels", "weights"});
        json base = c.downgrade.to_json();
        c.downgrade = downgrade_from_json(d.value("levels", base["levels"]), d.value("weights", base["weights"]));
    }
    c.validate();
    return c;
}

EngineConfig load_config_file(const std::string& path) {
    return config_from_json(detail::parse_text(detail::read_file(path), path));
}

ConfigOverrides env_overrides(const EnvLookup& env) {
    ConfigOverrides out;
    for (auto key : kKeys) {
        std::string name(key);
        for (auto& ch : name) ch = ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (auto v = env(name)) out[std::string(key)] = *v;
    }
    return out;
}

EngineConfig resolve_config(const std::optional<std::string>& file, const EnvLookup& env,
                            const ConfigOverrides& flags) {
    EngineConfig c = file ? load_config_file(*file) : EngineConfig{};
    apply_overrides(c, env_overrides(env));
    apply_overrides(c, flags);
    return c;
}

}  // namespace amlrisk
