#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "amlrisk/gateway.hpp"
#include "amlrisk/knowledge.hpp"

namespace amlrisk {

enum class ImpactMode { noisy_or, literal_product };

std::string_view to_string(ImpactMode m);
ImpactMode parse_impact_mode(std::string_view text);

struct EngineConfig {
    double epsilon = 1e-6;
    ImpactMode impact_mode = ImpactMode::noisy_or;
    double normalization_degenerate_value = 1.0;
    DowngradePolicy downgrade = DowngradePolicy::standard();

    static constexpr double kScoreCap = 10.0;

    /// Throws Error(invalid_argument) naming the offending key.
    void validate() const;
    nlohmann::json to_json() const;
    /// Content digest over the canonical JSON form.
    std::string digest() const;
};

/// Raw overrides as strings, keyed by config key (epsilon, impact_mode,
/// normalization_degenerate_value, downgrade.levels, downgrade.weights).
using ConfigOverrides = std::map<std::string, std::string>;

/// Applies one layer of overrides onto `base`.
void apply_overrides(EngineConfig& config, const ConfigOverrides& overrides);

EngineConfig config_from_json(const nlohmann::json& doc);
EngineConfig load_config_file(const std::string& path);

/// Env override names: key upper-cased with '.' replaced by '_'.
ConfigOverrides env_overrides(const EnvLookup& env);

/// Precedence: flags > env > file > defaults.
EngineConfig resolve_config(const std::optional<std::string>& file, const EnvLookup& env,
                            const ConfigOverrides& flags);

}  // namespace amlrisk
