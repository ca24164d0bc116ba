#include "amlrisk/engine.hpp"

#include <algorithm>
#include <cmath>

#include "amlrisk/report.hpp"

namespace amlrisk {

const ScoreBreakdown* RiskAssessment::find(const AttackId& id) const {
    for (const auto& b : breakdowns) {
        if (b.attack_id == id) return &b;
    }
    return nullptr;
}

namespace {

double factor_score(const SystemProfile& p, const FactorId& f) {
    auto it = p.factor_scores.find(f);
    if (it == p.factor_scores.end()) {
        throw Error(ErrorCode::missing_score, "profile has no score for factor " + f.str(), f.str());
    }
    return it->second;
}

const FeasibilityFactor& trigger_of(const Catalog& c, ExecutionMode mode) {
    const FeasibilityFactor* t = c.trigger_factor(mode);
    if (!t) {
        throw Error(ErrorCode::invalid_catalog,
                    "catalog has no unique " + std::string(to_string(mode)) + " trigger factor", "factors");
    }
    return *t;
}

}  // namespace

double feasibility_generic(const Catalog& c, const AttackDefinition& a, const SystemProfile& p) {
    const FactorId& digital = trigger_of(c, ExecutionMode::digital).id;
    const FactorId& physical = trigger_of(c, ExecutionMode::physical).id;
    double product = 1.0;
    for (const auto& f : a.required_factors) {
        if (f == digital || f == physical) continue;
        product *= factor_score(p, f);
    }
    return product;
}

double feasibility_mode(const Catalog& c, const SystemProfile& p, ExecutionMode mode, double f_generic) {
    return f_generic * factor_score(p, trigger_of(c, mode).id);
}

std::map<AttackId, double> normalize_feasibility(const std::map<AttackId, double>& values, double epsilon,
                                                 double degenerate) {
    std::map<AttackId, double> out;
    if (values.empty()) return out;
    std::map<AttackId, double> logs;
    double lo = INFINITY;
    double hi = -INFINITY;
    for (const auto& [id, f] : values) {
        double v = std::log(f + epsilon);
        logs[id] = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    bool flat = hi - lo < 1e-12;
    for (const auto& [id, v] : logs) {
        if (values.at(id) == 0.0) {
            out[id] = 0.0;
        } else if (flat) {
            out[id] = degenerate;
        } else {
            out[id] = (v - lo) / (hi - lo);
        }
    }
    return out;
}

double impact_score(const AttackDefinition& a, const SystemProfile& p, ImpactMode mode) {
    double keep = 1.0;
    for (const auto& i : a.compromised_impacts) {
        auto it = p.impact_scores.find(i);
        if (it == p.impact_scores.end()) {
            throw Error(ErrorCode::missing_score, "profile has no score for impact " + i.str(), i.str());
        }
        keep *= 1.0 - it->second;
    }
    return mode == ImpactMode::noisy_or ? 1.0 - keep : keep;
}

double combine_likelihood(std::array<ModeBreakdown, 2>& modes) {
    double keep = 1.0;
    for (auto& m : modes) {
        m.l = m.supported ? m.norm_f * m.sr : 0.0;
        keep *= 1.0 - m.l;
    }
    return 1.0 - keep;
}

double final_score(double l_overall, double impact) {
    return std::min(l_overall * impact * EngineConfig::kScoreCap, EngineConfig::kScoreCap);
}

std::optional<std::string> apply_zeroing(const AttackDefinition& a, const SystemProfile& p,
                                         const std::vector<ZeroingRule>& rules) {
    for (const auto& r : rules) {
        if (r.applies_to.matches(a) && r.condition.evaluate(p.categorical_answers)) return r.rule_id;
    }
    return std::nullopt;
}

RiskAssessment assess(const Catalog& catalog, const SystemProfile& profile, const RecordStore& store,
                      const EngineConfig& config, const AssessOptions& options) {
    ValidationReport report = validate_catalog(catalog);
    if (!report.ok()) {
        const Finding& f = report.findings.front();
        throw Error(ErrorCode::invalid_catalog, "invalid catalog: " + f.message, f.subject);
    }
    config.validate();

    std::vector<ScoreBreakdown> rows;
    rows.reserve(catalog.attacks.size());
    std::array<std::map<AttackId, double>, 2> cohort;

    // Feasibility.
    for (const auto& a : catalog.attacks) {
        ScoreBreakdown b;
        b.attack_id = a.id;
        b.attack_name = a.name;
        b.objective = a.objective;
        b.retraining_mitigated = a.retraining_mitigated;
        b.f_generic = feasibility_generic(catalog, a, profile);
        for (auto mode : kModes) {
            if (!a.supports(mode)) continue;
            ModeBreakdown& m = b.mode(mode);
            m.supported = true;
            m.f_em = feasibility_mode(catalog, profile, mode, b.f_generic);
            cohort[static_cast<std::size_t>(mode)][a.id] = m.f_em;
        }
        rows.push_back(std::move(b));
    }

    // Normalization is a barrier over each mode's cohort.
    std::array<std::map<AttackId, double>, 2> norm;
    for (auto mode : kModes) {
        auto i = static_cast<std::size_t>(mode);
        norm[i] = normalize_feasibility(cohort[i], config.epsilon, config.normalization_degenerate_value);
    }

    for (std::size_t k = 0; k < rows.size(); ++k) {
        const AttackDefinition& a = catalog.attacks[k];
        ScoreBreakdown& b = rows[k];
        for (auto mode : kModes) {
            ModeBreakdown& m = b.mode(mode);
            if (!m.supported) continue;
            m.norm_f = norm[static_cast<std::size_t>(mode)].at(a.id);
            m.batches = match_records(store, a, profile, mode, config.downgrade);
            SuccessEstimate est = estimate_success_rate(store, m.batches, config.downgrade, mode);
            m.sr = est.rate;
            m.sr_fallback = est.fallback;
            if (est.fallback) {
                b.warnings.push_back(std::string(to_string(mode)) +
                                     " success rate is a fallback: no matching records");
            }
        }
        b.l_overall = combine_likelihood(b.modes);
        b.impact = impact_score(a, profile, config.impact_mode);
        b.raw_score = final_score(b.l_overall, b.impact);
        b.zeroed_by = apply_zeroing(a, profile, catalog.zeroing_rules);
        b.score = b.zeroed_by ? 0.0 : b.raw_score;
    }

    RiskAssessment out;
    out.created_at = options.created_at;
    out.profile_id = profile.profile_id;
    out.catalog_version = catalog.version;
    out.snapshot_id = store.snapshot_id();
    out.config_digest = config.digest();
    out.ranking = rank(rows);
    out.breakdowns = std::move(rows);
    out.assessment_id = assessment_digest(out);
    return out;
}

RiskAssessment reassess_with_countermeasure(const RiskAssessment& assessment, const CountermeasureProfile& cm) {
    for (const auto& [id, rate] : cm.rates) {
        const ScoreBreakdown* b = assessment.find(id);
        if (!b) throw Error(ErrorCode::unknown_attack, "unknown attack: " + id.str(), id.str());
        if (!b->retraining_mitigated) {
            throw Error(ErrorCode::not_mitigated,
                        "attack " + id.str() + " is not mitigated by " + cm.name + "; no rate may be supplied",
                        id.str());
        }
        if (!(rate >= 0.0 && rate <= 1.0)) {
            throw Error(ErrorCode::invalid_argument, "retrain rate for " + id.str() + " must lie in [0,1]", id.str());
        }
    }
    RiskAssessment out = assessment;
    for (auto& b : out.breakdowns) {
        auto it = cm.rates.find(b.attack_id);
        if (it == cm.rates.end()) continue;
        b.countermeasure = AppliedCountermeasure{cm.name, it->second, b.score};
        b.score = b.score * it->second;
    }
    out.ranking = rank(out.breakdowns);
    out.assessment_id = assessment_digest(out);
    return out;
}

CountermeasureProfile uniform_retraining(const RiskAssessment& assessment, double rate) {
    CountermeasureProfile cm;
    cm.note = "uniform retrain success rate";
    for (const auto& b : assessment.breakdowns) {
        if (b.retraining_mitigated) cm.rates[b.attack_id] = rate;
    }
    return cm;
}

}  // namespace amlrisk
