#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "amlrisk/engine.hpp"
#include "amlrisk/report.hpp"
#include "fixtures.hpp"
#include "straight_line.hpp"

using namespace amlrisk;
using testing_support::fixture_catalog;
using testing_support::fixture_profile;
using testing_support::fixture_questionnaire;
using testing_support::fixture_responses;
using testing_support::fixture_store;

namespace {

Catalog tiny_catalog() {
    Catalog c;
    c.version = "1.0.0";
    c.factors = {{FactorId("G1"), "g1", "Q1", AnswerKind::ordinal_difficulty, ModeRole::none},
                 {FactorId("G2"), "g2", "Q2", AnswerKind::ordinal_difficulty, ModeRole::none},
                 {FactorId("TD"), "td", "Q3", AnswerKind::ordinal_difficulty, ModeRole::digital_trigger},
                 {FactorId("TP"), "tp", "Q4", AnswerKind::ordinal_difficulty, ModeRole::physical_trigger}};
    c.impacts = {{ImpactId("I1"), Objective::integrity, "i1", "Q5"},
                 {ImpactId("I2"), Objective::privacy, "i2", "Q6"},
                 {ImpactId("I3"), Objective::availability, "i3", "Q7"}};
    AttackDefinition a;
    a.id = AttackId("A");
    a.execution_modes = {ExecutionMode::digital};
    a.required_factors = {FactorId("G1"), FactorId("G2"), FactorId("TD")};
    a.compromised_impacts = {ImpactId("I1"), ImpactId("I2")};
    c.attacks.push_back(a);
    return c;
}

SystemProfile tiny_profile(double g1, double g2, double td = 1.0, double tp = 1.0) {
    SystemProfile p;
    p.factor_scores = {{FactorId("G1"), g1}, {FactorId("G2"), g2}, {FactorId("TD"), td}, {FactorId("TP"), tp}};
    p.impact_scores = {{ImpactId("I1"), 0.5}, {ImpactId("I2"), 0.5}, {ImpactId("I3"), 0.75}};
    return p;
}

SystemProfile profile_with(std::map<std::string, std::string> changes) {
    auto doc = fixture_responses();
    for (const auto& [q, v] : changes) doc.responses[q] = v;
    return build_profile(fixture_questionnaire(), doc);
}

const ScoreBreakdown& row(const RiskAssessment& a, const std::string& id) {
    const ScoreBreakdown* b = a.find(AttackId(id));
    if (!b) throw std::runtime_error("no row " + id);
    return *b;
}

RiskAssessment single_score(double score, bool mitigated = true) {
    RiskAssessment a;
    ScoreBreakdown b;
    b.attack_id = AttackId("A");
    b.retraining_mitigated = mitigated;
    b.raw_score = score;
    b.score = score;
    a.breakdowns = {b};
    a.ranking = {b.attack_id};
    return a;
}

}  // namespace

TEST(FeasibilityGeneric, Products) {
    Catalog c = tiny_catalog();
    const auto& a = c.attacks[0];
    EXPECT_DOUBLE_EQ(feasibility_generic(c, a, tiny_profile(1.0, 1.0)), 1.0);
    EXPECT_DOUBLE_EQ(feasibility_generic(c, a, tiny_profile(0.0, 0.9)), 0.0);
    EXPECT_DOUBLE_EQ(feasibility_generic(c, a, tiny_profile(0.5, 0.75)), 0.375);
}

TEST(FeasibilityGeneric, TriggersExcluded) {
    Catalog c = tiny_catalog();
    EXPECT_DOUBLE_EQ(feasibility_generic(c, c.attacks[0], tiny_profile(1.0, 1.0, 0.1)), 1.0);
}

TEST(FeasibilityGeneric, MissingScore) {
    Catalog c = tiny_catalog();
    SystemProfile p = tiny_profile(1.0, 1.0);
    p.factor_scores.erase(FactorId("G2"));
    try {
        feasibility_generic(c, c.attacks[0], p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::missing_score);
        EXPECT_EQ(e.subject(), "G2");
    }
}

TEST(FeasibilityMode, TriggerProduct) {
    Catalog c = tiny_catalog();
    EXPECT_DOUBLE_EQ(feasibility_mode(c, tiny_profile(1, 1, 0.75), ExecutionMode::digital, 0.4), 0.4 * 0.75);
    EXPECT_DOUBLE_EQ(feasibility_mode(c, tiny_profile(1, 1, 1, 0.0), ExecutionMode::physical, 0.4), 0.0);
    EXPECT_DOUBLE_EQ(feasibility_mode(c, tiny_profile(1, 1, 1.0), ExecutionMode::digital, 0.4), 0.4);
}

TEST(Normalize, Extremes) {
    auto n = normalize_feasibility({{AttackId("a"), 0.9}, {AttackId("b"), 0.1}, {AttackId("c"), 0.5}}, 1e-6, 1.0);
    EXPECT_DOUBLE_EQ(n.at(AttackId("a")), 1.0);
    EXPECT_DOUBLE_EQ(n.at(AttackId("b")), 0.0);
    double eps = 1e-6;
    double want = (std::log(0.5 + eps) - std::log(0.1 + eps)) / (std::log(0.9 + eps) - std::log(0.1 + eps));
    EXPECT_NEAR(n.at(AttackId("c")), want, 1e-15);
    EXPECT_NEAR(n.at(AttackId("c")), 0.7325, 5e-5);
}

TEST(Normalize, DegenerateCohort) {
    auto n = normalize_feasibility({{AttackId("a"), 0.3}, {AttackId("b"), 0.3}}, 1e-6, 1.0);
    EXPECT_DOUBLE_EQ(n.at(AttackId("a")), 1.0);
    EXPECT_DOUBLE_EQ(n.at(AttackId("b")), 1.0);
    auto half = normalize_feasibility({{AttackId("a"), 0.3}}, 1e-6, 0.5);
    EXPECT_DOUBLE_EQ(half.at(AttackId("a")), 0.5);
}

TEST(Normalize, ZeroStaysZeroInFlatCohort) {
    auto n = normalize_feasibility({{AttackId("a"), 0.0}, {AttackId("b"), 0.0}}, 1e-6, 1.0);
    EXPECT_DOUBLE_EQ(n.at(AttackId("a")), 0.0);
    EXPECT_DOUBLE_EQ(n.at(AttackId("b")), 0.0);
}

TEST(Impact, NoisyOrAndLiteral) {
    AttackDefinition a;
    a.compromised_impacts = {ImpactId("I3")};
    SystemProfile p = tiny_profile(1, 1);
    EXPECT_DOUBLE_EQ(impact_score(a, p, ImpactMode::noisy_or), 0.75);
    a.compromised_impacts = {ImpactId("I1"), ImpactId("I2")};
    EXPECT_DOUBLE_EQ(impact_score(a, p, ImpactMode::noisy_or), 0.75);
    EXPECT_DOUBLE_EQ(impact_score(a, p, ImpactMode::literal_product), 0.25);
}

TEST(Likelihood, Combination) {
    std::array<ModeBreakdown, 2> m{};
    m[0] = {true, 0, 1.0, 0.5, false, 0, {}};
    EXPECT_DOUBLE_EQ(combine_likelihood(m), 0.5);
    EXPECT_DOUBLE_EQ(m[1].l, 0.0);
    m[1] = {true, 0, 1.0, 0.5, false, 0, {}};
    EXPECT_DOUBLE_EQ(combine_likelihood(m), 0.75);
    m[0].sr = m[1].sr = 1.0;
    EXPECT_DOUBLE_EQ(combine_likelihood(m), 1.0);
}

TEST(Likelihood, UnsupportedModeContributesZero) {
    std::array<ModeBreakdown, 2> m{};
    m[0] = {true, 0, 0.5, 0.8, false, 0, {}};
    m[1] = {false, 0, 1.0, 1.0, false, 0, {}};
    EXPECT_DOUBLE_EQ(combine_likelihood(m), 0.4);
    EXPECT_DOUBLE_EQ(m[1].l, 0.0);
}

TEST(FinalScore, Examples) {
    EXPECT_DOUBLE_EQ(final_score(0.3, 0.5), 1.5);
    EXPECT_DOUBLE_EQ(final_score(1.0, 1.0), 10.0);
    EXPECT_DOUBLE_EQ(final_score(0.0, 0.9), 0.0);
}

TEST(Zeroing, WhiteBoxWithTaskKnowledgeAndNoFeedback) {
    SystemProfile p = profile_with({{"Q27", "Task"}, {"Q19", "No feedback"}, {"Q24", "No feedback"}});
    const auto& a = fixture_catalog().attack(AttackId("WB-Evasion"));
    EXPECT_EQ(apply_zeroing(a, p, fixture_catalog().zeroing_rules), "white-box-knowledge-required");
    RiskAssessment r = assess(fixture_catalog(), p, fixture_store(), {});
    EXPECT_EQ(row(r, "WB-Evasion").score, 0.0);
    EXPECT_GT(row(r, "WB-Evasion").raw_score, 0.0);
}

TEST(Zeroing, ScoreBasedPoisoningWithDecisionFeedback) {
    SystemProfile p = profile_with({{"Q19", "No feedback"}, {"Q24", "Decision-based"}});
    RiskAssessment r = assess(fixture_catalog(), p, fixture_store(), {});
    const auto& b = row(r, "BB-Interactive-Score-Targeted-Model-Poisoning");
    EXPECT_EQ(b.zeroed_by, "score-feedback-required");
    EXPECT_EQ(b.score, 0.0);
}

TEST(Zeroing, FullAccessKeepsWhiteBox) {
    SystemProfile p = profile_with({{"Q27", "Task"}, {"Q24", "Full access to the model's flow"}});
    RiskAssessment r = assess(fixture_catalog(), p, fixture_store(), {});
    const auto& b = row(r, "WB-Evasion");
    EXPECT_FALSE(b.zeroed_by.has_value());
    EXPECT_GT(b.score, 0.0);
}

TEST(Zeroing, FirstMatchingRuleWins) {
    Catalog c = fixture_catalog();
    SystemProfile p = profile_with({{"Q27", "Task"}, {"Q19", "No feedback"}, {"Q24", "No feedback"}});
    std::reverse(c.zeroing_rules.begin(), c.zeroing_rules.end());
    auto rules = c.zeroing_rules;
    rules.insert(rules.begin(), {"always", AttackSelector::parse({{"threat_model", {"white-box"}}}),
                                 Condition::parse({{"all", nlohmann::json::array()}}), "zero"});
    EXPECT_EQ(apply_zeroing(c.attack(AttackId("WB-Evasion")), p, rules), "always");
}

TEST(Assess, FixtureTopFive) {
    RiskAssessment r = testing_support::fixture_assessment();
    ASSERT_GE(r.ranking.size(), 5u);
    std::vector<std::string> want = {"5.984", "5.593", "2.849", "2.737", "2.682"};
    for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(format_score(r.find(r.ranking[k])->score), want[k]);
    EXPECT_EQ(r.ranking[0], AttackId("BB-Interactive-Decision-Evasion"));
    EXPECT_EQ(r.breakdowns.size(), 30u);
}

TEST(Assess, PhysicalTriggerZeroKillsPhysicalOnlyAttacks) {
    SystemProfile p = profile_with({{"Q23", "Not Possible"}, {"Q22", "Easy"}});
    RiskAssessment r = assess(fixture_catalog(), p, fixture_store(), {});
    for (const auto& a : fixture_catalog().attacks) {
        if (a.execution_modes == std::vector<ExecutionMode>{ExecutionMode::physical}) {
            EXPECT_EQ(row(r, a.id.str()).score, 0.0) << a.id.str();
        }
    }
}

TEST(Assess, ImpactModeOnlyTouchesImpactAndScore) {
    EngineConfig lit;
    lit.impact_mode = ImpactMode::literal_product;
    RiskAssessment a = testing_support::fixture_assessment();
    RiskAssessment b = testing_support::fixture_assessment(lit);
    for (std::size_t k = 0; k < a.breakdowns.size(); ++k) {
        ScoreBreakdown x = a.breakdowns[k], y = b.breakdowns[k];
        x.impact = y.impact = 0;
        x.raw_score = y.raw_score = 0;
        x.score = y.score = 0;
        EXPECT_EQ(x, y) << x.attack_id.str();
    }
}

TEST(Assess, Deterministic) {
    EXPECT_EQ(testing_support::fixture_assessment(), testing_support::fixture_assessment());
}

TEST(Assess, AttackOrderDoesNotMatter) {
    Catalog c = fixture_catalog();
    std::mt19937_64 rng(11);
    std::shuffle(c.attacks.begin(), c.attacks.end(), rng);
    RiskAssessment a = testing_support::fixture_assessment();
    RiskAssessment b = assess(c, fixture_profile(), fixture_store(), {}, {testing_support::kFixedTimestamp});
    EXPECT_EQ(a.ranking, b.ranking);
    for (const auto& x : a.breakdowns) EXPECT_EQ(x, *b.find(x.attack_id));
}

TEST(Assess, FallbackFlaggedWithWarning) {
    RiskAssessment r = assess(fixture_catalog(), fixture_profile(), RecordStore{}, {});
    for (const auto& b : r.breakdowns) {
        for (auto m : kModes) {
            if (!b.mode(m).supported) continue;
            EXPECT_TRUE(b.mode(m).sr_fallback);
            EXPECT_DOUBLE_EQ(b.mode(m).sr, 0.5);
        }
        EXPECT_FALSE(b.warnings.empty());
    }
}

TEST(Assess, InvalidCatalogRefused) {
    Catalog c = fixture_catalog();
    c.factors[0].execution_mode_role = ModeRole::digital_trigger;
    try {
        assess(c, fixture_profile(), fixture_store(), {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_catalog);
    }
}

TEST(Assess, ZeroRequiredFactorForcesZero) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        auto inst = testing_support::random_instance(rng);
        const auto& a = inst.catalog.attacks[0];
        auto generic = std::find_if(a.required_factors.begin(), a.required_factors.end(),
                                    [](const FactorId& f) { return f.str()[0] == 'G'; });
        if (generic == a.required_factors.end()) {
            if (a.execution_modes.size() != 1) continue;
            generic = a.required_factors.begin();
        }
        inst.profile.factor_scores[*generic] = 0.0;
        RiskAssessment r = assess(inst.catalog, inst.profile, inst.store, inst.config);
        EXPECT_EQ(r.find(a.id)->score, 0.0);
    }
}

TEST(Assess, MatchesReferenceScorer) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        auto inst = testing_support::random_instance(rng);
        RiskAssessment r = assess(inst.catalog, inst.profile, inst.store, inst.config);
        auto ref = testing_support::reference_scores(inst);
        for (const auto& b : r.breakdowns) {
            const auto& w = ref.at(b.attack_id.str());
            EXPECT_NEAR(b.f_generic, w.f_generic, 1e-9);
            EXPECT_NEAR(b.l_overall, w.l_overall, 1e-9);
            EXPECT_NEAR(b.impact, w.impact, 1e-9);
            EXPECT_NEAR(b.score, w.score, 1e-9);
            EXPECT_EQ(b.zeroed_by, w.zeroed_by);
        }
    }
}

TEST(Countermeasure, WorkedExample) {
    RiskAssessment r = reassess_with_countermeasure(single_score(6.0), uniform_retraining(single_score(6.0), 0.3));
    EXPECT_DOUBLE_EQ(r.breakdowns[0].score, 1.8);
    ASSERT_TRUE(r.breakdowns[0].countermeasure);
    EXPECT_DOUBLE_EQ(r.breakdowns[0].countermeasure->score_before, 6.0);
    EXPECT_EQ(format_score(r.breakdowns[0].score), "1.800");
}

TEST(Countermeasure, FixtureTopTwo) {
    RiskAssessment base = testing_support::fixture_assessment();
    RiskAssessment after = reassess_with_countermeasure(base, uniform_retraining(base, 0.3));
    const auto& first = *after.find(AttackId("BB-Interactive-Decision-Evasion"));
    const auto& second = *after.find(AttackId("BB-Transferable-Evasion-Surrogate"));
    EXPECT_EQ(format_score(first.score), "1.795");
    EXPECT_EQ(format_score(second.score), "1.678");
    EXPECT_NEAR(first.score, 1.795, 5e-4);
    EXPECT_NEAR(second.score, 1.678, 5e-4);
    for (const auto& b : after.breakdowns) {
        if (b.objective != Objective::integrity) EXPECT_EQ(b.score, base.find(b.attack_id)->score);
    }
    EXPECT_NE(after.assessment_id, base.assessment_id);
}

TEST(Countermeasure, RateOneIsIdentity) {
    RiskAssessment base = testing_support::fixture_assessment();
    RiskAssessment after = reassess_with_countermeasure(base, uniform_retraining(base, 1.0));
    for (const auto& b : after.breakdowns) EXPECT_EQ(b.score, base.find(b.attack_id)->score);
    EXPECT_EQ(after.ranking, base.ranking);
}

TEST(Countermeasure, Errors) {
    RiskAssessment base = testing_support::fixture_assessment();
    CountermeasureProfile cm;
    cm.rates[AttackId("WB-Membership-Inference")] = 0.3;
    try {
        reassess_with_countermeasure(base, cm);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::not_mitigated);
    }
    cm.rates = {{AttackId("nope"), 0.3}};
    try {
        reassess_with_countermeasure(base, cm);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::unknown_attack);
    }
    cm.rates = {{AttackId("WB-Evasion"), 1.5}};
    EXPECT_THROW(reassess_with_countermeasure(base, cm), Error);
}
