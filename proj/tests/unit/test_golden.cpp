#include <gtest/gtest.h>

#include "amlrisk/report.hpp"
#include "fixtures.hpp"

using namespace amlrisk;
using nlohmann::json;
using testing_support::golden_path;

namespace {

constexpr double kTol = 1e-12;

const json& oracle() {
    static const json j = testing_support::read_json(golden_path("feedback_scoring.oracle.json"));
    return j;
}

}  // namespace

TEST(Golden, EngineMatchesOracleScript) {
    RiskAssessment a = testing_support::fixture_assessment();
    EngineConfig literal;
    literal.impact_mode = ImpactMode::literal_product;
    RiskAssessment lit = testing_support::fixture_assessment(literal);
    ASSERT_EQ(oracle()["attacks"].size(), a.breakdowns.size());
    for (const auto& b : a.breakdowns) {
        SCOPED_TRACE(b.attack_id.str());
        const json& o = oracle()["attacks"].at(b.attack_id.str());
        EXPECT_NEAR(b.f_generic, o["f_generic"].get<double>(), kTol);
        EXPECT_NEAR(b.impact, o["impact"].get<double>(), kTol);
        EXPECT_NEAR(lit.find(b.attack_id)->impact, o["impact_literal"].get<double>(), kTol);
        EXPECT_NEAR(b.l_overall, o["l_overall"].get<double>(), kTol);
        EXPECT_NEAR(b.raw_score, o["raw_score"].get<double>(), kTol);
        EXPECT_NEAR(b.score, o["score"].get<double>(), kTol);
        if (o["zeroed_by"].is_null()) {
            EXPECT_FALSE(b.zeroed_by.has_value());
        } else {
            EXPECT_EQ(b.zeroed_by, o["zeroed_by"].get<std::string>());
        }
        for (auto m : kModes) {
            std::string name(to_string(m));
            const ModeBreakdown& mb = b.mode(m);
            if (!o["modes"].contains(name)) {
                EXPECT_FALSE(mb.supported) << name;
                continue;
            }
            const json& om = o["modes"][name];
            EXPECT_EQ(mb.supported, om["supported"].get<bool>()) << name;
            if (!om["supported"].get<bool>()) {
                EXPECT_EQ(mb.l, 0.0) << name;
                continue;
            }
            EXPECT_NEAR(mb.f_em, om["f_em"].get<double>(), kTol) << name;
            EXPECT_NEAR(mb.norm_f, om["norm_f"].get<double>(), kTol) << name;
            EXPECT_NEAR(mb.sr, om["sr"].get<double>(), kTol) << name;
            EXPECT_EQ(mb.sr_fallback, om["sr_fallback"].get<bool>()) << name;
            EXPECT_NEAR(mb.l, om["l"].get<double>(), kTol) << name;
            ASSERT_EQ(mb.batches.size(), om["batches"].size()) << name;
            for (std::size_t k = 0; k < mb.batches.size(); ++k) {
                EXPECT_EQ(mb.batches[k].level, om["batches"][k]["level"].get<int>());
                EXPECT_EQ(mb.batches[k].record_ids, om["batches"][k]["records"].get<std::vector<std::string>>());
                EXPECT_NEAR(mb.batches[k].batch_mean, om["batches"][k]["mean"].get<double>(), kTol);
            }
        }
    }
    std::vector<std::string> ranking;
    for (const auto& id : a.ranking) ranking.push_back(id.str());
    EXPECT_EQ(ranking, oracle()["ranking"].get<std::vector<std::string>>());
}

TEST(Golden, MachineReportByteIdentical) {
    std::string want = testing_support::slurp(golden_path("feedback_scoring.report.json"));
    ASSERT_FALSE(want.empty());
    EXPECT_EQ(render_report(testing_support::fixture_assessment(), ReportFormat::machine, 5), want);
}

TEST(Golden, CorpusStatsMatchTallyScript) {
    json want = testing_support::read_json(golden_path("corpus_stats.tally.json"));
    EXPECT_EQ(dataset_stats(testing_support::fixture_store()).to_json(), want);
}
