#include <gtest/gtest.h>

#include <random>

#include "amlrisk/knowledge.hpp"
#include "fixtures.hpp"

using namespace amlrisk;
using testing_support::fixture_store;

namespace {

AttackRecord record(const std::string& id, double rate, Domain d = Domain::nlp, DataType t = DataType::text,
                    Architecture a = Architecture::deep_learning, Task k = Task::regression) {
    AttackRecord r;
    r.record_id = id;
    r.publication = {"title " + id, 2020, "venue"};
    r.attack_family = AttackFamily::evasion;
    r.threat_model = ThreatModel::black_box;
    r.execution_mode = ExecutionMode::digital;
    r.objective = Objective::integrity;
    r.context = {d, t, a, k, "set"};
    r.success_rate = rate;
    return r;
}

AttackDefinition evasion_attack() {
    AttackDefinition a;
    a.id = AttackId("A");
    a.attack_family = AttackFamily::evasion;
    a.threat_model = ThreatModel::black_box;
    a.execution_modes = {ExecutionMode::digital};
    return a;
}

SystemProfile nlp_profile() {
    SystemProfile p;
    p.characteristics = {Architecture::deep_learning, Task::regression, DataType::text, Domain::nlp};
    return p;
}

std::vector<int> levels_of(const std::vector<MatchBatch>& b) {
    std::vector<int> out;
    for (const auto& x : b) out.push_back(x.level);
    return out;
}

}  // namespace

TEST(Ingest, ThreeIntoEmptyStore) {
    auto rep = ingest_records(RecordStore{}, {record("a", 0.1), record("b", 0.2), record("c", 0.3)});
    EXPECT_EQ(rep.accepted, 3u);
    EXPECT_EQ(rep.store.size(), 3u);
    EXPECT_TRUE(rep.rejected.empty());
}

TEST(Ingest, RateOutOfRange) {
    auto rep = ingest_records(RecordStore{}, {record("a", 1.3)});
    ASSERT_EQ(rep.rejected.size(), 1u);
    EXPECT_EQ(rep.rejected[0].reason, "rate out of range");
    EXPECT_EQ(rep.store.size(), 0u);
}

TEST(Ingest, OldPublicationRejected) {
    auto r = record("a", 0.5);
    r.publication.year = 2009;
    auto rep = ingest_records(RecordStore{}, {r});
    ASSERT_EQ(rep.rejected.size(), 1u);
    EXPECT_EQ(rep.rejected[0].reason, "year before 2010");
}

TEST(Ingest, SameRecordTwice) {
    auto first = ingest_records(RecordStore{}, {record("a", 0.5)});
    auto second = ingest_records(first.store, {record("a", 0.5)});
    EXPECT_EQ(second.accepted, 0u);
    ASSERT_EQ(second.rejected.size(), 1u);
    EXPECT_EQ(second.rejected[0].reason, "duplicate");
    EXPECT_EQ(second.store.snapshot_id(), first.store.snapshot_id());
}

TEST(Ingest, OriginalSnapshotUntouched) {
    RecordStore base = fixture_store();
    std::string id = base.snapshot_id();
    auto rep = ingest_records(base, {record("new", 0.4)});
    EXPECT_EQ(base.size(), 50u);
    EXPECT_EQ(base.snapshot_id(), id);
    EXPECT_EQ(rep.store.size(), 51u);
    EXPECT_NE(rep.store.snapshot_id(), id);
}

TEST(Store, StrictLoaderNamesLine) {
    try {
        load_record_store("{\"record_id\": \"x\"}\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::parse_error);
        EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos) << e.what();
    }
}

TEST(Store, JsonlRoundTripKeepsSnapshot) {
    RecordStore again = load_record_store(store_to_jsonl(fixture_store()));
    EXPECT_EQ(again.snapshot_id(), fixture_store().snapshot_id());
    EXPECT_EQ(again.size(), 50u);
}

TEST(Store, LenientParserCollectsErrors) {
    std::string text = record_to_json(record("a", 0.5)).dump() + "\n\nnot json\n";
    auto parsed = parse_records_jsonl(text);
    EXPECT_EQ(parsed.records.size(), 1u);
    ASSERT_EQ(parsed.errors.size(), 1u);
    EXPECT_EQ(parsed.errors[0].line, 3u);
}

TEST(Match, ExactContextShortCircuits) {
    RecordStore store({record("e1", 0.9), record("e2", 0.7), record("x1", 0.1, Domain::nlp, DataType::text,
                                                                      Architecture::ensemble),
                       record("x2", 0.1, Domain::cyber), record("x3", 0.1, Domain::cyber, DataType::tabular),
                       record("x4", 0.1, Domain::nlp, DataType::text, Architecture::ensemble, Task::llm),
                       record("x5", 0.2, Domain::speech, DataType::voice)});
    auto batches = match_records(store, evasion_attack(), nlp_profile(), ExecutionMode::digital,
                                 DowngradePolicy::standard());
    ASSERT_EQ(batches.size(), 1u);
    EXPECT_EQ(batches[0].level, 0);
    EXPECT_EQ(batches[0].record_ids, (std::vector<std::string>{"e1", "e2"}));
    EXPECT_DOUBLE_EQ(batches[0].batch_mean, 0.8);
}

TEST(Match, OnlyLevelsTwoAndFour) {
    RecordStore store({record("l2", 0.6, Domain::nlp, DataType::text, Architecture::ensemble, Task::llm),
                       record("l4", 0.2, Domain::cyber, DataType::tabular)});
    auto batches = match_records(store, evasion_attack(), nlp_profile(), ExecutionMode::digital,
                                 DowngradePolicy::standard());
    EXPECT_EQ(levels_of(batches), (std::vector<int>{2, 4}));
    EXPECT_EQ(batches[0].record_ids, std::vector<std::string>{"l2"});
    EXPECT_EQ(batches[1].record_ids, std::vector<std::string>{"l4"});
}

TEST(Match, EmptyStore) {
    EXPECT_TRUE(match_records(RecordStore{}, evasion_attack(), nlp_profile(), ExecutionMode::digital,
                              DowngradePolicy::standard())
                    .empty());
}

TEST(Match, FamilyThreatModelAndModeAreHard) {
    auto r = record("p", 0.5);
    r.execution_mode = ExecutionMode::physical;
    auto g = record("g", 0.5);
    g.threat_model = ThreatModel::gray_box;
    RecordStore store({r, g});
    EXPECT_TRUE(match_records(store, evasion_attack(), nlp_profile(), ExecutionMode::digital,
                              DowngradePolicy::standard())
                    .empty());
}

TEST(Match, DatasetNameIgnored) {
    auto r = record("a", 0.5);
    r.context.dataset_name = "something else";
    RecordStore store({r});
    auto batches = match_records(store, evasion_attack(), nlp_profile(), ExecutionMode::digital,
                                 DowngradePolicy::standard());
    EXPECT_EQ(levels_of(batches), std::vector<int>{0});
}

TEST(Match, LevelNestingOnFixture) {
    auto policy = DowngradePolicy::standard();
    SystemProfile p = testing_support::fixture_profile();
    for (const auto& a : testing_support::fixture_catalog().attacks) {
        for (auto mode : a.execution_modes) {
            for (const auto& r : fixture_store().records()) {
                bool seen = false;
                for (const auto& axes : policy.levels) {
                    bool m = record_matches(r, a, p.characteristics, mode, axes);
                    EXPECT_TRUE(!seen || m) << a.id.str() << " " << r.record_id;
                    seen = seen || m;
                }
            }
        }
    }
}

TEST(SuccessRate, SingleBatchIdentity) {
    std::vector<MatchBatch> b = {{0, ExecutionMode::digital, {"a"}, 0.8}};
    EXPECT_DOUBLE_EQ(weighted_success_rate(b, DowngradePolicy::standard()), 0.8);
}

TEST(SuccessRate, TwoLevelWeightedMean) {
    std::vector<MatchBatch> b = {{0, ExecutionMode::digital, {"a"}, 0.9}, {1, ExecutionMode::digital, {"b"}, 0.5}};
    EXPECT_NEAR(weighted_success_rate(b, DowngradePolicy::standard()), 0.76667, 1e-5);
    EXPECT_NEAR(weighted_success_rate(b, DowngradePolicy::standard()), (0.9 + 0.25) / 1.5, 1e-15);
}

TEST(SuccessRate, FallbackIsCorpusMean) {
    RecordStore store({record("a", 0.5), record("b", 0.74)});
    auto est = estimate_success_rate(store, {}, DowngradePolicy::standard(), ExecutionMode::digital);
    EXPECT_TRUE(est.fallback);
    EXPECT_NEAR(est.rate, 0.62, 1e-15);
    auto none = estimate_success_rate(store, {}, DowngradePolicy::standard(), ExecutionMode::physical);
    EXPECT_TRUE(none.fallback);
    EXPECT_DOUBLE_EQ(none.rate, 0.5);
}

TEST(SuccessRate, FixtureFallbackMatchesHandMean) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : fixture_store().records()) {
        if (r.execution_mode == ExecutionMode::digital) {
            sum += r.success_rate;
            ++n;
        }
    }
    EXPECT_DOUBLE_EQ(fallback_success_rate(fixture_store(), ExecutionMode::digital), sum / n);
}

TEST(SuccessRate, RandomizedAgainstDirectMean) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto policy = DowngradePolicy::standard();
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<MatchBatch> batches;
        for (int lvl = 1; lvl < 5; ++lvl) {
            if (u(rng) < 0.5) batches.push_back({lvl, ExecutionMode::digital, {"r"}, u(rng)});
        }
        if (u(rng) < 0.2) batches = {{0, ExecutionMode::digital, {"r"}, u(rng)}};
        if (batches.empty()) continue;
        double num = 0.0, den = 0.0;
        for (const auto& b : batches) {
            double w = 1.0 / double(1 << b.level);
            num += b.batch_mean * w;
            den += w;
        }
        double got = weighted_success_rate(batches, policy);
        EXPECT_NEAR(got, num / den, 1e-12);
        EXPECT_GE(got, 0.0);
        EXPECT_LE(got, 1.0);
    }
}

TEST(Downgrade, PolicyValidation) {
    auto p = DowngradePolicy::standard();
    EXPECT_NO_THROW(p.validate());
    p.weights = {1.0, 1.0, 0.25, 0.125, 0.0625};
    EXPECT_THROW(p.validate(), Error);
    p = DowngradePolicy::standard();
    p.levels[1] = {ContextAxis::task, ContextAxis::model_architecture};
    EXPECT_THROW(p.validate(), Error);
}

TEST(Stats, FixtureComputerVisionShare) {
    StatsSummary s = dataset_stats(fixture_store());
    EXPECT_EQ(s.record_count, 50u);
    EXPECT_DOUBLE_EQ(s.domain_share.at("computer-vision"), 0.56);
}

TEST(Stats, SingleRecord) {
    StatsSummary s = dataset_stats(RecordStore({record("a", 0.4)}));
    for (const auto& [d, v] : s.domain_share) EXPECT_DOUBLE_EQ(v, d == "nlp" ? 1.0 : 0.0) << d;
    for (const auto& [t, v] : s.threat_model_share) EXPECT_DOUBLE_EQ(v, t == "black-box" ? 1.0 : 0.0) << t;
    for (const auto& [o, v] : s.objective_share_by_domain.at("nlp")) EXPECT_DOUBLE_EQ(v, o == "integrity" ? 1.0 : 0.0);
    for (const auto& [m, v] : s.mode_share_by_domain.at("nlp")) EXPECT_DOUBLE_EQ(v, m == "digital" ? 1.0 : 0.0);
    EXPECT_DOUBLE_EQ(s.mean_success_by_mode.at("digital"), 0.4);
}

TEST(Stats, EmptyStore) {
    StatsSummary s = dataset_stats(RecordStore{});
    EXPECT_EQ(s.record_count, 0u);
    EXPECT_TRUE(s.domain_share.empty());
}

TEST(Stats, RandomStoreMatchesTally) {
    const Domain domains[] = {Domain::cyber, Domain::finance, Domain::computer_vision, Domain::speech,
                              Domain::nlp, Domain::network, Domain::recommender};
    const Objective objectives[] = {Objective::integrity, Objective::privacy, Objective::availability};
    const ThreatModel tms[] = {ThreatModel::white_box, ThreatModel::black_box, ThreatModel::gray_box};
    std::mt19937_64 rng(40);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<AttackRecord> rs;
        for (int k = 0; k < 40; ++k) {
            auto r = record("r" + std::to_string(k), std::uniform_real_distribution<double>(0, 1)(rng),
                            domains[rng() % 7]);
            r.objective = objectives[rng() % 3];
            r.threat_model = tms[rng() % 3];
            r.execution_mode = rng() % 2 ? ExecutionMode::digital : ExecutionMode::physical;
            rs.push_back(r);
        }
        StatsSummary s = dataset_stats(RecordStore(rs));

        std::map<std::string, int> dn, tn;
        std::map<std::string, std::map<std::string, int>> on, mn;
        std::map<std::string, std::vector<double>> mrates;
        for (const auto& r : rs) {
            std::string d(to_string(r.context.domain));
            dn[d]++;
            tn[std::string(to_string(r.threat_model))]++;
            on[d][std::string(to_string(r.objective))]++;
            mn[d][std::string(to_string(r.execution_mode))]++;
            mrates[std::string(to_string(r.execution_mode))].push_back(r.success_rate);
        }
        for (auto d : domains) {
            std::string name(to_string(d));
            EXPECT_EQ(s.domain_share.at(name), dn[name] / 40.0);
            if (!dn[name]) {
                EXPECT_FALSE(s.objective_share_by_domain.count(name));
                continue;
            }
            for (auto o : objectives) {
                std::string on_name(to_string(o));
                EXPECT_EQ(s.objective_share_by_domain.at(name).at(on_name), on[name][on_name] / double(dn[name]));
            }
            EXPECT_EQ(s.mode_share_by_domain.at(name).at("digital"), mn[name]["digital"] / double(dn[name]));
        }
        for (auto t : tms) {
            std::string name(to_string(t));
            EXPECT_EQ(s.threat_model_share.at(name), tn[name] / 40.0);
        }
        for (const auto& [m, xs] : mrates) {
            double sum = 0.0;
            for (double x : xs) sum += x;
            EXPECT_EQ(s.mean_success_by_mode.at(m), sum / xs.size());
        }
    }
}
