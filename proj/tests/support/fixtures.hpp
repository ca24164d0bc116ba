#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "amlrisk/catalog.hpp"
#include "amlrisk/engine.hpp"
#include "amlrisk/knowledge.hpp"
#include "amlrisk/profiling.hpp"

namespace testing_support {

inline std::string data_path(const std::string& rel) { return std::string(AMLRISK_TEST_DATA_DIR) + "/" + rel; }
inline std::string golden_path(const std::string& rel) { return std::string(AMLRISK_GOLDEN_DIR) + "/" + rel; }

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline nlohmann::json read_json(const std::string& path) { return nlohmann::json::parse(slurp(path)); }

inline const amlrisk::Catalog& fixture_catalog() {
    static const amlrisk::Catalog c = amlrisk::load_catalog_file(data_path("catalog.json"));
    return c;
}

inline const amlrisk::Questionnaire& fixture_questionnaire() {
    static const amlrisk::Questionnaire q = amlrisk::load_questionnaire_file(data_path("questionnaire.json"));
    return q;
}

inline const amlrisk::RecordStore& fixture_store() {
    static const amlrisk::RecordStore s = amlrisk::load_record_store_file(data_path("corpus.jsonl"));
    return s;
}

inline amlrisk::ResponseDocument fixture_responses() {
    return amlrisk::load_response_file(data_path("fixtures/feedback_scoring.answers.json"));
}

inline amlrisk::SystemProfile fixture_profile() {
    return amlrisk::build_profile(fixture_questionnaire(), fixture_responses());
}

inline constexpr const char* kFixedTimestamp = "2024-01-01T00:00:00Z";

inline amlrisk::RiskAssessment fixture_assessment(const amlrisk::EngineConfig& config = {}) {
    return amlrisk::assess(fixture_catalog(), fixture_profile(), fixture_store(), config, {kFixedTimestamp});
}

}  // namespace testing_support
