#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace amlrisk {

/// 64-bit FNV-1a. Used for content-addressed ids (snapshots, configs,
/// assessments), never for anything security relevant.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// `prefix` + 16 lowercase hex digits of fnv1a64(bytes).
std::string content_id(std::string_view prefix, std::string_view bytes);

}  // namespace amlrisk
