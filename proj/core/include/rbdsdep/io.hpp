#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace rbdsdep::io {

inline constexpr std::string_view kScenarioSchema = "rbdsdep.scenarios.v1";
inline constexpr std::string_view kSolutionSchema = "rbdsdep.solution.v1";
inline constexpr std::string_view kSequenceSchema = "rbdsdep.sequence.v1";
inline constexpr std::string_view kEnvelopeSchema = "rbdsdep.envelope.v1";
inline constexpr std::string_view kReportSchema = "rbdsdep.report.v1";
inline constexpr std::string_view kManifestSchema = "rbdsdep.manifest.v1";

/// Shortest decimal text that parses back to the same double. Locale independent.
std::string format_double(double value);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace rbdsdep::io
