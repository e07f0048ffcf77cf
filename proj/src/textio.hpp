#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace qnet {

inline constexpr const char* kVersion = "qnet 0.1.0";

// Shortest round-trippable decimal form (17 significant digits).
std::string f17(double x);

std::string join17(const std::vector<double>& xs, const std::string& sep);

// FNV-1a 64-bit, hex-encoded; used as the config hash embedded in exports.
std::string fnv1a_hex(const std::string& bytes);

// RFC-4180 line terminator used by every CSV export.
inline constexpr const char* kCrlf = "\r\n";

}  // namespace qnet
