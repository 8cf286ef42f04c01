#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace slosim {

// splitmix64 finalizer; stable across platforms, unlike std::hash.
std::uint64_t mix64(std::uint64_t x);

// Child seed for a named component. Streams stay independent of each other, so
// adding a component never perturbs an existing one.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view component);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

std::uint64_t fnv1a(std::string_view bytes);

// Shortest representation that round-trips.
std::string format_double(double value);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

// Minimal CSV field splitter: handles double-quoted fields with "" escapes.
std::vector<std::string> parse_csv_line(std::string_view line);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace slosim
