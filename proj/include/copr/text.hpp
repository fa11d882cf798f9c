#ifndef COPR_TEXT_HPP_
#define COPR_TEXT_HPP_

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace copr {

/*!
 * Fixed decimal formatting for logs and reports: 17 significant digits,
 * locale-free, round-trips any double bit-exactly.
 */
std::string format_double(double v);

double parse_double(std::string_view s);
std::int64_t parse_int(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/*! FNV-1a 64-bit over raw bytes; used for config digests and replay checks. */
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ull);

/*! Digest of a file's contents. Throws on IO failure. */
std::uint64_t file_digest(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace copr

#endif  // COPR_TEXT_HPP_
