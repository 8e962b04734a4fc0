#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace maro {

// ---- text -----------------------------------------------------------------

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);
std::vector<std::string> split_lines(std::string_view s);

/// Lowercase, trim, and collapse internal whitespace runs to one space.
std::string normalize_query(std::string_view s);

/// Filesystem-safe stem for a normalized query or title. ASCII text maps to
/// an underscore slug; anything with non-ASCII bytes (or too long) maps to
/// "q_" followed by 16 hex digits of its SHA-256.
std::string fixture_stem(std::string_view normalized);

// ---- hashing --------------------------------------------------------------

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Hash over a sequence of fields; each field is length-prefixed so that
/// ("ab","c") and ("a","bc") differ.
std::string hash_fields(const std::vector<std::string_view>& fields);

// ---- files ----------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never see a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// ---- randomness -----------------------------------------------------------

/// Derives an independent 64-bit seed for a named substream.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);

/// Small PRNG whose output is identical across standard libraries
/// (std::uniform_int_distribution and std::shuffle are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

    /// Uniform real in [0, 1).
    double uniform();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace maro
