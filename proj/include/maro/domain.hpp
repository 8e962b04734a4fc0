#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace maro {

/// Binary label. The integer codes are part of the judge output format.
enum class Verdict : int { Real = 0, Fake = 1 };

inline int to_int(Verdict v) noexcept { return static_cast<int>(v); }
std::optional<Verdict> verdict_from_int(long long code) noexcept;
std::string_view verdict_word(Verdict v) noexcept;  // "real" / "fake"

struct NewsItem {
    std::string id;
    std::string content;
    std::vector<std::string> comments;
    Verdict label = Verdict::Real;
    std::string domain;

    bool has_comments() const noexcept { return !comments.empty(); }
};

/// Trimmed and case-folded domain tag.
std::string normalize_domain(std::string_view tag);

class Dataset {
public:
    Dataset() = default;
    /// Validates item invariants and id uniqueness.
    Dataset(std::string name, std::vector<NewsItem> items);

    const std::string& name() const noexcept { return name_; }
    const std::vector<NewsItem>& items() const noexcept { return items_; }
    const std::set<std::string>& domains() const noexcept { return domains_; }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }

    const NewsItem* find(std::string_view id) const;

private:
    std::string name_;
    std::vector<NewsItem> items_;
    std::set<std::string> domains_;
};

/// Parses one JSON record. `fallback_id` is used when the record has no id.
NewsItem parse_record(const nlohmann::json& record, const std::string& fallback_id);
nlohmann::json to_record(const NewsItem& item);

/// Reads a line-delimited record file. Blank lines are skipped; ids default
/// to "<filename>:<line>" with 1-based line numbers.
Dataset load_dataset(const std::filesystem::path& path);

/// Line-delimited serialization readable by load_dataset.
std::string serialize_dataset(const Dataset& dataset);

/// Partitions by domain tag; keys iterate in sorted order.
std::map<std::string, Dataset> split_by_domain(const Dataset& dataset);

/// Concatenates datasets in iteration order.
Dataset merge(const std::string& name, const std::vector<const Dataset*>& parts);

}  // namespace maro
