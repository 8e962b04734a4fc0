#include "maro/domain.hpp"

#include <unordered_set>

#include "maro/error.hpp"
#include "maro/util.hpp"

namespace maro {

using nlohmann::json;

std::optional<Verdict> verdict_from_int(long long code) noexcept {
    if (code == 0) return Verdict::Real;
    if (code == 1) return Verdict::Fake;
    return std::nullopt;
}

std::string_view verdict_word(Verdict v) noexcept { return v == Verdict::Fake ? "fake" : "real"; }

std::string normalize_domain(std::string_view tag) { return to_lower_ascii(trim(tag)); }

Dataset::Dataset(std::string name, std::vector<NewsItem> items)
    : name_(std::move(name)), items_(std::move(items)) {
    std::unordered_set<std::string> ids;
    for (const auto& item : items_) {
        if (trim(item.content).empty()) throw Error(Errc::MissingField, "item " + item.id + " has empty content");
        if (item.domain.empty() || item.domain != normalize_domain(item.domain)) {
            throw Error(Errc::MissingField, "item " + item.id + " has an empty or unnormalized domain");
        }
        if (!ids.insert(item.id).second) throw Error(Errc::DuplicateId, "duplicate id " + item.id);
        domains_.insert(item.domain);
    }
}

const NewsItem* Dataset::find(std::string_view id) const {
    for (const auto& item : items_) {
        if (item.id == id) return &item;
    }
    return nullptr;
}

NewsItem parse_record(const json& record, const std::string& fallback_id) {
    if (!record.is_object()) throw Error(Errc::BadRecord, fallback_id + ": record is not an object");
    NewsItem item;

    if (auto it = record.find("id"); it != record.end() && !it->is_null()) {
        if (!it->is_string()) throw Error(Errc::BadRecord, fallback_id + ": id must be a string");
        item.id = it->get<std::string>();
    } else {
        item.id = fallback_id;
    }

    auto content = record.find("content");
    if (content == record.end() || !content->is_string() || trim(content->get<std::string>()).empty()) {
        throw Error(Errc::MissingField, item.id + ": missing content");
    }
    item.content = trim(content->get<std::string>());

    if (auto it = record.find("comments"); it != record.end() && !it->is_null()) {
        if (!it->is_array()) throw Error(Errc::BadRecord, item.id + ": comments must be an array");
        for (const auto& c : *it) {
            if (!c.is_string()) throw Error(Errc::BadRecord, item.id + ": comment is not a string");
            item.comments.push_back(c.get<std::string>());
        }
    }

    auto label = record.find("label");
    if (label == record.end() || label->is_null()) throw Error(Errc::MissingField, item.id + ": missing label");
    if (!label->is_number_integer()) throw Error(Errc::BadLabel, item.id + ": label must be 0 or 1");
    auto verdict = verdict_from_int(label->get<long long>());
    if (!verdict) throw Error(Errc::BadLabel, item.id + ": label " + label->dump() + " not in {0,1}");
    item.label = *verdict;

    auto domain = record.find("domain");
    if (domain == record.end() || !domain->is_string() || normalize_domain(domain->get<std::string>()).empty()) {
        throw Error(Errc::MissingField, item.id + ": missing domain");
    }
    item.domain = normalize_domain(domain->get<std::string>());
    return item;
}

json to_record(const NewsItem& item) {
    return json{{"id", item.id},
                {"content", item.content},
                {"comments", item.comments},
                {"label", to_int(item.label)},
                {"domain", item.domain}};
}

Dataset load_dataset(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error(Errc::Io, "no such file " + path.string());
    std::string text = read_file(path);
    std::string fname = path.filename().string();

    std::vector<NewsItem> items;
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        std::string fallback = fname + ":" + std::to_string(i + 1);
        json record;
        try {
            record = json::parse(lines[i]);
        } catch (const json::parse_error& e) {
            throw Error(Errc::BadRecord, fallback + ": " + e.what());
        }
        items.push_back(parse_record(record, fallback));
    }
    if (items.empty()) throw Error(Errc::EmptyFile, path.string() + " contains no records");
    return Dataset(path.stem().string(), std::move(items));
}

std::string serialize_dataset(const Dataset& dataset) {
    std::string out;
    for (const auto& item : dataset.items()) {
        out += to_record(item).dump();
        out.push_back('\n');
    }
    return out;
}

std::map<std::string, Dataset> split_by_domain(const Dataset& dataset) {
    if (dataset.empty()) throw Error(Errc::EmptyDataset, "cannot split an empty dataset");
    std::map<std::string, std::vector<NewsItem>> buckets;
    for (const auto& item : dataset.items()) buckets[item.domain].push_back(item);
    std::map<std::string, Dataset> parts;
    for (auto& [domain, items] : buckets) {
        parts.emplace(domain, Dataset(dataset.name() + "/" + domain, std::move(items)));
    }
    return parts;
}

Dataset merge(const std::string& name, const std::vector<const Dataset*>& parts) {
    std::vector<NewsItem> items;
    for (const auto* p : parts) items.insert(items.end(), p->items().begin(), p->items().end());
    return Dataset(name, std::move(items));
}

}  // namespace maro
