#include "maro/tasks.hpp"

#include <algorithm>

#include "maro/error.hpp"
#include "maro/util.hpp"

namespace maro {

using nlohmann::json;

json to_json(const TaskSetConfig& c) {
    return json{{"n_tasks", c.n_tasks},
                {"demos_per_task", c.demos_per_task},
                {"seed", c.seed},
                {"per_domain_cap", c.per_domain_cap}};
}

Dataset cap_domain(const Dataset& dataset, std::size_t cap, std::uint64_t seed) {
    if (cap == 0) throw Error(Errc::BadConfig, "cap must be >= 1");
    if (dataset.size() <= cap) return dataset;
    std::vector<std::size_t> idx(dataset.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(substream_seed(seed, "cap-sampling"));
    rng.shuffle(idx);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    std::vector<NewsItem> kept;
    kept.reserve(cap);
    for (auto i : idx) kept.push_back(dataset.items()[i]);
    return Dataset(dataset.name(), std::move(kept));
}

std::vector<Demonstration> sample_demonstrations(const std::vector<const NewsItem*>& pool, std::size_t count,
                                                 Rng& rng) {
    if (pool.size() < count) {
        throw Error(Errc::NotEnoughDemos, "pool of " + std::to_string(pool.size()) + " cannot supply " +
                                              std::to_string(count) + " demonstrations");
    }
    std::vector<const NewsItem*> real, fake;
    for (const auto* item : pool) (item->label == Verdict::Fake ? fake : real).push_back(item);
    rng.shuffle(real);
    rng.shuffle(fake);

    std::size_t want_fake = count / 2;
    std::size_t want_real = count - want_fake;
    std::size_t take_fake = std::min(want_fake, fake.size());
    std::size_t take_real = std::min(want_real, real.size());
    // top up from whichever class has spare items
    while (take_fake + take_real < count) {
        if (take_fake < fake.size()) ++take_fake;
        else ++take_real;
    }

    std::vector<const NewsItem*> chosen(real.begin(), real.begin() + static_cast<long>(take_real));
    chosen.insert(chosen.end(), fake.begin(), fake.begin() + static_cast<long>(take_fake));
    rng.shuffle(chosen);

    std::vector<Demonstration> out;
    out.reserve(chosen.size());
    for (const auto* item : chosen) out.push_back({*item, item->label});
    return out;
}

std::vector<ValidationTask> build_tasks(const std::map<std::string, Dataset>& source_parts,
                                        const std::map<std::string, MultiDimReport>& reports,
                                        const TaskSetConfig& config, std::vector<std::string>* warnings) {
    std::vector<std::string> domains;
    for (const auto& [domain, part] : source_parts) {
        if (!part.empty()) domains.push_back(domain);
    }
    if (domains.size() < 2) throw Error(Errc::SingleDomain, "cross-domain tasks need at least 2 source domains");
    if (config.n_tasks == 0) throw Error(Errc::BadConfig, "n_tasks must be positive");

    Rng query_rng(substream_seed(config.seed, "task-sampling"));
    Rng demo_rng(substream_seed(config.seed, "demo-sampling"));

    struct Cursor {
        std::vector<std::size_t> order;
        std::size_t next = 0;
        bool warned = false;
    };
    std::map<std::string, Cursor> cursors;
    for (const auto& d : domains) {
        Cursor c;
        c.order.resize(source_parts.at(d).size());
        for (std::size_t i = 0; i < c.order.size(); ++i) c.order[i] = i;
        query_rng.shuffle(c.order);
        cursors.emplace(d, std::move(c));
    }

    std::map<std::string, std::vector<const NewsItem*>> other_pools;
    for (const auto& d : domains) {
        auto& pool = other_pools[d];
        for (const auto& other : domains) {
            if (other == d) continue;
            for (const auto& item : source_parts.at(other).items()) pool.push_back(&item);
        }
    }

    std::vector<ValidationTask> tasks;
    tasks.reserve(config.n_tasks);
    for (std::size_t t = 0; t < config.n_tasks; ++t) {
        const auto& domain = domains[t % domains.size()];
        const auto& part = source_parts.at(domain);
        auto& cursor = cursors.at(domain);
        std::size_t pick;
        if (cursor.next < cursor.order.size()) {
            pick = cursor.order[cursor.next++];
        } else {
            if (!cursor.warned && warnings) {
                warnings->push_back("domain '" + domain + "' exhausted; sampling queries with replacement");
            }
            cursor.warned = true;
            pick = static_cast<std::size_t>(query_rng.below(part.size()));
        }
        const NewsItem& query = part.items()[pick];
        auto report = reports.find(query.id);
        if (report == reports.end()) throw Error(Errc::MissingReport, "no report for query item " + query.id);

        ValidationTask task;
        task.query = query;
        task.query_report = report->second;
        task.demonstrations = sample_demonstrations(other_pools.at(domain), config.demos_per_task, demo_rng);
        task.gold = query.label;
        tasks.push_back(std::move(task));
    }
    return tasks;
}

std::string serialize_tasks(const std::vector<ValidationTask>& tasks, const TaskSetConfig& config,
                            const json& provenance) {
    std::string out = json{{"kind", "provenance"}, {"config", to_json(config)}, {"provenance", provenance}}.dump();
    out.push_back('\n');
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& t = tasks[i];
        json demos = json::array();
        for (const auto& d : t.demonstrations) demos.push_back(json{{"id", d.item.id}, {"label", to_int(d.label)}});
        out += json{{"index", i},
                    {"query_id", t.query.id},
                    {"query_domain", t.query.domain},
                    {"gold", to_int(t.gold)},
                    {"demos", demos},
                    {"seed", config.seed}}
                   .dump();
        out.push_back('\n');
    }
    return out;
}

std::vector<ValidationTask> load_tasks(const std::string& archive, const Dataset& items,
                                       const std::map<std::string, MultiDimReport>& reports) {
    std::map<std::string, const NewsItem*> by_id;
    for (const auto& item : items.items()) by_id[item.id] = &item;
    auto lookup = [&](const std::string& id) -> const NewsItem& {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(Errc::BadRecord, "task archive references unknown item " + id);
        return *it->second;
    };

    std::vector<ValidationTask> tasks;
    for (const auto& line : split_lines(archive)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        if (j.value("kind", "") == "provenance") continue;
        ValidationTask t;
        t.query = lookup(j.at("query_id").get<std::string>());
        auto report = reports.find(t.query.id);
        if (report == reports.end()) throw Error(Errc::MissingReport, "no report for query item " + t.query.id);
        t.query_report = report->second;
        auto gold = verdict_from_int(j.at("gold").get<long long>());
        if (!gold) throw Error(Errc::BadLabel, "bad gold label in task archive");
        t.gold = *gold;
        for (const auto& d : j.at("demos")) {
            auto label = verdict_from_int(d.at("label").get<long long>());
            if (!label) throw Error(Errc::BadLabel, "bad demo label in task archive");
            t.demonstrations.push_back({lookup(d.at("id").get<std::string>()), *label});
        }
        tasks.push_back(std::move(t));
    }
    return tasks;
}

}  // namespace maro
