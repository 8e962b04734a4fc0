#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "maro/analysis.hpp"
#include "maro/domain.hpp"
#include "maro/util.hpp"

namespace maro {

struct Demonstration {
    NewsItem item;
    Verdict label = Verdict::Real;
};

/// One cross-domain validation task: a query item with its report, labeled
/// demonstrations from other source domains, and the gold label.
struct ValidationTask {
    NewsItem query;
    MultiDimReport query_report;
    std::vector<Demonstration> demonstrations;
    Verdict gold = Verdict::Real;
};

struct TaskSetConfig {
    std::size_t n_tasks = 500;
    std::size_t demos_per_task = 4;
    std::uint64_t seed = 0;
    std::size_t per_domain_cap = 100;
};

nlohmann::json to_json(const TaskSetConfig& c);

/// Uniform sample without replacement of min(cap, size) items, keeping the
/// dataset's original order among the survivors.
Dataset cap_domain(const Dataset& dataset, std::size_t cap, std::uint64_t seed);

/// Samples `count` demonstrations from `pool`, half real and half fake when
/// both classes have enough items, otherwise topping up from the rest.
std::vector<Demonstration> sample_demonstrations(const std::vector<const NewsItem*>& pool, std::size_t count,
                                                 Rng& rng);

/// Queries rotate over domains in sorted order; within a domain they are
/// drawn without replacement until exhausted, then with replacement.
std::vector<ValidationTask> build_tasks(const std::map<std::string, Dataset>& source_parts,
                                        const std::map<std::string, MultiDimReport>& reports,
                                        const TaskSetConfig& config,
                                        std::vector<std::string>* warnings = nullptr);

/// Task-set archive: a provenance header line, then one line per task
/// holding the query id, gold label and inlined demo ids with labels.
std::string serialize_tasks(const std::vector<ValidationTask>& tasks, const TaskSetConfig& config,
                            const nlohmann::json& provenance);

/// Rebuilds tasks from an archive against the datasets and reports they
/// reference.
std::vector<ValidationTask> load_tasks(const std::string& archive, const Dataset& items,
                                       const std::map<std::string, MultiDimReport>& reports);

}  // namespace maro
