#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "maro/provider.hpp"

namespace maro {

/// System prompts per agent role plus the optimizer template and the default
/// initial decision rule. File names under a prompt directory:
///   linguistic.txt comment.txt fact_question.txt fact_check.txt
///   questioning.txt judge.txt optimizer.txt initial_rule.txt
class PromptRegistry {
public:
    /// Prompts compiled into the library from the repository's prompts/ dir.
    static PromptRegistry defaults();

    /// Loads every file; a missing or blank file is a BadConfig error.
    static PromptRegistry load(const std::filesystem::path& dir);

    const std::string& system_prompt(Role role) const;
    /// Optimizer prompt with {{trajectory}} and {{examples}} placeholders.
    const std::string& optimizer_template() const { return optimizer_template_; }
    const std::string& initial_rule() const { return initial_rule_; }

    void set(Role role, std::string text);

    /// file name -> sha256 of its contents, for provenance records.
    std::map<std::string, std::string> hashes() const;

    static const char* file_name(Role role);

private:
    std::map<Role, std::string> system_;
    std::string optimizer_template_;
    std::string initial_rule_;
};

}  // namespace maro
