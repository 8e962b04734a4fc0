#include "maro/prompts.hpp"

#include "maro/util.hpp"

namespace maro {

namespace embedded {
// Generated at configure time from prompts/*.txt.
extern const char* const kLinguistic;
extern const char* const kComment;
extern const char* const kFactQuestion;
extern const char* const kFactCheck;
extern const char* const kQuestioning;
extern const char* const kJudge;
extern const char* const kOptimizer;
extern const char* const kInitialRule;
}  // namespace embedded

namespace {

constexpr Role kSystemRoles[] = {Role::Linguistic, Role::Comment,  Role::FactQuestion, Role::FactCheck,
                                 Role::Questioning, Role::Judge, Role::Optimizer};

}  // namespace

const char* PromptRegistry::file_name(Role role) {
    switch (role) {
        case Role::Linguistic: return "linguistic.txt";
        case Role::Comment: return "comment.txt";
        case Role::FactQuestion: return "fact_question.txt";
        case Role::FactCheck: return "fact_check.txt";
        case Role::Questioning: return "questioning.txt";
        case Role::Judge: return "judge.txt";
        case Role::Optimizer: return "optimizer.txt";
    }
    return "";
}

PromptRegistry PromptRegistry::defaults() {
    PromptRegistry reg;
    reg.system_[Role::Linguistic] = trim(embedded::kLinguistic);
    reg.system_[Role::Comment] = trim(embedded::kComment);
    reg.system_[Role::FactQuestion] = trim(embedded::kFactQuestion);
    reg.system_[Role::FactCheck] = trim(embedded::kFactCheck);
    reg.system_[Role::Questioning] = trim(embedded::kQuestioning);
    reg.system_[Role::Judge] = trim(embedded::kJudge);
    reg.optimizer_template_ = trim(embedded::kOptimizer);
    reg.system_[Role::Optimizer] = "You act as the decision rule optimization agent in a multi-agent misinformation "
                                   "detection system. Reply with the new decision rule only.";
    reg.initial_rule_ = trim(embedded::kInitialRule);
    return reg;
}

PromptRegistry PromptRegistry::load(const std::filesystem::path& dir) {
    auto read_required = [&](const char* name) {
        auto path = dir / name;
        if (!std::filesystem::exists(path)) throw Error(Errc::BadConfig, "missing prompt file " + path.string());
        auto text = trim(read_file(path));
        if (text.empty()) throw Error(Errc::BadConfig, "prompt file " + path.string() + " is blank");
        return text;
    };
    PromptRegistry reg = defaults();
    for (Role role : kSystemRoles) {
        if (role == Role::Optimizer) continue;
        reg.system_[role] = read_required(file_name(role));
    }
    reg.optimizer_template_ = read_required("optimizer.txt");
    reg.initial_rule_ = read_required("initial_rule.txt");
    return reg;
}

const std::string& PromptRegistry::system_prompt(Role role) const {
    auto it = system_.find(role);
    if (it == system_.end()) throw Error(Errc::BadConfig, std::string("no prompt for role ") + std::string(role_name(role)));
    return it->second;
}

void PromptRegistry::set(Role role, std::string text) {
    if (role == Role::Optimizer) {
        optimizer_template_ = std::move(text);
    } else {
        system_[role] = std::move(text);
    }
}

std::map<std::string, std::string> PromptRegistry::hashes() const {
    std::map<std::string, std::string> out;
    for (Role role : kSystemRoles) {
        if (role == Role::Optimizer) continue;
        out[file_name(role)] = sha256_hex(system_.at(role));
    }
    out["optimizer.txt"] = sha256_hex(optimizer_template_);
    out["initial_rule.txt"] = sha256_hex(initial_rule_);
    return out;
}

}  // namespace maro
