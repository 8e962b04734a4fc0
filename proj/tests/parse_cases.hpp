#pragma once

// Raw judge outputs and the verdict each should parse to. Shared by the judge
// unit tests and the acceptance binary.

#include <optional>

#include "maro/judge.hpp"

namespace testing {

struct ParseCase {
    const char* raw;
    std::optional<maro::Verdict> verdict;
    maro::ParseStatus status;
};

inline constexpr auto F = maro::Verdict::Fake;
inline constexpr auto R = maro::Verdict::Real;
inline constexpr auto C = maro::ParseStatus::Clean;
inline constexpr auto P = maro::ParseStatus::Repaired;
inline constexpr auto X = maro::ParseStatus::Failed;

inline const ParseCase kParseTable[] = {
    {"judgment: 1", F, C},
    {"judgment: 0", R, C},
    {"Judgment:1", F, C},
    {"JUDGMENT : 0", R, C},
    {"After weighing the report, judgment: 1.", F, C},
    {"judgment: '1'", F, C},
    {"judgment: <0>", R, C},
    {"**Judgment:** 1", F, C},
    {"judgement: 0", R, C},
    {"judgment\xEF\xBC\x9A" "1", F, C},
    {"judgment: 0\n...on reflection, judgment: 1", F, C},
    {"judgment: <'1' represents fake-news, '0' represents real-news>\njudgment: 0", R, C},
    {"The news is fake.", F, P},
    {"This is genuine reporting.", R, P},
    {"It looked real at first, but it is misinformation", F, P},
    {"It looked fake at first, but it is true", R, P},
    {"Final answer:\n1", F, P},
    {"0", R, P},
    {"Answer: (1)", F, P},
    {"\xE8\xBF\x99\xE6\x98\xAF\xE8\xB0\xA3\xE8\xA8\x80", F, P},
    {"I cannot decide.", std::nullopt, X},
    {"", std::nullopt, X},
    {"judgment: 2", std::nullopt, X},
    {"judgment: 10", std::nullopt, X},
    {"judgment: <'1' represents fake-news, '0' represents real-news>", std::nullopt, X},
    {"The article is a fakery of sorts", std::nullopt, X},
};

}  // namespace testing
