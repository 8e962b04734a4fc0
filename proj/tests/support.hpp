#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <functional>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "maro/domain.hpp"
#include "maro/error.hpp"
#include "maro/util.hpp"

namespace testing {

inline std::filesystem::path data(const std::string& name) { return std::filesystem::path(MARO_TEST_DATA) / name; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("maro-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

    std::filesystem::path write(const std::string& name, const std::string& contents) const {
        auto p = path_ / name;
        std::filesystem::create_directories(p.parent_path());
        std::ofstream(p, std::ios::binary) << contents;
        return p;
    }

private:
    std::filesystem::path path_;
};

inline maro::NewsItem item(const std::string& id, const std::string& domain, maro::Verdict label,
                           std::string content = {}, std::vector<std::string> comments = {}) {
    maro::NewsItem n;
    n.id = id;
    n.domain = domain;
    n.label = label;
    n.content = content.empty() ? "News body of " + id : std::move(content);
    n.comments = std::move(comments);
    return n;
}

inline std::string slurp(const std::filesystem::path& p) { return maro::read_file(p); }

/// Code of the maro::Error thrown by `fn`; fails the test when none is thrown.
inline maro::Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const maro::Error& e) {
        return e.code();
    }
    FAIL("expected maro::Error");
    return maro::Errc::Io;
}

}  // namespace testing
