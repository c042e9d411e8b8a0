#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "crowdvote/backend.hpp"
#include "crowdvote/candidate.hpp"

namespace crowdvote::testing {

inline std::filesystem::path data_dir() { return CROWDVOTE_DATA_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device device;
        path_ = std::filesystem::temp_directory_path() /
                ("crowdvote-test-" + std::to_string(device()) + "-" + std::to_string(device()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ignored;
        std::filesystem::remove_all(path_, ignored);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline BackendDescriptor scripted(const std::string& backend_id, const std::string& script_id) {
    BackendDescriptor d;
    d.backend_id = backend_id;
    d.kind = BackendKind::kScripted;
    d.script_id = script_id;
    return d;
}

inline CandidateEntry scripted_candidate(const std::string& id, const std::string& script_id) {
    CandidateEntry c;
    c.candidate_id = id;
    c.display_name = "Candidate " + id;
    c.backend = scripted("cand-" + id, script_id);
    return c;
}

}  // namespace crowdvote::testing
