#pragma once

// Persistent result catalog: content-addressed by a hash of the problem
// parameters and tolerance settings, queried by (key, n).  Entries are
// standalone JSON files; the index is a cache that is rebuilt from the
// entry files when corrupt.  Concurrent writers are serialized via an
// advisory file lock.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plshoot/config.hpp"

namespace plshoot {

struct CatalogEntry {
    std::string key;
    std::size_t n = 0;
    double a_n = 0.0;
    std::string artifact;  // path of the associated profile, may be empty
};

namespace catdetail {

// FNV-1a over the canonical serialization; stable across runs and builds.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string canonical_string(const ProblemParams& pp, const ToleranceBlock& tb) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "p=%.17g N=%d m=%.17g l=%.17g R=%.17g K0=%.17g K1=%.17g "
                  "alpha=%.17g alpha1=%.17g tol=%.17g tol_a=%.17g tms=%.17g "
                  "tol_E=%.17g delta=%.17g window=%.17g",
                  pp.p, pp.N, pp.m, pp.l, pp.R, pp.K0, pp.K1, pp.alpha, pp.alpha1, tb.tol,
                  tb.tol_a, tb.tol_match_safety, tb.tol_E, tb.delta_frac,
                  tb.terminal_window_frac);
    return buf;
}

// RAII advisory lock on <dir>/.lock
class ScopedLock {
public:
    explicit ScopedLock(const std::filesystem::path& dir) {
        fd_ = ::open((dir / ".lock").c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ >= 0) ::flock(fd_, LOCK_EX);
    }
    ~ScopedLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    ScopedLock(const ScopedLock&) = delete;
    ScopedLock& operator=(const ScopedLock&) = delete;

private:
    int fd_ = -1;
};

}  // namespace catdetail

class Catalog {
public:
    // dir precedence: explicit argument, then $PLSHOOT_CATALOG, then
    // ./plshoot-catalog
    explicit Catalog(std::string dir = "") {
        if (dir.empty()) {
            if (const char* env = std::getenv("PLSHOOT_CATALOG")) dir = env;
        }
        if (dir.empty()) dir = "plshoot-catalog";
        dir_ = dir;
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }

    static std::string key_of(const ProblemParams& pp, const ToleranceBlock& tb) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(
                          catdetail::fnv1a(catdetail::canonical_string(pp, tb))));
        return buf;
    }

    void store(const CatalogEntry& e) {
        catdetail::ScopedLock lk(dir_);
        nlohmann::json j;
        j["key"] = e.key;
        j["n"] = e.n;
        j["a_n"] = e.a_n;
        j["artifact"] = e.artifact;
        write_file(entry_path(e.key, e.n), j.dump(2) + "\n");
        // refresh the index under the same lock
        nlohmann::json idx = index_unlocked(nullptr);
        idx[e.key + "-" + std::to_string(e.n)] = entry_path(e.key, e.n).filename().string();
        write_file(dir_ / "index.json", idx.dump(2) + "\n");
    }

    std::optional<CatalogEntry> query(const std::string& key, std::size_t n) const {
        catdetail::ScopedLock lk(dir_);
        const auto path = entry_path(key, n);
        std::ifstream in(path);
        if (!in) return std::nullopt;
        try {
            nlohmann::json j = nlohmann::json::parse(in);
            CatalogEntry e;
            e.key = j.at("key").get<std::string>();
            e.n = j.at("n").get<std::size_t>();
            e.a_n = j.at("a_n").get<double>();
            e.artifact = j.value("artifact", "");
            return e;
        } catch (const nlohmann::json::exception&) {
            return std::nullopt;
        }
    }

    // Index accessor; a corrupt index file is rebuilt from the entry files.
    nlohmann::json index(bool* rebuilt = nullptr) {
        catdetail::ScopedLock lk(dir_);
        return index_unlocked(rebuilt);
    }

private:
    nlohmann::json index_unlocked(bool* rebuilt) {
        std::ifstream in(dir_ / "index.json");
        if (in) {
            try {
                nlohmann::json idx = nlohmann::json::parse(in);
                if (idx.is_object()) {
                    if (rebuilt) *rebuilt = false;
                    return idx;
                }
            } catch (const nlohmann::json::exception&) {
            }
        }
        // rebuild from entries
        nlohmann::json idx = nlohmann::json::object();
        for (const auto& de : std::filesystem::directory_iterator(dir_)) {
            const auto name = de.path().filename().string();
            if (name == "index.json" || de.path().extension() != ".json") continue;
            std::ifstream ein(de.path());
            try {
                nlohmann::json j = nlohmann::json::parse(ein);
                idx[j.at("key").get<std::string>() + "-" +
                    std::to_string(j.at("n").get<std::size_t>())] = name;
            } catch (const nlohmann::json::exception&) {
            }
        }
        write_file(dir_ / "index.json", idx.dump(2) + "\n");
        if (rebuilt) *rebuilt = true;
        return idx;
    }

    std::filesystem::path entry_path(const std::string& key, std::size_t n) const {
        return dir_ / (key + "-" + std::to_string(n) + ".json");
    }

    static void write_file(const std::filesystem::path& p, const std::string& body) {
        std::ofstream out(p, std::ios::binary);
        out << body;
    }

    std::filesystem::path dir_;
};

}  // namespace plshoot
