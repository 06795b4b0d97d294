#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pot/util.hpp"

namespace pot {

/// Stable 128-bit content digest rendered as 32 hex chars.
inline std::string content_digest(std::string_view content) {
    std::uint64_t a = fnv1a64(content);
    std::uint64_t b = fnv1a64(content, 0x9ae16a3b2f90404full);
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(a),
                  static_cast<unsigned long long>(b));
    return buf;
}

/// Content-addressed store of raw response bodies plus an append-only
/// index. Writes are atomic (temp file + rename); a corrupt entry is
/// treated as a miss and overwritten.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    /// Returns the cached body for `digest`, or invokes `fetch`, persists
    /// the result and returns it.
    std::string get_or_fetch(const std::string& digest, const std::string& note,
                             const std::function<std::string()>& fetch) {
        {
            std::lock_guard lock(mutex_);
            if (auto hit = read_entry(digest)) return *hit;
        }
        std::string body = fetch();
        std::lock_guard lock(mutex_);
        write_entry(digest, body, note);
        return body;
    }

    bool contains(const std::string& digest) const {
        std::lock_guard lock(mutex_);
        return read_entry(digest).has_value();
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::optional<std::string> read_entry(const std::string& digest) const {
        auto path = dir_ / (digest + ".json");
        std::ifstream in(path, std::ios::binary);
        if (!in) return std::nullopt;
        std::ostringstream buf;
        buf << in.rdbuf();
        std::string body = buf.str();
        if (nlohmann::json::accept(body)) return body;
        std::cerr << "pot: corrupt cache entry " << path.string() << ", refetching\n";
        return std::nullopt;
    }

    void write_entry(const std::string& digest, const std::string& body, const std::string& note) {
        auto path = dir_ / (digest + ".json");
        auto tmp = dir_ / (digest + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("ResponseCache: cannot write " + tmp.string());
            out << body;
        }
        std::filesystem::rename(tmp, path);

        std::ofstream index(dir_ / "index.jsonl", std::ios::app);
        nlohmann::json row{{"digest", digest}, {"note", note}, {"bytes", body.size()}};
        index << row.dump() << "\n";
    }

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

} // namespace pot
