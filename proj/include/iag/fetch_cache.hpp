#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "iag/backends/interfaces.hpp"

namespace iag {

// On-disk page store keyed by normalized URL. Bodies live in content-addressed
// files next to an append-only index.jsonl; later index lines win.
class FetchCache {
public:
    explicit FetchCache(std::filesystem::path dir);

    std::optional<FetchResponse> lookup(const std::string& url) const;
    void store(const std::string& url, const FetchResponse& response);
    std::size_t size() const;

    const std::filesystem::path& dir() const { return dir_; }

private:
    struct Entry {
        int status = 0;
        std::string content_type;
        std::string file;
    };

    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::map<std::string, Entry> index_;
};

// Serves pages from the cache and records misses fetched from `upstream`.
// With no upstream (offline replay) a miss is a fetch failure.
class CachingFetcher final : public Fetcher {
public:
    CachingFetcher(std::shared_ptr<FetchCache> cache, std::shared_ptr<const Fetcher> upstream);
    FetchResponse fetch(const std::string& url) const override;

private:
    std::shared_ptr<FetchCache> cache_;
    std::shared_ptr<const Fetcher> upstream_;
};

}  // namespace iag
