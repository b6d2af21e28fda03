#include "iag/fetch_cache.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "iag/core/errors.hpp"
#include "iag/core/text.hpp"
#include "iag/core/url.hpp"

namespace iag {

namespace fs = std::filesystem;

FetchCache::FetchCache(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    std::ifstream in(dir_ / "index.jsonl");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            auto j = json::parse(line);
            index_[j.at("url").get<std::string>()] = {j.at("status").get<int>(),
                                                      j.value("content_type", std::string{}),
                                                      j.at("file").get<std::string>()};
        } catch (const json::exception& e) {
            throw ParseError((dir_ / "index.jsonl").string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::optional<FetchResponse> FetchCache::lookup(const std::string& url) const {
    Entry entry;
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = index_.find(normalize_url(url));
        if (it == index_.end()) return std::nullopt;
        entry = it->second;
    }
    std::ifstream in(dir_ / entry.file, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream body;
    body << in.rdbuf();
    return FetchResponse{entry.status, entry.content_type, body.str()};
}

void FetchCache::store(const std::string& url, const FetchResponse& response) {
    const std::string key = normalize_url(url);
    const std::string file = hex64(fnv1a64(response.body)) + ".body";

    std::lock_guard<std::mutex> lock(mu_);
    if (!fs::exists(dir_ / file)) {
        std::ofstream out(dir_ / file, std::ios::binary);
        out << response.body;
    }
    json line{{"url", key}, {"status", response.status}, {"content_type", response.content_type}, {"file", file}};
    std::ofstream index(dir_ / "index.jsonl", std::ios::app);
    index << line.dump() << '\n';
    index_[key] = {response.status, response.content_type, file};
}

std::size_t FetchCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return index_.size();
}

CachingFetcher::CachingFetcher(std::shared_ptr<FetchCache> cache, std::shared_ptr<const Fetcher> upstream)
    : cache_(std::move(cache)), upstream_(std::move(upstream)) {}

FetchResponse CachingFetcher::fetch(const std::string& url) const {
    if (auto hit = cache_->lookup(url)) return *hit;
    if (!upstream_) throw BackendUnavailable(url + ": not in fetch cache", 0);
    FetchResponse response = upstream_->fetch(url);
    cache_->store(url, response);
    return response;
}

}  // namespace iag
