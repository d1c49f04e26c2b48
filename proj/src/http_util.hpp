#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "mms/errors.hpp"

namespace mms::detail {

struct SplitUrl {
    std::string base;
    std::string path;
};

inline SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string env_or_empty(const char* name) {
    const char* value = std::getenv(name);
    return value ? std::string(value) : std::string();
}

// POST with bearer auth and bounded retry on transport failures. A fresh
// client per call keeps this safe under concurrent workers.
inline nlohmann::json post_json(const std::string& url, const std::string& key,
                                const nlohmann::json& body, int max_retries, const char* what) {
    const SplitUrl split = split_url(url);
    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, max_retries); ++attempt) {
        httplib::Client client(split.base);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
        auto res = client.Post(split.path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("bad JSON body: ") + e.what();
        }
    }
    throw TransportError(std::string(what) + " request to " + url + " failed after retries: " +
                         last_error);
}

} // namespace mms::detail
