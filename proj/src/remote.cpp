// Copyright 2026-present the cott-runtime project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cott/remote.h"

#include <cctype>
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace cott {
namespace {

using json = nlohmann::json;

struct SplitUrl {
    std::string base;
    std::string path;
};

SplitUrl
split_url(const std::string& url) {
    if (!url.starts_with("http://")) {
        throw Error(ErrorType::INVALID_ARGUMENT, "only http:// endpoints are supported: " + url);
    }
    size_t slash = url.find('/', 7);
    if (slash == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, slash), url.substr(slash)};
}

class Permit {
public:
    explicit Permit(InFlightLimiter& limiter) : limiter_(limiter) {
        limiter_.acquire();
    }
    ~Permit() {
        limiter_.release();
    }
    Permit(const Permit&) = delete;
    Permit&
    operator=(const Permit&) = delete;

private:
    InFlightLimiter& limiter_;
};

std::string
env_or_empty(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    return v == nullptr ? std::string() : std::string(v);
}

}  // namespace

std::optional<RemoteEndpoint>
endpoint_from_env(std::string_view name) {
    std::string upper;
    for (char c : name) {
        upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    std::string url = env_or_empty("COTT_" + upper + "_URL");
    if (url.empty()) {
        return std::nullopt;
    }
    RemoteEndpoint ep;
    ep.url = url;
    ep.api_key = env_or_empty("COTT_" + upper + "_API_KEY");
    return ep;
}

void
InFlightLimiter::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return available_ > 0; });
    --available_;
}

void
InFlightLimiter::release() {
    {
        std::lock_guard lock(mutex_);
        ++available_;
    }
    cv_.notify_one();
}

std::string
post_json(const RemoteEndpoint& endpoint, const std::string& body, std::string_view field) {
    SplitUrl url = split_url(endpoint.url);
    httplib::Client client(url.base);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!endpoint.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + endpoint.api_key);
    }

    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
        auto err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::Write ||
            err == httplib::Error::ConnectionTimeout) {
            throw Error(ErrorType::TIMEOUT, endpoint.url + ": " + httplib::to_string(err));
        }
        throw Error(ErrorType::REMOTE, endpoint.url + ": " + httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorType::REMOTE,
                    endpoint.url + " answered " + std::to_string(res->status) + ": " + res->body);
    }
    json reply = json::parse(res->body, nullptr, false);
    std::string key(field);
    if (reply.is_discarded() || !reply.is_object() || !reply.contains(key) ||
        !reply[key].is_string()) {
        throw Error(ErrorType::REMOTE, endpoint.url + ": reply has no string field '" + key + "'");
    }
    return reply[key].get<std::string>();
}

HttpToolBackend::HttpToolBackend(ToolName tool, RemoteEndpoint endpoint, std::string view_id)
    : tool_(tool),
      endpoint_(std::move(endpoint)),
      view_id_(std::move(view_id)),
      limiter_(endpoint_.max_in_flight) {
    split_url(endpoint_.url);
}

Observation
HttpToolBackend::execute(const ValidatedCall& call) {
    json request;
    request["tool"] = tool_name(call.call.name());
    request["arguments"] = json::parse(tool_call_json(call.call))["arguments"];
    request["view_id"] = view_id_;
    Permit permit(limiter_);
    Observation obs;
    obs.payload = post_json(endpoint_, request.dump(-1, ' ', false, json::error_handler_t::replace),
                            "payload");
    return obs;
}

HttpPolicy::HttpPolicy(RemoteEndpoint endpoint)
    : endpoint_(std::move(endpoint)), limiter_(endpoint_.max_in_flight) {
    split_url(endpoint_.url);
}

std::string
HttpPolicy::generate(std::span<const Message> messages) {
    json request;
    request["messages"] = json::array();
    for (const auto& m : messages) {
        request["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    Permit permit(limiter_);
    return post_json(endpoint_, request.dump(-1, ' ', false, json::error_handler_t::replace),
                     "text");
}

}  // namespace cott
