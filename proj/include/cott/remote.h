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

#pragma once

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <string>

#include "cott/agent.h"
#include "cott/tools.h"

namespace cott {

/// Plain-HTTP JSON endpoint. `url` is "http://host[:port][/path]".
struct RemoteEndpoint {
    std::string url;
    /// Sent as "Authorization: Bearer <key>" when non-empty.
    std::string api_key;
    std::chrono::milliseconds timeout{30000};
    size_t max_in_flight = 4;
};

/// Reads COTT_<NAME>_URL and COTT_<NAME>_API_KEY, NAME upper-cased.
/// Returns nullopt when the URL variable is unset or empty.
std::optional<RemoteEndpoint>
endpoint_from_env(std::string_view name);

/// Caps concurrent requests to one endpoint.
class InFlightLimiter {
public:
    explicit InFlightLimiter(size_t limit) : available_(limit == 0 ? 1 : limit) {
    }

    void
    acquire();

    void
    release();

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    size_t available_;
};

/// POSTs {"tool", "arguments", "view_id"} and expects {"payload": str}.
/// Non-2xx replies raise REMOTE, connection timeouts raise TIMEOUT.
class HttpToolBackend final : public Backend {
public:
    HttpToolBackend(ToolName tool, RemoteEndpoint endpoint, std::string view_id);

    ToolName
    tool() const override {
        return tool_;
    }

    Observation
    execute(const ValidatedCall& call) override;

private:
    ToolName tool_;
    RemoteEndpoint endpoint_;
    std::string view_id_;
    InFlightLimiter limiter_;
};

/// POSTs {"messages": [{"role","content"}...]} and expects {"text": str}.
class HttpPolicy final : public PolicyAdapter {
public:
    explicit HttpPolicy(RemoteEndpoint endpoint);

    std::string
    generate(std::span<const Message> messages) override;

private:
    RemoteEndpoint endpoint_;
    InFlightLimiter limiter_;
};

/// Sends `body` and returns the parsed JSON reply's `field`.
std::string
post_json(const RemoteEndpoint& endpoint, const std::string& body, std::string_view field);

}  // namespace cott
