// Copyright 2026 The Octo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "octo/common/bytes.hpp"

namespace octo::client {

struct Endpoint {
    std::string host;
    uint16_t port = 0;

    static std::optional<Endpoint> parse(const std::string& addr);
    std::string str() const { return host + ":" + std::to_string(port); }
    bool operator<(const Endpoint& o) const {
        return host < o.host || (host == o.host && port < o.port);
    }
    bool operator==(const Endpoint& o) const { return host == o.host && port == o.port; }
};

// Local credential cache: data-plane key and secret plus the endpoints
// needed to reach the fabric. Plain key=value lines, written with owner-only
// permissions.
struct Credentials {
    std::string key_id;
    Bytes secret;
    std::string control_url;
    std::vector<Endpoint> brokers;

    static Credentials load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

}  // namespace octo::client
