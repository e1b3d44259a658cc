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

#include "octo/client/credentials.hpp"

#include <fstream>

#include "octo/common/error.hpp"
#include "octo/common/kvconfig.hpp"

namespace octo::client {

std::optional<Endpoint> Endpoint::parse(const std::string& addr) {
    auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= addr.size()) {
        return std::nullopt;
    }
    Endpoint ep;
    ep.host = addr.substr(0, colon);
    try {
        int port = std::stoi(addr.substr(colon + 1));
        if (port <= 0 || port > 65535) return std::nullopt;
        ep.port = static_cast<uint16_t>(port);
    } catch (...) {
        return std::nullopt;
    }
    return ep;
}

Credentials Credentials::load(const std::filesystem::path& path) {
    auto cfg = KvConfig::parse_file(path);
    Credentials creds;
    creds.key_id = cfg.get_or("key_id", "");
    if (!hex_decode(cfg.get_or("secret_hex", ""), creds.secret)) {
        throw ApiError(400, "BAD_CREDENTIALS", "secret_hex is not valid hex in " + path.string());
    }
    creds.control_url = cfg.get_or("control_url", "");
    for (const auto& addr : cfg.get_list("broker_addrs")) {
        auto ep = Endpoint::parse(addr);
        if (ep) creds.brokers.push_back(*ep);
    }
    if (creds.key_id.empty() || creds.brokers.empty()) {
        throw ApiError(400, "BAD_CREDENTIALS", "missing key_id or broker_addrs in " + path.string());
    }
    return creds;
}

void Credentials::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    {
        std::ofstream out(path, std::ios::trunc);
        out << "key_id = " << key_id << "\n";
        out << "secret_hex = " << hex_encode(secret) << "\n";
        out << "control_url = " << control_url << "\n";
        out << "broker_addrs = ";
        for (size_t i = 0; i < brokers.size(); ++i) {
            if (i) out << ",";
            out << brokers[i].str();
        }
        out << "\n";
    }
    std::filesystem::permissions(path, std::filesystem::perms::owner_read |
                                           std::filesystem::perms::owner_write);
}

}  // namespace octo::client
