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

#include <memory>
#include <string>

#include "octo/client/credentials.hpp"
#include "octo/common/net.hpp"
#include "octo/protocol/frames.hpp"

namespace octo::client {

// One authenticated data-plane connection. Requests on a connection are
// answered in order; pipelined use pairs send() with a reader calling
// recv() (one reader, one writer).
class Connection {
public:
    static std::unique_ptr<Connection> dial(const Endpoint& ep, const std::string& key_id,
                                            const Bytes& secret, int timeout_ms,
                                            std::string* identity_out = nullptr);

    bool send(uint8_t opcode, const Bytes& body, int timeout_ms);
    // False on EOF/timeout; throws CodecError on an invalid frame.
    bool recv(uint8_t* opcode, Bytes* body, int timeout_ms);
    bool request(uint8_t opcode, const Bytes& body, uint8_t* resp_opcode, Bytes* resp_body,
                 int timeout_ms);
    void shutdown() {
        if (conn_) conn_->shutdown();
    }
    const Endpoint& endpoint() const { return endpoint_; }

private:
    Endpoint endpoint_;
    std::unique_ptr<net::TcpConn> conn_;
};

}  // namespace octo::client
