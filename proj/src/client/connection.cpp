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

#include "octo/client/connection.hpp"

#include "octo/common/crypto.hpp"

namespace octo::client {

std::unique_ptr<Connection> Connection::dial(const Endpoint& ep, const std::string& key_id,
                                             const Bytes& secret, int timeout_ms,
                                             std::string* identity_out) {
    auto tcp = net::TcpConn::connect(ep.host, ep.port, timeout_ms);
    if (!tcp) return nullptr;
    try {
        uint8_t op = 0;
        Bytes body;
        if (!proto::read_frame(*tcp, &op, &body, timeout_ms) || op != proto::OP_HELLO) {
            return nullptr;
        }
        ByteReader r(body);
        auto hello = proto::decode_hello(r);
        if (hello.version != proto::kProtocolVersion) return nullptr;

        proto::AuthReq auth{key_id, hmac_sha256(secret, hello.nonce)};
        if (!proto::write_frame(*tcp, proto::OP_AUTH, proto::encode(auth), timeout_ms)) {
            return nullptr;
        }
        if (!proto::read_frame(*tcp, &op, &body, timeout_ms) ||
            op != (proto::OP_AUTH | proto::RESP_BIT)) {
            return nullptr;
        }
        ByteReader ar(body);
        auto resp = proto::decode_auth_resp(ar);
        if (resp.status != proto::Status::OK) return nullptr;
        if (identity_out) *identity_out = resp.identity;
    } catch (const CodecError&) {
        return nullptr;
    }
    auto conn = std::unique_ptr<Connection>(new Connection());
    conn->endpoint_ = ep;
    conn->conn_ = std::move(tcp);
    return conn;
}

bool Connection::send(uint8_t opcode, const Bytes& body, int timeout_ms) {
    return conn_ && proto::write_frame(*conn_, opcode, body, timeout_ms);
}

bool Connection::recv(uint8_t* opcode, Bytes* body, int timeout_ms) {
    return conn_ && proto::read_frame(*conn_, opcode, body, timeout_ms);
}

bool Connection::request(uint8_t opcode, const Bytes& body, uint8_t* resp_opcode,
                         Bytes* resp_body, int timeout_ms) {
    if (!send(opcode, body, timeout_ms)) return false;
    try {
        return recv(resp_opcode, resp_body, timeout_ms);
    } catch (const CodecError&) {
        return false;
    }
}

}  // namespace octo::client
