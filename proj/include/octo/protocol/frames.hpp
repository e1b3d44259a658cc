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

#include <string>
#include <vector>

#include "octo/broker/record.hpp"
#include "octo/common/net.hpp"
#include "octo/common/wire.hpp"
#include "octo/protocol/status.hpp"

namespace octo::proto {

// Request opcodes; the matching response is opcode | 0x80.
constexpr uint8_t OP_HELLO = 0x00;
constexpr uint8_t OP_AUTH = 0x01;
constexpr uint8_t OP_PRODUCE = 0x02;
constexpr uint8_t OP_FETCH = 0x03;
constexpr uint8_t OP_COMMIT = 0x04;
constexpr uint8_t OP_FETCH_COMMITTED = 0x05;
constexpr uint8_t OP_LIST_OFFSETS = 0x06;
constexpr uint8_t OP_REPLICATE = 0x10;  // internal, cluster-authenticated
constexpr uint8_t OP_SYNC = 0x11;       // internal, cluster-authenticated
constexpr uint8_t RESP_BIT = 0x80;

constexpr uint8_t kProtocolVersion = 1;
// Hard cap on frame payload (opcode + body).
constexpr size_t kMaxFramePayload = 8u << 20;
// Producers may not exceed this key+value size so that any single-record
// response still fits in a legal frame.
constexpr size_t kMaxRecordBytes = 7u << 20;

struct Hello {
    uint8_t version = kProtocolVersion;
    Bytes nonce;  // 16 bytes
};
struct AuthReq {
    std::string key_id;
    Bytes hmac;  // HMAC-SHA256(secret, nonce), 32 bytes
};
struct AuthResp {
    Status status = Status::OK;
    std::string identity;
};
struct ProduceReq {
    std::string topic;
    int32_t partition = -1;  // -1 = key-routed
    uint8_t acks = 1;        // 0, 1, or 255 = ALL
    Bytes key;
    Bytes value;
};
struct ProduceResp {
    Status status = Status::OK;
    int32_t partition = -1;
    int64_t offset = -1;
    // Present only when status == NOT_LEADER.
    int32_t leader = -1;
    std::string leader_addr;
};
struct FetchReq {
    std::string topic;
    int32_t partition = 0;
    int64_t offset = 0;
    uint32_t max_records = 0;
    uint32_t max_bytes = 0;
};
struct FetchResp {
    Status status = Status::OK;
    std::vector<broker::Record> records;
    int32_t leader = -1;
    std::string leader_addr;
};
struct CommitReq {
    std::string group;
    std::string topic;
    int32_t partition = 0;
    int64_t offset = 0;
};
struct CommitResp {
    Status status = Status::OK;
};
struct FetchCommittedReq {
    std::string group;
    std::string topic;
    int32_t partition = 0;
};
struct FetchCommittedResp {
    Status status = Status::OK;
    int64_t offset = -1;  // -1 = never committed
};
struct ListOffsetsReq {
    std::string topic;
    int32_t partition = 0;
    int64_t target = -1;  // -2 earliest, -1 latest, else timestamp_ms
};
struct ListOffsetsResp {
    Status status = Status::OK;
    int64_t offset = -1;
    int32_t leader = -1;
    std::string leader_addr;
};
struct ReplicateReq {
    std::string topic;
    int32_t partition = 0;
    int64_t earliest = 0;  // leader's earliest retained offset
    int64_t base = 0;      // offset of records.front(), == follower log end
    std::vector<broker::Record> records;
};
struct ReplicateResp {
    Status status = Status::OK;
    int64_t log_end = 0;  // follower's log end after applying
};
struct SyncReq {
    std::string topic;
    int32_t partition = 0;
    int64_t from = 0;
    uint32_t max_records = 0;
};
struct SyncResp {
    Status status = Status::OK;
    int64_t log_end = 0;    // leader's log end
    int64_t earliest = 0;   // leader's earliest retained offset
    std::vector<broker::Record> records;
};

Bytes encode(const Hello&);
Bytes encode(const AuthReq&);
Bytes encode(const AuthResp&);
Bytes encode(const ProduceReq&);
Bytes encode(const ProduceResp&);
Bytes encode(const FetchReq&);
Bytes encode(const FetchResp&);
Bytes encode(const CommitReq&);
Bytes encode(const CommitResp&);
Bytes encode(const FetchCommittedReq&);
Bytes encode(const FetchCommittedResp&);
Bytes encode(const ListOffsetsReq&);
Bytes encode(const ListOffsetsResp&);
Bytes encode(const ReplicateReq&);
Bytes encode(const ReplicateResp&);
Bytes encode(const SyncReq&);
Bytes encode(const SyncResp&);

// All decoders throw CodecError on malformed input and require the reader
// to be fully consumed.
Hello decode_hello(ByteReader& r);
AuthReq decode_auth_req(ByteReader& r);
AuthResp decode_auth_resp(ByteReader& r);
ProduceReq decode_produce_req(ByteReader& r);
ProduceResp decode_produce_resp(ByteReader& r);
FetchReq decode_fetch_req(ByteReader& r);
FetchResp decode_fetch_resp(ByteReader& r);
CommitReq decode_commit_req(ByteReader& r);
CommitResp decode_commit_resp(ByteReader& r);
FetchCommittedReq decode_fetch_committed_req(ByteReader& r);
FetchCommittedResp decode_fetch_committed_resp(ByteReader& r);
ListOffsetsReq decode_list_offsets_req(ByteReader& r);
ListOffsetsResp decode_list_offsets_resp(ByteReader& r);
ReplicateReq decode_replicate_req(ByteReader& r);
ReplicateResp decode_replicate_resp(ByteReader& r);
SyncReq decode_sync_req(ByteReader& r);
SyncResp decode_sync_resp(ByteReader& r);

// Frame I/O: [length u32 BE][opcode u8][body]. length counts opcode + body
// and is capped at kMaxFramePayload.
bool write_frame(net::TcpConn& conn, uint8_t opcode, const Bytes& body, int timeout_ms);
// Returns false on clean EOF or timeout; throws CodecError on an oversized
// or undersized frame.
bool read_frame(net::TcpConn& conn, uint8_t* opcode, Bytes* body, int timeout_ms);

}  // namespace octo::proto
