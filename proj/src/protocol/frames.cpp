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

#include "octo/protocol/frames.hpp"

namespace octo::proto {

namespace {

Status read_status(ByteReader& r) {
    uint8_t v = r.u8();
    if (v > static_cast<uint8_t>(Status::NO_LEADER)) throw CodecError("bad status byte");
    return static_cast<Status>(v);
}

void put_records(ByteWriter& w, const std::vector<broker::Record>& records) {
    w.u32(static_cast<uint32_t>(records.size()));
    for (const auto& rec : records) {
        w.i64(rec.offset);
        w.i64(rec.timestamp_ms);
        w.blob32(rec.key);
        w.blob32(rec.value);
    }
}

std::vector<broker::Record> read_records(ByteReader& r) {
    uint32_t count = r.u32();
    std::vector<broker::Record> out;
    // Each record needs at least 24 bytes; reject absurd counts up front.
    if (count > r.remaining() / 24 + 1) throw CodecError("record count exceeds frame");
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        broker::Record rec;
        rec.offset = r.i64();
        rec.timestamp_ms = r.i64();
        rec.key = r.blob32();
        rec.value = r.blob32();
        out.push_back(std::move(rec));
    }
    return out;
}

void put_redirect(ByteWriter& w, Status st, int32_t leader, const std::string& addr) {
    if (st == Status::NOT_LEADER) {
        w.i32(leader);
        w.str16(addr);
    }
}

}  // namespace

Bytes encode(const Hello& m) {
    ByteWriter w;
    w.u8(m.version);
    if (m.nonce.size() != 16) throw CodecError("nonce must be 16 bytes");
    w.raw(m.nonce);
    return w.take();
}

Hello decode_hello(ByteReader& r) {
    Hello m;
    m.version = r.u8();
    if (r.remaining() != 16) throw CodecError("bad hello");
    m.nonce = r.rest();
    return m;
}

Bytes encode(const AuthReq& m) {
    ByteWriter w;
    w.str16(m.key_id);
    if (m.hmac.size() != 32) throw CodecError("hmac must be 32 bytes");
    w.raw(m.hmac);
    return w.take();
}

AuthReq decode_auth_req(ByteReader& r) {
    AuthReq m;
    m.key_id = r.str16();
    if (r.remaining() != 32) throw CodecError("bad auth");
    m.hmac = r.rest();
    return m;
}

Bytes encode(const AuthResp& m) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(m.status));
    w.str16(m.identity);
    return w.take();
}

AuthResp decode_auth_resp(ByteReader& r) {
    AuthResp m;
    m.status = read_status(r);
    m.identity = r.str16();
    r.expect_done();
    return m;
}

Bytes encode(const ProduceReq& m) {
    ByteWriter w;
    w.str16(m.topic);
    w.i32(m.partition);
    w.u8(m.acks);
    w.blob32(m.key);
    w.blob32(m.value);
    return w.take();
}

ProduceReq decode_produce_req(ByteReader& r) {
    ProduceReq m;
    m.topic = r.str16();
    m.partition = r.i32();
    m.acks = r.u8();
    m.key = r.blob32();
    m.value = r.blob32();
    r.expect_done();
    return m;
}

Bytes encode(const ProduceResp& m) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(m.status));
    w.i32(m.partition);
    w.i64(m.offset);
    put_redirect(w, m.status, m.leader, m.leader_addr);
    return w.take();
}

ProduceResp decode_produce_resp(ByteReader& r) {
    ProduceResp m;
    m.status = read_status(r);
    m.partition = r.i32();
    m.offset = r.i64();
    if (m.status == Status::NOT_LEADER) {
        m.leader = r.i32();
        m.leader_addr = r.str16();
    }
    r.expect_done();
    return m;
}

Bytes encode(const FetchReq& m) {
    ByteWriter w;
    w.str16(m.topic);
    w.i32(m.partition);
    w.i64(m.offset);
    w.u32(m.max_records);
    w.u32(m.max_bytes);
    return w.take();
}

FetchReq decode_fetch_req(ByteReader& r) {
    FetchReq m;
    m.topic = r.str16();
    m.partition = r.i32();
    m.offset = r.i64();
    m.max_records = r.u32();
    m.max_bytes = r.u32();
    r.expect_done();
    return m;
}

Bytes encode(const FetchResp& m) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(m.status));
    put_redirect(w, m.status, m.leader, m.leader_addr);
    put_records(w, m.records);
    return w.take();
}

FetchResp decode_fetch_resp(ByteReader& r) {
    FetchResp m;
    m.status = read_status(r);
    if (m.status == Status::NOT_LEADER) {
        m.leader = r.i32();
        m.leader_addr = r.str16();
    }
    m.records = read_records(r);
    r.expect_done();
    return m;
}

Bytes encode(const CommitReq& m) {
    ByteWriter w;
    w.str16(m.group);
    w.str16(m.topic);
    w.i32(m.partition);
    w.i64(m.offset);
    return w.take();
}

CommitReq decode_commit_req(ByteReader& r) {
    CommitReq m;
    m.group = r.str16();
    m.topic = r.str16();
    m.partition = r.i32();
    m.offset = r.i64();
    r.expect_done();
    return m;
}

Bytes encode(const CommitResp& m) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(m.status));
    return w.take();
}

CommitResp decode_commit_resp(ByteReader& r) {
    CommitResp m;
    m.status = read_status(r);
    r.expect_done();
    return m;
}

Bytes encode(const FetchCommittedReq& m) {
    ByteWriter w;
    w.str16(m.group);
    w.str16(m.topic);
    w.i32(m.partition);
    return w.take();
}

FetchCommittedReq decode_fetch_committed_req(ByteReader& r) {
    FetchCommittedReq m;
    m.group = r.str16();
    m.topic = r.str16();
    m.partition = r.i32();
    r.expect_done();
    return m;
}

Bytes encode(const FetchCommittedResp& m) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(m.status));
    w.i64(m.offset);
    return w.take();
}

FetchCommittedResp decode_fetch_committed_resp(ByteReader& r) {
    FetchCommittedResp m;
    m.status = read_status(r);
    m.offset = r.i64();
    r.expect_done();
    return m;
}

Bytes encode(const ListOffsetsReq& m) {
    ByteWriter w;
    w.str16(m.topic);
    w.i32(m.partition);
    w.i64(m.target);
    return w.take();
}

ListOffsetsReq decode_list_offsets_req(ByteReader& r) {
    ListOffsetsReq m;
    m.topic = r.str16();
    m.partition = r.i32();
    m.target = r.i64();
    r.expect_done();
    return m;
}

Bytes encode(const ListOffsetsResp& m) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(m.status));
    w.i64(m.offset);
    put_redirect(w, m.status, m.leader, m.leader_addr);
    return w.take();
}

ListOffsetsResp decode_list_offsets_resp(ByteReader& r) {
    ListOffsetsResp m;
    m.status = read_status(r);
    m.offset = r.i64();
    if (m.status == Status::NOT_LEADER) {
        m.leader = r.i32();
        m.leader_addr = r.str16();
    }
    r.expect_done();
    return m;
}

Bytes encode(const ReplicateReq& m) {
    ByteWriter w;
    w.str16(m.topic);
    w.i32(m.partition);
    w.i64(m.earliest);
    w.i64(m.base);
    put_records(w, m.records);
    return w.take();
}

ReplicateReq decode_replicate_req(ByteReader& r) {
    ReplicateReq m;
    m.topic = r.str16();
    m.partition = r.i32();
    m.earliest = r.i64();
    m.base = r.i64();
    m.records = read_records(r);
    r.expect_done();
    return m;
}

Bytes encode(const ReplicateResp& m) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(m.status));
    w.i64(m.log_end);
    return w.take();
}

ReplicateResp decode_replicate_resp(ByteReader& r) {
    ReplicateResp m;
    m.status = read_status(r);
    m.log_end = r.i64();
    r.expect_done();
    return m;
}

Bytes encode(const SyncReq& m) {
    ByteWriter w;
    w.str16(m.topic);
    w.i32(m.partition);
    w.i64(m.from);
    w.u32(m.max_records);
    return w.take();
}

SyncReq decode_sync_req(ByteReader& r) {
    SyncReq m;
    m.topic = r.str16();
    m.partition = r.i32();
    m.from = r.i64();
    m.max_records = r.u32();
    r.expect_done();
    return m;
}

Bytes encode(const SyncResp& m) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(m.status));
    w.i64(m.log_end);
    w.i64(m.earliest);
    put_records(w, m.records);
    return w.take();
}

SyncResp decode_sync_resp(ByteReader& r) {
    SyncResp m;
    m.status = read_status(r);
    m.log_end = r.i64();
    m.earliest = r.i64();
    m.records = read_records(r);
    r.expect_done();
    return m;
}

bool write_frame(net::TcpConn& conn, uint8_t opcode, const Bytes& body, int timeout_ms) {
    size_t payload = body.size() + 1;
    if (payload > kMaxFramePayload) throw CodecError("frame exceeds cap");
    Bytes out;
    out.reserve(4 + payload);
    uint32_t len = static_cast<uint32_t>(payload);
    out.push_back(static_cast<uint8_t>(len >> 24));
    out.push_back(static_cast<uint8_t>(len >> 16));
    out.push_back(static_cast<uint8_t>(len >> 8));
    out.push_back(static_cast<uint8_t>(len));
    out.push_back(opcode);
    out.insert(out.end(), body.begin(), body.end());
    return conn.write_all(out, timeout_ms);
}

bool read_frame(net::TcpConn& conn, uint8_t* opcode, Bytes* body, int timeout_ms) {
    uint8_t hdr[4];
    if (!conn.read_exact(hdr, 4, timeout_ms)) return false;
    uint32_t len = (hdr[0] << 24) | (hdr[1] << 16) | (hdr[2] << 8) | hdr[3];
    if (len < 1 || len > kMaxFramePayload) throw CodecError("bad frame length");
    Bytes payload(len);
    if (!conn.read_exact(payload.data(), len, timeout_ms)) return false;
    *opcode = payload[0];
    body->assign(payload.begin() + 1, payload.end());
    return true;
}

}  // namespace octo::proto
