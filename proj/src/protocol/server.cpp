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

#include "octo/protocol/server.hpp"

#include <chrono>

#include "octo/broker/cluster.hpp"
#include "octo/common/crypto.hpp"
#include "octo/protocol/frames.hpp"

namespace octo::broker {

using namespace std::chrono_literals;

namespace {
constexpr int kWriteTimeoutMs = 10'000;
constexpr int kBodyReadTimeoutMs = 10'000;
constexpr int kIdlePollMs = 100;
}  // namespace

ProtocolServer::ProtocolServer(Cluster& cluster, int broker_id, std::string host, uint16_t port)
    : cluster_(cluster), broker_id_(broker_id), host_(std::move(host)), port_(port) {}

ProtocolServer::~ProtocolServer() { stop(); }

bool ProtocolServer::start() {
    if (running_.exchange(true)) return true;
    if (!listener_.open(host_, port_)) {
        running_.store(false);
        return false;
    }
    accept_thread_ = std::thread([this] { accept_loop(); });
    return true;
}

void ProtocolServer::pause() {
    listener_.close();
    close_all_connections();
}

bool ProtocolServer::resume() {
    if (!running_.load()) return false;
    if (listener_.is_open()) return true;
    return listener_.open(host_, port_);
}

void ProtocolServer::stop() {
    if (!running_.exchange(false)) return;
    listener_.close();
    if (accept_thread_.joinable()) accept_thread_.join();
    close_all_connections();
    std::lock_guard lk(conns_mu_);
    for (auto& ctx : conns_) {
        if (ctx->thread.joinable()) ctx->thread.join();
    }
    conns_.clear();
}

void ProtocolServer::close_all_connections() {
    std::lock_guard lk(conns_mu_);
    for (auto& ctx : conns_) {
        if (ctx->conn) ctx->conn->shutdown();
    }
}

void ProtocolServer::reap_finished() {
    std::lock_guard lk(conns_mu_);
    for (auto it = conns_.begin(); it != conns_.end();) {
        if ((*it)->done.load()) {
            if ((*it)->thread.joinable()) (*it)->thread.join();
            it = conns_.erase(it);
        } else {
            ++it;
        }
    }
}

void ProtocolServer::accept_loop() {
    while (running_.load()) {
        if (!listener_.is_open()) {
            std::this_thread::sleep_for(50ms);
            continue;
        }
        auto conn = listener_.accept();
        if (!conn) {
            std::this_thread::sleep_for(5ms);
            continue;
        }
        if (cluster_.broker_halted(broker_id_)) continue;  // drop connection
        reap_finished();
        auto ctx = std::make_unique<ConnCtx>();
        ctx->conn = std::move(conn);
        auto* raw = ctx.get();
        {
            std::lock_guard lk(conns_mu_);
            conns_.push_back(std::move(ctx));
        }
        raw->thread = std::thread([this, raw] {
            try {
                handle_connection(raw);
            } catch (...) {
                // Never let a connection take the broker down.
            }
            raw->done.store(true);
        });
    }
}

void ProtocolServer::handle_connection(ConnCtx* ctx) {
    auto& conn = *ctx->conn;
    auto respond = [&](uint8_t opcode, const Bytes& body) {
        return proto::write_frame(conn, opcode | proto::RESP_BIT, body, kWriteTimeoutMs);
    };

    // Handshake: HELLO with a fresh nonce, then exactly one AUTH frame.
    proto::Hello hello;
    hello.nonce = random_bytes(16);
    if (!proto::write_frame(conn, proto::OP_HELLO, proto::encode(hello), kWriteTimeoutMs)) {
        return;
    }

    std::string identity;
    {
        uint8_t op = 0;
        Bytes body;
        try {
            if (!proto::read_frame(conn, &op, &body, kBodyReadTimeoutMs)) return;
            if (op != proto::OP_AUTH) {
                respond(op, proto::encode(proto::AuthResp{proto::Status::MALFORMED, ""}));
                return;
            }
            ByteReader r(body);
            auto auth = proto::decode_auth_req(r);
            Bytes secret;
            if (auth.key_id == kClusterIdentity) {
                secret = cluster_.meta().cluster_secret();
                identity = kClusterIdentity;
            } else {
                auto key = cluster_.meta().key(auth.key_id);
                if (key) {
                    secret = key->secret;
                    identity = key->identity_id;
                }
            }
            if (identity.empty() ||
                !digest_equal(hmac_sha256(secret, hello.nonce), auth.hmac)) {
                respond(proto::OP_AUTH,
                        proto::encode(proto::AuthResp{proto::Status::UNAUTHORIZED, ""}));
                return;
            }
        } catch (const CodecError&) {
            respond(proto::OP_AUTH, proto::encode(proto::AuthResp{proto::Status::MALFORMED, ""}));
            return;
        }
        if (!respond(proto::OP_AUTH, proto::encode(proto::AuthResp{proto::Status::OK, identity}))) {
            return;
        }
    }

    uint32_t rr_cursor = 0;

    for (;;) {
        if (!running_.load() || cluster_.broker_halted(broker_id_)) return;
        int rc = conn.wait_readable(kIdlePollMs);
        if (rc < 0) return;
        if (rc == 0) continue;

        uint8_t op = 0;
        Bytes body;
        try {
            if (!proto::read_frame(conn, &op, &body, kBodyReadTimeoutMs)) return;
        } catch (const CodecError&) {
            return;  // unframeable input; drop the connection
        }
        if (cluster_.broker_halted(broker_id_)) return;

        try {
            ByteReader r(body);
            switch (op) {
                case proto::OP_PRODUCE: {
                    auto req = proto::decode_produce_req(r);
                    proto::ProduceResp resp;
                    int32_t partition = req.partition;
                    if (partition < 0) {
                        partition = cluster_.resolve_partition(req.topic, req.key, &rr_cursor,
                                                               broker_id_);
                    }
                    int leader = cluster_.leader_of(req.topic, partition);
                    if (partition >= 0 && leader >= 0 && leader != broker_id_) {
                        resp.status = proto::Status::NOT_LEADER;
                        resp.partition = partition;
                        resp.leader = leader;
                        resp.leader_addr = cluster_.broker_addr(leader);
                    } else {
                        auto ar = cluster_.append(identity, req.topic, partition, req.acks,
                                                  std::move(req.key), std::move(req.value),
                                                  &rr_cursor);
                        resp.status = ar.status;
                        resp.partition = ar.partition;
                        resp.offset = ar.offset;
                        if (ar.status == proto::Status::NOT_LEADER) {
                            int l = cluster_.leader_of(req.topic, ar.partition);
                            resp.leader = l;
                            if (l >= 0) resp.leader_addr = cluster_.broker_addr(l);
                        }
                    }
                    if (req.acks != 0) {
                        if (!respond(op, proto::encode(resp))) return;
                    }
                    break;
                }
                case proto::OP_FETCH: {
                    auto req = proto::decode_fetch_req(r);
                    proto::FetchResp resp;
                    int leader = cluster_.leader_of(req.topic, req.partition);
                    if (leader >= 0 && leader != broker_id_) {
                        resp.status = proto::Status::NOT_LEADER;
                        resp.leader = leader;
                        resp.leader_addr = cluster_.broker_addr(leader);
                    } else {
                        auto fr = cluster_.fetch(identity, req.topic, req.partition, req.offset,
                                                 req.max_records, req.max_bytes, true);
                        resp.status = fr.status;
                        resp.records = std::move(fr.records);
                    }
                    if (!respond(op, proto::encode(resp))) return;
                    break;
                }
                case proto::OP_COMMIT: {
                    auto req = proto::decode_commit_req(r);
                    proto::CommitResp resp;
                    if (!cluster_.has_permission(identity, req.topic, Permission::READ)) {
                        resp.status = proto::Status::UNAUTHORIZED;
                    } else {
                        resp.status = cluster_.commit_offset(req.group, req.topic, req.partition,
                                                             req.offset);
                    }
                    if (!respond(op, proto::encode(resp))) return;
                    break;
                }
                case proto::OP_FETCH_COMMITTED: {
                    auto req = proto::decode_fetch_committed_req(r);
                    proto::FetchCommittedResp resp;
                    if (!cluster_.has_permission(identity, req.topic, Permission::READ)) {
                        resp.status = proto::Status::UNAUTHORIZED;
                    } else {
                        resp.offset = cluster_.fetch_committed(req.group, req.topic, req.partition);
                    }
                    if (!respond(op, proto::encode(resp))) return;
                    break;
                }
                case proto::OP_LIST_OFFSETS: {
                    auto req = proto::decode_list_offsets_req(r);
                    auto lr = cluster_.lookup_offset(identity, req.topic, req.partition,
                                                     req.target);
                    proto::ListOffsetsResp resp;
                    resp.status = lr.status;
                    resp.offset = lr.offset;
                    if (!respond(op, proto::encode(resp))) return;
                    break;
                }
                case proto::OP_REPLICATE: {
                    auto req = proto::decode_replicate_req(r);
                    proto::ReplicateResp resp;
                    if (identity != kClusterIdentity) {
                        resp.status = proto::Status::UNAUTHORIZED;
                    } else {
                        proto::Status st = proto::Status::OK;
                        resp.log_end = cluster_.apply_replicate(broker_id_, req.topic,
                                                                req.partition, req.earliest,
                                                                req.base, req.records, &st);
                        resp.status = st;
                    }
                    if (!respond(op, proto::encode(resp))) return;
                    break;
                }
                case proto::OP_SYNC: {
                    auto req = proto::decode_sync_req(r);
                    proto::SyncResp resp;
                    if (identity != kClusterIdentity) {
                        resp.status = proto::Status::UNAUTHORIZED;
                    } else {
                        auto sr = cluster_.sync_read(broker_id_, req.topic, req.partition,
                                                     req.from, req.max_records, &resp.log_end,
                                                     &resp.earliest);
                        resp.status = sr.status;
                        resp.records = std::move(sr.records);
                    }
                    if (!respond(op, proto::encode(resp))) return;
                    break;
                }
                default: {
                    // Unknown opcode: one MALFORMED status byte, then close.
                    ByteWriter w;
                    w.u8(static_cast<uint8_t>(proto::Status::MALFORMED));
                    respond(op, w.take());
                    return;
                }
            }
        } catch (const CodecError&) {
            ByteWriter w;
            w.u8(static_cast<uint8_t>(proto::Status::MALFORMED));
            respond(op, w.take());
            return;
        }
    }
}

}  // namespace octo::broker
