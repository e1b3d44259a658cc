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

#include "octo/client/consumer.hpp"

#include <algorithm>

#include "octo/common/clock.hpp"
#include "octo/common/error.hpp"

namespace octo::client {

Consumer::Consumer(Credentials creds, ConsumerConfig cfg)
    : creds_(std::move(creds)), cfg_(cfg) {
    last_auto_commit_us_ = steady_now_us();
}

Consumer::~Consumer() { close(); }

void Consumer::close() {
    if (closed_) return;
    closed_ = true;
    conns_.clear();
}

void Consumer::assign(const std::string& topic, const std::vector<int32_t>& partitions) {
    for (int32_t p : partitions) {
        Assignment a;
        a.topic = topic;
        a.partition = p;
        assignments_.push_back(std::move(a));
    }
}

Connection* Consumer::any_conn() {
    for (size_t i = 0; i < creds_.brokers.size(); ++i) {
        const auto& ep = creds_.brokers[(rr_ + i) % creds_.brokers.size()];
        auto it = conns_.find(ep);
        if (it != conns_.end() && it->second) return it->second.get();
        auto conn = Connection::dial(ep, creds_.key_id, creds_.secret, cfg_.connect_timeout_ms);
        if (conn) {
            auto* raw = conn.get();
            conns_[ep] = std::move(conn);
            return raw;
        }
    }
    ++rr_;
    return nullptr;
}

Connection* Consumer::leader_conn(const std::string& topic, int32_t partition,
                                  bool force_reconnect) {
    auto key = std::make_pair(topic, partition);
    auto lit = leaders_.find(key);
    if (lit != leaders_.end()) {
        if (force_reconnect) {
            conns_.erase(lit->second);
            leaders_.erase(lit);
        } else {
            auto cit = conns_.find(lit->second);
            if (cit != conns_.end() && cit->second) return cit->second.get();
            auto conn = Connection::dial(lit->second, creds_.key_id, creds_.secret,
                                         cfg_.connect_timeout_ms);
            if (conn) {
                auto* raw = conn.get();
                conns_[lit->second] = std::move(conn);
                return raw;
            }
            leaders_.erase(lit);
        }
    }
    return any_conn();
}

bool Consumer::resolve_position(Assignment& a) {
    Connection* conn = leader_conn(a.topic, a.partition, false);
    if (!conn) return false;

    // Committed group offsets take precedence over the configured start.
    if (!cfg_.group_id.empty()) {
        proto::FetchCommittedReq req{cfg_.group_id, a.topic, a.partition};
        uint8_t op = 0;
        Bytes body;
        if (conn->request(proto::OP_FETCH_COMMITTED, proto::encode(req), &op, &body,
                          cfg_.request_timeout_ms) &&
            op == (proto::OP_FETCH_COMMITTED | proto::RESP_BIT)) {
            try {
                ByteReader r(body);
                auto resp = proto::decode_fetch_committed_resp(r);
                if (resp.status == proto::Status::OK && resp.offset >= 0) {
                    a.position = resp.offset;
                    a.committed = resp.offset;
                    return true;
                }
            } catch (const CodecError&) {
                return false;
            }
        } else {
            return false;
        }
    }

    int64_t target;
    switch (cfg_.start) {
        case ConsumerConfig::Start::EARLIEST: target = proto::kTargetEarliest; break;
        case ConsumerConfig::Start::LATEST: target = proto::kTargetLatest; break;
        case ConsumerConfig::Start::TIMESTAMP: target = cfg_.start_timestamp_ms; break;
        default: target = proto::kTargetLatest; break;
    }
    proto::ListOffsetsReq req{a.topic, a.partition, target};
    uint8_t op = 0;
    Bytes body;
    if (!conn->request(proto::OP_LIST_OFFSETS, proto::encode(req), &op, &body,
                       cfg_.request_timeout_ms) ||
        op != (proto::OP_LIST_OFFSETS | proto::RESP_BIT)) {
        return false;
    }
    try {
        ByteReader r(body);
        auto resp = proto::decode_list_offsets_resp(r);
        if (resp.status != proto::Status::OK) return false;
        a.position = resp.offset;
    } catch (const CodecError&) {
        return false;
    }
    return true;
}

std::vector<ConsumedRecord> Consumer::poll(size_t max_records) {
    OCTO_CHECK(!assignments_.empty(), "poll before assign");
    maybe_auto_commit();

    std::vector<ConsumedRecord> out;
    max_records = std::min(max_records, static_cast<size_t>(cfg_.max_poll_records));

    for (size_t scanned = 0; scanned < assignments_.size() && out.size() < max_records;
         ++scanned) {
        Assignment& a = assignments_[cursor_ % assignments_.size()];
        ++cursor_;
        if (a.position < 0 && !resolve_position(a)) continue;

        Connection* conn = leader_conn(a.topic, a.partition, false);
        if (!conn) continue;

        proto::FetchReq req;
        req.topic = a.topic;
        req.partition = a.partition;
        req.offset = a.position;
        req.max_records = static_cast<uint32_t>(max_records - out.size());
        req.max_bytes = static_cast<uint32_t>(cfg_.receive_buffer_bytes);
        uint8_t op = 0;
        Bytes body;
        if (!conn->request(proto::OP_FETCH, proto::encode(req), &op, &body,
                           cfg_.request_timeout_ms) ||
            op != (proto::OP_FETCH | proto::RESP_BIT)) {
            leader_conn(a.topic, a.partition, true);
            continue;
        }
        proto::FetchResp resp;
        try {
            ByteReader r(body);
            resp = proto::decode_fetch_resp(r);
        } catch (const CodecError&) {
            leader_conn(a.topic, a.partition, true);
            continue;
        }
        switch (resp.status) {
            case proto::Status::OK:
                for (auto& rec : resp.records) {
                    a.position = rec.offset + 1;
                    out.push_back(ConsumedRecord{a.topic, a.partition, std::move(rec)});
                }
                if (!out.empty()) return out;
                break;
            case proto::Status::NOT_LEADER: {
                auto ep = Endpoint::parse(resp.leader_addr);
                if (ep) {
                    leaders_[{a.topic, a.partition}] = *ep;
                } else {
                    leaders_.erase({a.topic, a.partition});
                }
                break;
            }
            case proto::Status::OFFSET_OUT_OF_RANGE: {
                // Retention moved past our position; restart from earliest.
                ++resets_;
                proto::ListOffsetsReq lr{a.topic, a.partition, proto::kTargetEarliest};
                uint8_t lop = 0;
                Bytes lbody;
                if (conn->request(proto::OP_LIST_OFFSETS, proto::encode(lr), &lop, &lbody,
                                  cfg_.request_timeout_ms)) {
                    try {
                        ByteReader r(lbody);
                        auto lresp = proto::decode_list_offsets_resp(r);
                        if (lresp.status == proto::Status::OK) a.position = lresp.offset;
                    } catch (const CodecError&) {
                    }
                }
                break;
            }
            default:
                break;
        }
    }
    return out;
}

bool Consumer::commit_one(const Assignment& a) {
    if (a.position < 0) return true;  // nothing consumed yet
    Connection* conn = any_conn();
    if (!conn) return false;
    proto::CommitReq req{cfg_.group_id, a.topic, a.partition, a.position};
    uint8_t op = 0;
    Bytes body;
    if (!conn->request(proto::OP_COMMIT, proto::encode(req), &op, &body,
                       cfg_.request_timeout_ms) ||
        op != (proto::OP_COMMIT | proto::RESP_BIT)) {
        conns_.clear();
        return false;
    }
    try {
        ByteReader r(body);
        return proto::decode_commit_resp(r).status == proto::Status::OK;
    } catch (const CodecError&) {
        return false;
    }
}

bool Consumer::commit_sync() {
    if (cfg_.group_id.empty()) return true;
    bool all_ok = true;
    for (auto& a : assignments_) {
        if (a.position < 0 || a.position == a.committed) continue;
        if (commit_one(a)) {
            a.committed = a.position;
        } else {
            all_ok = false;
        }
    }
    return all_ok;
}

void Consumer::maybe_auto_commit() {
    if (cfg_.group_id.empty() || cfg_.auto_commit_interval_ms <= 0) return;
    int64_t now = steady_now_us();
    if (now - last_auto_commit_us_ < int64_t(cfg_.auto_commit_interval_ms) * 1000) return;
    last_auto_commit_us_ = now;
    commit_sync();
}

int64_t Consumer::position(const std::string& topic, int32_t partition) const {
    for (const auto& a : assignments_) {
        if (a.topic == topic && a.partition == partition) return a.position;
    }
    return -1;
}

void Consumer::seek(const std::string& topic, int32_t partition, int64_t offset) {
    for (auto& a : assignments_) {
        if (a.topic == topic && a.partition == partition) a.position = offset;
    }
}

}  // namespace octo::client
