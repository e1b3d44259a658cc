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

#include <random>
#include <string>

#include "octo/protocol/frames.hpp"

namespace octo::test {

// Randomized frame generation shared by the unit round-trip test and the
// acceptance-scale run. Returns true when encode∘decode reproduced the
// message exactly.
class FrameGen {
public:
    explicit FrameGen(uint64_t seed) : rng_(seed) {}

    std::string rand_name(size_t max_len = 24) {
        static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789._-";
        size_t n = rng_() % max_len;
        std::string s;
        for (size_t i = 0; i < n; ++i) s.push_back(alphabet[rng_() % (sizeof(alphabet) - 1)]);
        return s;
    }

    Bytes rand_bytes(size_t max_len) {
        Bytes b(rng_() % max_len);
        for (auto& x : b) x = static_cast<uint8_t>(rng_());
        return b;
    }

    std::vector<broker::Record> rand_records(size_t max_count, size_t max_payload) {
        std::vector<broker::Record> out(rng_() % max_count);
        for (auto& rec : out) {
            rec.offset = static_cast<int64_t>(rng_() % (1ull << 40));
            rec.timestamp_ms = static_cast<int64_t>(rng_() % (1ull << 41));
            rec.key = rand_bytes(max_payload);
            rec.value = rand_bytes(max_payload);
        }
        return out;
    }

    proto::Status rand_status() { return static_cast<proto::Status>(rng_() % 9); }

    // One random message of a random opcode; returns false on mismatch.
    bool roundtrip_one();

    uint64_t rng() { return rng_(); }

private:
    std::mt19937_64 rng_;
};

inline bool records_equal(const std::vector<broker::Record>& a,
                          const std::vector<broker::Record>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (!a[i].same_content(b[i])) return false;
    }
    return true;
}

inline bool FrameGen::roundtrip_one() {
    using namespace octo::proto;
    switch (rng_() % 17) {
        case 0: {
            Hello m{static_cast<uint8_t>(rng_() % 4), Bytes(16, static_cast<uint8_t>(rng_()))};
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_hello(r);
            return d.version == m.version && d.nonce == m.nonce;
        }
        case 1: {
            AuthReq m{rand_name(), Bytes(32, static_cast<uint8_t>(rng_()))};
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_auth_req(r);
            return d.key_id == m.key_id && d.hmac == m.hmac;
        }
        case 2: {
            AuthResp m{rand_status(), rand_name()};
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_auth_resp(r);
            return d.status == m.status && d.identity == m.identity;
        }
        case 3: {
            ProduceReq m{rand_name(), static_cast<int32_t>(rng_() % 64) - 1,
                         static_cast<uint8_t>(rng_() % 3 == 0 ? 255 : rng_() % 2),
                         rand_bytes(64), rand_bytes(512)};
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_produce_req(r);
            return d.topic == m.topic && d.partition == m.partition && d.acks == m.acks &&
                   d.key == m.key && d.value == m.value;
        }
        case 4: {
            ProduceResp m;
            m.status = rand_status();
            m.partition = static_cast<int32_t>(rng_() % 128);
            m.offset = static_cast<int64_t>(rng_() % (1ull << 40)) - 1;
            if (m.status == Status::NOT_LEADER) {
                m.leader = static_cast<int32_t>(rng_() % 8);
                m.leader_addr = rand_name() + ":9321";
            }
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_produce_resp(r);
            return d.status == m.status && d.partition == m.partition && d.offset == m.offset &&
                   d.leader == m.leader && d.leader_addr == m.leader_addr;
        }
        case 5: {
            FetchReq m{rand_name(), static_cast<int32_t>(rng_() % 128),
                       static_cast<int64_t>(rng_() % (1ull << 40)),
                       static_cast<uint32_t>(rng_() % 10'000),
                       static_cast<uint32_t>(rng_() % (1u << 22))};
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_fetch_req(r);
            return d.topic == m.topic && d.partition == m.partition && d.offset == m.offset &&
                   d.max_records == m.max_records && d.max_bytes == m.max_bytes;
        }
        case 6: {
            FetchResp m;
            m.status = rand_status();
            if (m.status == Status::NOT_LEADER) {
                m.leader = static_cast<int32_t>(rng_() % 8);
                m.leader_addr = rand_name() + ":9323";
            }
            m.records = rand_records(8, 256);
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_fetch_resp(r);
            return d.status == m.status && d.leader == m.leader &&
                   d.leader_addr == m.leader_addr && records_equal(d.records, m.records);
        }
        case 7: {
            CommitReq m{rand_name(), rand_name(), static_cast<int32_t>(rng_() % 128),
                        static_cast<int64_t>(rng_() % (1ull << 40))};
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_commit_req(r);
            return d.group == m.group && d.topic == m.topic && d.partition == m.partition &&
                   d.offset == m.offset;
        }
        case 8: {
            CommitResp m{rand_status()};
            Bytes buf = encode(m);
            ByteReader r(buf);
            return decode_commit_resp(r).status == m.status;
        }
        case 9: {
            FetchCommittedReq m{rand_name(), rand_name(), static_cast<int32_t>(rng_() % 128)};
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_fetch_committed_req(r);
            return d.group == m.group && d.topic == m.topic && d.partition == m.partition;
        }
        case 10: {
            FetchCommittedResp m{rand_status(), static_cast<int64_t>(rng_() % 1000) - 1};
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_fetch_committed_resp(r);
            return d.status == m.status && d.offset == m.offset;
        }
        case 11: {
            ListOffsetsReq m{rand_name(), static_cast<int32_t>(rng_() % 128),
                             static_cast<int64_t>(rng_() % 1000) - 2};
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_list_offsets_req(r);
            return d.topic == m.topic && d.partition == m.partition && d.target == m.target;
        }
        case 12: {
            ListOffsetsResp m;
            m.status = rand_status();
            m.offset = static_cast<int64_t>(rng_() % (1ull << 40));
            if (m.status == Status::NOT_LEADER) {
                m.leader = static_cast<int32_t>(rng_() % 8);
                m.leader_addr = rand_name();
            }
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_list_offsets_resp(r);
            return d.status == m.status && d.offset == m.offset && d.leader == m.leader &&
                   d.leader_addr == m.leader_addr;
        }
        case 13: {
            ReplicateReq m;
            m.topic = rand_name();
            m.partition = static_cast<int32_t>(rng_() % 128);
            m.earliest = static_cast<int64_t>(rng_() % 1000);
            m.base = m.earliest + static_cast<int64_t>(rng_() % 1000);
            m.records = rand_records(8, 128);
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_replicate_req(r);
            return d.topic == m.topic && d.partition == m.partition &&
                   d.earliest == m.earliest && d.base == m.base &&
                   records_equal(d.records, m.records);
        }
        case 14: {
            ReplicateResp m{rand_status(), static_cast<int64_t>(rng_() % (1ull << 40))};
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_replicate_resp(r);
            return d.status == m.status && d.log_end == m.log_end;
        }
        case 15: {
            SyncReq m{rand_name(), static_cast<int32_t>(rng_() % 128),
                      static_cast<int64_t>(rng_() % (1ull << 40)),
                      static_cast<uint32_t>(rng_() % 4096)};
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_sync_req(r);
            return d.topic == m.topic && d.partition == m.partition && d.from == m.from &&
                   d.max_records == m.max_records;
        }
        default: {
            SyncResp m;
            m.status = rand_status();
            m.log_end = static_cast<int64_t>(rng_() % (1ull << 40));
            m.earliest = static_cast<int64_t>(rng_() % (1ull << 30));
            m.records = rand_records(6, 128);
            Bytes buf = encode(m);
            ByteReader r(buf);
            auto d = decode_sync_resp(r);
            return d.status == m.status && d.log_end == m.log_end &&
                   d.earliest == m.earliest && records_equal(d.records, m.records);
        }
    }
}

}  // namespace octo::test
