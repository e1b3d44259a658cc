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

#include <doctest.h>

#include <atomic>
#include <set>

#include "octo/broker/cluster.hpp"
#include "octo/common/error.hpp"
#include "octo/common/hash.hpp"
#include "test_util.hpp"

using namespace octo;
using namespace octo::broker;
using octo::test::TempDir;
using octo::test::wait_until;
using proto::Status;

namespace {

std::atomic<uint16_t> g_port_base{23000};

ClusterConfig test_config(const TempDir& dir, int brokers) {
    ClusterConfig cfg;
    cfg.brokers = brokers;
    cfg.base_port = g_port_base.fetch_add(16);
    cfg.data_dir = dir.path;
    cfg.sync_timeout_ms = 600;
    cfg.replication_timeout_ms = 400;
    cfg.fetch_longpoll_ms = 100;
    cfg.retention_interval_ms = 3'600'000;  // manual in tests
    return cfg;
}

TopicSpec topic_spec(const std::string& name, int32_t partitions, int32_t rf) {
    TopicSpec spec;
    spec.name = name;
    spec.partitions = partitions;
    spec.replication_factor = rf;
    return spec;
}

struct InjectedClock {
    std::shared_ptr<std::atomic<int64_t>> now = std::make_shared<std::atomic<int64_t>>(1'000'000);
    ClockFn fn() const {
        auto p = now;
        return [p] { return p->load(); };
    }
};

}  // namespace

TEST_CASE("create_topic places replicas round-robin on distinct brokers") {
    TempDir dir("cluster");
    Cluster cluster(test_config(dir, 4));
    cluster.start();

    auto spec = cluster.create_topic(topic_spec("fsmon", 2, 2), "alice");
    CHECK(spec.retention_ms == 604'800'000);
    auto assignment = cluster.meta().assignment("fsmon");
    REQUIRE(assignment.size() == 2);
    for (const auto& pa : assignment) {
        REQUIRE(pa.replicas.size() == 2);
        CHECK(pa.replicas[0] != pa.replicas[1]);
        CHECK(pa.leader == pa.replicas[0]);
    }
    // Leaders land on different brokers.
    CHECK(assignment[0].leader != assignment[1].leader);

    CHECK(cluster.has_permission("alice", "fsmon", Permission::READ));
    CHECK(cluster.has_permission("alice", "fsmon", Permission::WRITE));
    CHECK(cluster.has_permission("alice", "fsmon", Permission::DESCRIBE));
    CHECK_FALSE(cluster.has_permission("bob", "fsmon", Permission::READ));

    SUBCASE("duplicate name is rejected") {
        CHECK_THROWS_WITH_AS(cluster.create_topic(topic_spec("fsmon", 1, 1), "alice"),
                             doctest::Contains("DUPLICATE_TOPIC"), ApiError);
    }
    SUBCASE("invalid names and replication factors") {
        CHECK_THROWS_AS(cluster.create_topic(topic_spec("bad name!", 1, 1), "alice"), ApiError);
        CHECK_THROWS_AS(cluster.create_topic(topic_spec("", 1, 1), "alice"), ApiError);
        CHECK_THROWS_AS(cluster.create_topic(topic_spec("t5", 1, 5), "alice"), ApiError);
    }
    SUBCASE("table-shaped config: 4 partitions, each replicated twice") {
        auto t = cluster.create_topic(topic_spec("t", 4, 2), "alice");
        CHECK(t.partitions == 4);
        auto a = cluster.meta().assignment("t");
        REQUIRE(a.size() == 4);
        for (const auto& pa : a) {
            CHECK(pa.replicas.size() == 2);
            CHECK(pa.replicas[0] != pa.replicas[1]);
        }
    }
    cluster.stop();
}

TEST_CASE("append assigns dense offsets and fetch round-trips bytes") {
    TempDir dir("cluster");
    Cluster cluster(test_config(dir, 2));
    cluster.start();
    cluster.create_topic(topic_spec("t", 1, 1), "alice");

    auto r0 = cluster.append("alice", "t", 0, 1, to_bytes("k"), to_bytes("hello"));
    CHECK(r0.status == Status::OK);
    CHECK(r0.offset == 0);
    auto r1 = cluster.append("alice", "t", 0, 1, {}, to_bytes("world"));
    CHECK(r1.offset == 1);

    auto fr = cluster.fetch("alice", "t", 0, 0, 10, 1 << 20);
    REQUIRE(fr.records.size() == 2);
    CHECK(to_string(fr.records[0].value) == "hello");
    CHECK(to_string(fr.records[1].value) == "world");
    CHECK(fr.records[0].timestamp_ms <= fr.records[1].timestamp_ms);

    SUBCASE("unknown topic/partition and unauthorized") {
        CHECK(cluster.append("alice", "nope", 0, 1, {}, {}).status == Status::UNKNOWN_TOPIC);
        CHECK(cluster.append("alice", "t", 7, 1, {}, {}).status == Status::UNKNOWN_PARTITION);
        CHECK(cluster.append("mallory", "t", 0, 1, {}, {}).status == Status::UNAUTHORIZED);
        CHECK(cluster.fetch("mallory", "t", 0, 0, 10, 1024).status == Status::UNAUTHORIZED);
    }
    SUBCASE("fetch bounds") {
        auto empty = cluster.fetch("alice", "t", 0, 2, 10, 1024);
        CHECK(empty.status == Status::OK);
        CHECK(empty.records.empty());
        CHECK(cluster.fetch("alice", "t", 0, 3, 10, 1024).status ==
              Status::OFFSET_OUT_OF_RANGE);
    }
    cluster.stop();
}

TEST_CASE("spec example: append offsets 0..9 then fetch(from=3, max=4)") {
    TempDir dir("cluster");
    Cluster cluster(test_config(dir, 2));
    cluster.start();
    cluster.create_topic(topic_spec("t", 1, 1), "alice");
    for (int i = 0; i < 10; ++i) {
        cluster.append("alice", "t", 0, 1, {}, to_bytes("v" + std::to_string(i)));
    }
    auto fr = cluster.fetch("alice", "t", 0, 3, 4, 1 << 20);
    REQUIRE(fr.records.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(fr.records[static_cast<size_t>(i)].offset == 3 + i);
    cluster.stop();
}

TEST_CASE("partition_for_key uses fnv1a64 mod partitions") {
    CHECK(Cluster::partition_for_key(to_bytes("anything"), 1) == 0);
    CHECK(Cluster::partition_for_key(to_bytes("sensor-1"), 4) ==
          static_cast<int32_t>(11570620482435813161ULL % 4));
    for (int i = 0; i < 1000; ++i) {
        CHECK(Cluster::partition_for_key(to_bytes("sensor-1"), 4) == 1);
    }
}

TEST_CASE("replication: acks=ALL waits for followers") {
    TempDir dir("cluster");
    Cluster cluster(test_config(dir, 2));
    cluster.start();
    cluster.create_topic(topic_spec("t", 1, 2), "alice");

    SUBCASE("healthy pair commits quickly") {
        auto r = cluster.append("alice", "t", 0, 255, {}, to_bytes("all-acked"));
        CHECK(r.status == Status::OK);
        CHECK(cluster.high_watermark("t", 0) == 1);
        // The follower's replica holds the same record.
        int leader = cluster.leader_of("t", 0);
        int follower = 1 - leader;
        REQUIRE(wait_until([&] {
            int64_t le = 0, ea = 0;
            cluster.sync_read(follower, "t", 0, 0, 10, &le, &ea);
            return le == 1;
        }, 2000));
    }

    SUBCASE("halted follower: block until timeout, then degrade to in-sync set") {
        int leader = cluster.leader_of("t", 0);
        int follower = 1 - leader;
        cluster.halt_broker(follower);
        auto t0 = steady_now_ms();
        auto r = cluster.append("alice", "t", 0, 255, {}, to_bytes("stuck"));
        auto waited = steady_now_ms() - t0;
        CHECK(r.status == Status::REPLICATION_TIMEOUT);
        CHECK(waited >= 350);  // blocked for ~replication_timeout_ms

        // After eviction the in-sync set is just the leader; acks=ALL
        // completes again and the record above becomes committed.
        REQUIRE(wait_until([&] {
            auto rr = cluster.append("alice", "t", 0, 255, {}, to_bytes("degraded"));
            return rr.status == Status::OK;
        }, 3000));
        auto fr = cluster.fetch("alice", "t", 0, 0, 10, 1 << 20);
        CHECK(fr.records.size() >= 2);
        cluster.resume_broker(follower);
    }
    cluster.stop();
}

TEST_CASE("committed reads: records above the high watermark stay hidden") {
    TempDir dir("cluster");
    Cluster cluster(test_config(dir, 2));
    cluster.start();
    cluster.create_topic(topic_spec("t", 1, 2), "alice");
    cluster.append("alice", "t", 0, 255, {}, to_bytes("committed"));

    int leader = cluster.leader_of("t", 0);
    int follower = 1 - leader;
    cluster.halt_broker(follower);
    // acks=1 append while the follower is down: stays above the watermark
    // until the follower is evicted from the in-sync set.
    auto r = cluster.append("alice", "t", 0, 1, {}, to_bytes("pending"));
    CHECK(r.status == Status::OK);
    CHECK(r.offset == 1);
    auto fr = cluster.fetch("alice", "t", 0, 0, 10, 1 << 20);
    CHECK(fr.records.size() == 1);  // only the committed record

    // Eviction advances the watermark; the record becomes visible.
    REQUIRE(wait_until([&] { return cluster.high_watermark("t", 0) == 2; }, 3000));
    fr = cluster.fetch("alice", "t", 0, 0, 10, 1 << 20);
    CHECK(fr.records.size() == 2);
    cluster.resume_broker(follower);
    cluster.stop();
}

TEST_CASE("lookup_offset: earliest, latest, and timestamp targets") {
    TempDir dir("cluster");
    InjectedClock clock;
    auto cfg = test_config(dir, 2);
    cfg.clock = clock.fn();
    Cluster cluster(cfg);
    cluster.start();
    cluster.create_topic(topic_spec("t", 1, 1), "alice");

    SUBCASE("empty partition: earliest == latest == 0") {
        CHECK(cluster.lookup_offset("alice", "t", 0, kTargetEarliest).offset == 0);
        CHECK(cluster.lookup_offset("alice", "t", 0, kTargetLatest).offset == 0);
    }
    SUBCASE("timestamp target picks the first record at or after") {
        clock.now->store(100);
        cluster.append("alice", "t", 0, 1, {}, to_bytes("a"));
        clock.now->store(200);
        cluster.append("alice", "t", 0, 1, {}, to_bytes("b"));
        clock.now->store(300);
        cluster.append("alice", "t", 0, 1, {}, to_bytes("c"));
        CHECK(cluster.lookup_offset("alice", "t", 0, 150).offset == 1);
        CHECK(cluster.lookup_offset("alice", "t", 0, 301).offset == 3);
        CHECK(cluster.lookup_offset("alice", "t", 0, kTargetEarliest).offset == 0);
        CHECK(cluster.lookup_offset("alice", "t", 0, kTargetLatest).offset == 3);
    }
    SUBCASE("describe-only identity may look up offsets") {
        cluster.grant("t", "viewer", {Permission::DESCRIBE}, false);
        CHECK(cluster.lookup_offset("viewer", "t", 0, kTargetLatest).status == Status::OK);
        CHECK(cluster.lookup_offset("stranger", "t", 0, kTargetLatest).status ==
              Status::UNAUTHORIZED);
    }
    cluster.stop();
}

TEST_CASE("retention purges by timestamp and keeps offsets stable") {
    TempDir dir("cluster");
    InjectedClock clock;
    auto cfg = test_config(dir, 2);
    cfg.clock = clock.fn();
    Cluster cluster(cfg);
    cluster.start();
    auto spec = topic_spec("t", 1, 1);
    spec.retention_ms = 1000;
    cluster.create_topic(spec, "alice");

    clock.now->store(1'000'000);
    cluster.append("alice", "t", 0, 1, {}, to_bytes("old"));
    clock.now->store(1'002'000);
    cluster.append("alice", "t", 0, 1, {}, to_bytes("fresh"));

    SUBCASE("fresh records survive") {
        CHECK(cluster.enforce_retention(1'000'900) == 0);
    }
    SUBCASE("boundary straddle purges exactly the stale prefix") {
        auto purged = cluster.enforce_retention(1'002'500);
        CHECK(purged == 1);
        CHECK(cluster.lookup_offset("alice", "t", 0, kTargetEarliest).offset == 1);
        CHECK(cluster.fetch("alice", "t", 0, 0, 10, 1024).status ==
              Status::OFFSET_OUT_OF_RANGE);
        auto fr = cluster.fetch("alice", "t", 0, 1, 10, 1024);
        REQUIRE(fr.records.size() == 1);
        CHECK(fr.records[0].offset == 1);
    }
    SUBCASE("seven-day default boundary") {
        cluster.create_topic(topic_spec("week", 1, 1), "alice");
        int64_t now = 1'000'000'000'000;
        clock.now->store(now - 7 * 86'400'000LL - 3'600'000);  // 7d1h ago
        cluster.append("alice", "week", 0, 1, {}, to_bytes("too-old"));
        clock.now->store(now - 6 * 86'400'000LL - 23 * 3'600'000);  // 6d23h ago
        cluster.append("alice", "week", 0, 1, {}, to_bytes("keeper"));
        clock.now->store(now);
        cluster.enforce_retention(now);
        CHECK(cluster.lookup_offset("alice", "week", 0, kTargetEarliest).offset == 1);
        auto fr = cluster.fetch("alice", "week", 0, 1, 10, 1024);
        REQUIRE(fr.records.size() == 1);
        CHECK(to_string(fr.records[0].value) == "keeper");
    }
    cluster.stop();
}

TEST_CASE("offset commits persist across a cluster restart") {
    TempDir dir("cluster");
    auto cfg = test_config(dir, 2);
    {
        Cluster cluster(cfg);
        cluster.start();
        cluster.create_topic(topic_spec("t", 1, 2), "alice");
        for (int i = 0; i < 12; ++i) cluster.append("alice", "t", 0, 1, {}, to_bytes("x"));
        CHECK(cluster.fetch_committed("g", "t", 0) == -1);  // never committed
        CHECK(cluster.commit_offset("g", "t", 0, 10) == Status::OK);
        CHECK(cluster.fetch_committed("g", "t", 0) == 10);
        CHECK(cluster.commit_offset("g", "t", 0, 99) == Status::OFFSET_OUT_OF_RANGE);
        cluster.stop();
    }
    {
        Cluster cluster(cfg);
        cluster.start();
        CHECK(cluster.fetch_committed("g", "t", 0) == 10);
        CHECK(cluster.fetch_committed("other", "t", 0) == -1);
        cluster.stop();
    }
}

TEST_CASE("group lag sums uncommitted records across partitions") {
    TempDir dir("cluster");
    Cluster cluster(test_config(dir, 2));
    cluster.start();
    cluster.create_topic(topic_spec("t", 4, 1), "alice");
    for (int32_t p = 0; p < 4; ++p) {
        for (int i = 0; i < 25; ++i) cluster.append("alice", "t", p, 1, {}, to_bytes("e"));
        cluster.commit_offset("g", "t", p, 0);
    }
    CHECK(cluster.group_lag("g", "t") == 100);
    cluster.commit_offset("g", "t", 0, 25);
    CHECK(cluster.group_lag("g", "t") == 75);
    cluster.stop();
}

TEST_CASE("halt and failover") {
    TempDir dir("cluster");
    Cluster cluster(test_config(dir, 2));
    cluster.start();

    SUBCASE("rf=1: partition goes unavailable, resume restores it") {
        cluster.create_topic(topic_spec("solo", 1, 1), "alice");
        int leader = cluster.leader_of("solo", 0);
        cluster.append("alice", "solo", 0, 1, {}, to_bytes("before"));
        cluster.halt_broker(leader);
        CHECK(cluster.append("alice", "solo", 0, 1, {}, to_bytes("x")).status ==
              Status::NO_LEADER);
        cluster.resume_broker(leader);
        REQUIRE(wait_until([&] { return cluster.leader_of("solo", 0) == leader; }, 2000));
        auto r = cluster.append("alice", "solo", 0, 1, {}, to_bytes("after"));
        CHECK(r.status == Status::OK);
        CHECK(r.offset == 1);
    }

    SUBCASE("rf=2: committed records survive leader halt") {
        cluster.create_topic(topic_spec("dup", 1, 2), "alice");
        for (int i = 0; i < 20; ++i) {
            auto r = cluster.append("alice", "dup", 0, 255, {}, to_bytes("v" + std::to_string(i)));
            REQUIRE(r.status == Status::OK);
        }
        int old_leader = cluster.leader_of("dup", 0);
        cluster.halt_broker(old_leader);
        int new_leader = cluster.leader_of("dup", 0);
        REQUIRE(new_leader >= 0);
        CHECK(new_leader != old_leader);

        auto fr = cluster.fetch("alice", "dup", 0, 0, 100, 1 << 20);
        REQUIRE(fr.records.size() == 20);
        for (int i = 0; i < 20; ++i) {
            CHECK(to_string(fr.records[static_cast<size_t>(i)].value) ==
                  "v" + std::to_string(i));
        }

        // Old leader rejoins as follower and catches up new appends.
        cluster.resume_broker(old_leader);
        auto r = cluster.append("alice", "dup", 0, 255, {}, to_bytes("post-failover"));
        CHECK(r.status == Status::OK);
        REQUIRE(wait_until([&] {
            int64_t le = 0, ea = 0;
            cluster.sync_read(old_leader, "dup", 0, 0, 1, &le, &ea);
            return le == 21;
        }, 3000));
    }

    SUBCASE("unknown broker id") {
        CHECK_THROWS_AS(cluster.halt_broker(9), ApiError);
    }
    cluster.stop();
}

TEST_CASE("partition count may only grow and new partitions serve traffic") {
    TempDir dir("cluster");
    Cluster cluster(test_config(dir, 2));
    cluster.start();
    cluster.create_topic(topic_spec("t", 2, 1), "alice");
    cluster.increase_partitions("t", 4);
    CHECK(cluster.partition_count("t") == 4);
    CHECK_THROWS_AS(cluster.increase_partitions("t", 2), ApiError);
    auto r = cluster.append("alice", "t", 3, 1, {}, to_bytes("new-partition"));
    CHECK(r.status == Status::OK);
    cluster.stop();
}

TEST_CASE("ordering invariant: exhaustive fetch sees dense offsets under concurrency") {
    TempDir dir("cluster");
    Cluster cluster(test_config(dir, 2));
    cluster.start();
    cluster.create_topic(topic_spec("t", 2, 1), "alice");

    constexpr int kThreads = 4, kPerThread = 250;
    std::vector<std::thread> threads;
    for (int t = 0; t < kThreads; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < kPerThread; ++i) {
                auto r = cluster.append("alice", "t", t % 2, 1, {},
                                        to_bytes(std::to_string(t) + ":" + std::to_string(i)));
                REQUIRE(r.status == Status::OK);
            }
        });
    }
    for (auto& th : threads) th.join();

    for (int32_t p = 0; p < 2; ++p) {
        int64_t expect = 0;
        int64_t from = 0;
        for (;;) {
            auto fr = cluster.fetch("alice", "t", p, from, 100, 1 << 20);
            if (fr.records.empty()) break;
            for (const auto& rec : fr.records) {
                CHECK(rec.offset == expect);
                ++expect;
            }
            from = expect;
        }
        CHECK(expect == kThreads / 2 * kPerThread);
    }
    cluster.stop();
}

TEST_CASE("offsets log compaction preserves committed positions") {
    TempDir dir("cluster");
    auto cfg = test_config(dir, 2);
    cfg.offsets_compact_threshold = 64;
    {
        Cluster cluster(cfg);
        cluster.start();
        cluster.create_topic(topic_spec("t", 1, 1), "alice");
        for (int i = 0; i < 200; ++i) cluster.append("alice", "t", 0, 1, {}, to_bytes("x"));
        for (int i = 0; i < 200; ++i) {
            REQUIRE(cluster.commit_offset("g" + std::to_string(i % 5), "t", 0, i % 50) ==
                    Status::OK);
        }
        // The offsets log gets rewritten once replication lets earliest
        // advance past the snapshot base.
        REQUIRE(octo::test::wait_until([&] {
            cluster.commit_offset("g0", "t", 0, 1);
            return cluster.latest_offset(kOffsetsTopic, 0) -
                       cluster.earliest_offset(kOffsetsTopic, 0) <
                   200;
        }, 5000, 50));
        cluster.stop();
    }
    {
        Cluster cluster(cfg);
        cluster.start();
        CHECK(cluster.fetch_committed("g4", "t", 0) == 49);
        cluster.stop();
    }
}
