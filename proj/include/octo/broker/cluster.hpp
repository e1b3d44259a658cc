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

#include <atomic>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <thread>
#include <vector>

#include "octo/broker/metadata.hpp"
#include "octo/broker/partition_log.hpp"
#include "octo/broker/record.hpp"
#include "octo/common/clock.hpp"
#include "octo/common/net.hpp"
#include "octo/protocol/status.hpp"

namespace octo::broker {

struct ClusterConfig {
    int brokers = 2;
    std::string host = "127.0.0.1";
    uint16_t base_port = 9321;  // broker i listens on base_port + i
    std::filesystem::path data_dir;
    uint64_t segment_bytes = 64ull << 20;
    int64_t default_retention_ms = 604'800'000;
    // Follower eviction from the in-sync set after this long without
    // replication progress.
    int sync_timeout_ms = 2000;
    // How long an acks=ALL append waits for the high watermark.
    int replication_timeout_ms = 2000;
    int heartbeat_interval_ms = 1000;
    int heartbeat_misses = 3;
    int fetch_longpoll_ms = 500;
    int retention_interval_ms = 60'000;
    // Rewrite the __offsets log once it holds this many records.
    int64_t offsets_compact_threshold = 100'000;
    ClockFn clock;  // wall clock; injectable for retention tests
};

struct AppendResult {
    proto::Status status = proto::Status::OK;
    int32_t partition = -1;
    int64_t offset = -1;
    int64_t timestamp_ms = 0;
    int32_t leader = -1;        // redirect hint on NOT_LEADER
    std::string leader_addr;
};

struct FetchResult {
    proto::Status status = proto::Status::OK;
    std::vector<Record> records;
    int32_t leader = -1;
    std::string leader_addr;
};

struct OffsetResult {
    proto::Status status = proto::Status::OK;
    int64_t offset = -1;
};

// Offset lookup targets on the wire: -2 = earliest, -1 = latest.
using proto::kTargetEarliest;
using proto::kTargetLatest;

// Identity under which replication peers and in-process engines operate;
// it bypasses per-topic grants.
inline constexpr const char* kClusterIdentity = "__cluster";
inline constexpr const char* kOffsetsTopic = "__offsets";
inline constexpr const char* kAuditTopic = "__audit";

class ProtocolServer;

// N logical brokers in one process, each with a real TCP listener.
// Partitioned, replicated append-only logs with offset-tracked consumer
// groups, retention, and acknowledgment semantics. All public operations
// are thread-safe.
class Cluster {
public:
    explicit Cluster(ClusterConfig cfg);
    ~Cluster();
    Cluster(const Cluster&) = delete;
    Cluster& operator=(const Cluster&) = delete;

    void start();
    void stop();

    // Topic control surface (throws ApiError) -------------------------------
    TopicSpec create_topic(TopicSpec spec, const std::string& owner);
    void set_retention(const std::string& topic, int64_t retention_ms);
    void increase_partitions(const std::string& topic, int32_t new_count);
    void grant(const std::string& topic, const std::string& identity,
               const std::set<Permission>& perms, bool revoke);
    bool has_permission(const std::string& identity, const std::string& topic,
                        Permission perm) const;

    // Data plane -------------------------------------------------------------
    // partition -1 routes by key (FNV-1a) or round-robin for empty keys via
    // *rr_cursor. acks: 0, 1, or 255 (= all in-sync replicas).
    AppendResult append(const std::string& identity, const std::string& topic,
                        int32_t partition, uint8_t acks, Bytes key, Bytes value,
                        uint32_t* rr_cursor = nullptr);
    // Key- or round-robin partition routing. Empty keys prefer partitions
    // led by prefer_broker so produce traffic avoids redirects.
    int32_t resolve_partition(const std::string& topic, const Bytes& key, uint32_t* rr_cursor,
                              int prefer_broker) const;
    FetchResult fetch(const std::string& identity, const std::string& topic, int32_t partition,
                      int64_t from, uint32_t max_records, uint32_t max_bytes,
                      bool long_poll = false);
    OffsetResult lookup_offset(const std::string& identity, const std::string& topic,
                               int32_t partition, int64_t target);
    proto::Status commit_offset(const std::string& group, const std::string& topic,
                                int32_t partition, int64_t offset);
    // Next offset to consume for the group, or -1 when never committed.
    int64_t fetch_committed(const std::string& group, const std::string& topic,
                            int32_t partition) const;
    // Sum over partitions of (latest - committed), floored at zero.
    int64_t group_lag(const std::string& group, const std::string& topic) const;

    // Retention --------------------------------------------------------------
    uint64_t enforce_retention(int64_t now_ms);

    // Fault injection surface ------------------------------------------------
    void halt_broker(int broker_id);
    void resume_broker(int broker_id);
    bool broker_halted(int broker_id) const;

    // Replica-side entry points used by the protocol layer ------------------
    // Applies a replication push; returns the replica's log end offset.
    int64_t apply_replicate(int broker_id, const std::string& topic, int32_t partition,
                            int64_t leader_earliest, int64_t base_offset,
                            const std::vector<Record>& records, proto::Status* st);
    // Serves a catch-up read from the leader's log (not bounded by the
    // high watermark).
    FetchResult sync_read(int broker_id, const std::string& topic, int32_t partition,
                          int64_t from, uint32_t max_records, int64_t* log_end,
                          int64_t* earliest);

    // Introspection ----------------------------------------------------------
    int broker_count() const { return cfg_.brokers; }
    std::string broker_addr(int broker_id) const;
    uint16_t broker_port(int broker_id) const { return static_cast<uint16_t>(cfg_.base_port + broker_id); }
    int leader_of(const std::string& topic, int32_t partition) const;
    int32_t partition_count(const std::string& topic) const;
    int64_t latest_offset(const std::string& topic, int32_t partition) const;
    int64_t earliest_offset(const std::string& topic, int32_t partition) const;
    int64_t high_watermark(const std::string& topic, int32_t partition) const;
    bool wait_high_watermark(const std::string& topic, int32_t partition, int64_t offset,
                             int timeout_ms);
    MetadataStore& meta() { return *meta_; }
    const ClusterConfig& config() const { return cfg_; }
    int64_t now_ms() const { return cfg_.clock(); }

    static int32_t partition_for_key(const Bytes& key, int32_t partitions);

private:
    friend class ProtocolServer;

    // Hot paths (append, fetch, lag) read the atomics below without taking
    // mu; mu guards the followers/channels structure and in-sync-set
    // transitions. Waiters use short timed slices so a missed notify only
    // costs one slice.
    struct Follower {
        std::atomic<int64_t> acked_leo{0};
        std::atomic<bool> in_sync{false};
        std::atomic<int64_t> last_progress_us{0};
    };

    struct ReplChannel {
        std::thread thread;
        std::atomic<bool> stop{false};
    };

    struct Partition {
        std::string topic;
        int32_t index = 0;
        int broker_id = 0;  // owning replica
        std::unique_ptr<PartitionLog> log;

        std::mutex mu;
        std::condition_variable cv;  // new data or high watermark movement
        std::atomic<bool> leading{false};
        std::atomic<bool> has_followers{false};
        std::atomic<uint64_t> epoch{0};  // bumped on every leadership change
        std::atomic<int64_t> high_watermark{0};
        std::map<int, std::unique_ptr<Follower>> followers;
        std::map<int, std::unique_ptr<ReplChannel>> channels;

        // Replica-side apply lock; serializes REPLICATE/SYNC writes.
        std::mutex apply_mu;

        void raise_watermark(int64_t v) {
            int64_t cur = high_watermark.load();
            while (v > cur && !high_watermark.compare_exchange_weak(cur, v)) {
            }
        }
    };

    struct Broker {
        int id = 0;
        std::atomic<bool> halted{false};
        // Replicas hosted by this broker, keyed by (topic, partition).
        std::map<std::pair<std::string, int32_t>, std::unique_ptr<Partition>> partitions;
        std::unique_ptr<ProtocolServer> server;
    };

    // Topology helpers; topo_mu_ guards broker partition maps.
    Partition* replica(int broker_id, const std::string& topic, int32_t partition) const;
    Partition* leader_replica(const std::string& topic, int32_t partition, int* leader_out) const;
    void create_partition_replicas(const std::string& topic, int32_t partition,
                                   const PartitionAssignment& pa);

    void become_leader(Partition& p);
    void stop_leadership(Partition& p);
    void replication_loop(Partition& p, int follower_id, uint64_t epoch);
    void recompute_hw(Partition& p);  // caller holds p.mu
    void reevaluate_isr(Partition& p, int64_t now_us);
    void fail_over(const std::string& topic, int32_t partition, int dead_broker);
    void monitor_loop();
    void catch_up_from_leader(int broker_id, const std::string& topic, int32_t partition);

    // Offsets store ----------------------------------------------------------
    void rebuild_offsets_cache();
    void maybe_compact_offsets();
    static Bytes offsets_key(const std::string& group, const std::string& topic, int32_t partition);

    void bootstrap_internal_topics();
    TopicSpec create_topic_internal(TopicSpec spec, const std::string& owner,
                                    const std::set<std::string>& extra_grantees);
    AppendResult append_on_leader(Partition& p, uint8_t acks, Bytes key, Bytes value);

    ClusterConfig cfg_;
    std::unique_ptr<MetadataStore> meta_;
    std::vector<std::unique_ptr<Broker>> brokers_;
    mutable std::shared_mutex topo_mu_;

    std::mutex offsets_mu_;
    std::map<std::tuple<std::string, std::string, int32_t>, int64_t> offsets_cache_;

    std::atomic<bool> running_{false};
    std::atomic<bool> compacting_offsets_{false};
    mutable std::atomic<uint32_t> default_rr_{0};
    std::thread monitor_;
    std::mutex monitor_mu_;
    std::condition_variable monitor_cv_;
    int64_t last_retention_run_ms_ = 0;

    std::mutex bg_mu_;
    std::vector<std::thread> bg_threads_;
};

}  // namespace octo::broker
