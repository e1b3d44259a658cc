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

#include "octo/broker/cluster.hpp"

#include <algorithm>
#include <chrono>

#include "octo/common/crypto.hpp"
#include "octo/common/error.hpp"
#include "octo/common/hash.hpp"
#include "octo/protocol/frames.hpp"
#include "octo/protocol/server.hpp"

namespace octo::broker {

using namespace std::chrono_literals;

namespace {

constexpr int kPeerConnectTimeoutMs = 500;
constexpr int kPeerIoTimeoutMs = 2000;
constexpr uint32_t kReplicationBatchRecords = 512;
constexpr size_t kReplicationBatchBytes = 1u << 20;
// Internal topics keep offsets essentially forever.
constexpr int64_t kInternalRetentionMs = 3'155'760'000'000LL;  // ~100 years

// Client side of a single authenticated peer connection.
class PeerConn {
public:
    bool open(const std::string& host, uint16_t port, const Bytes& secret) {
        conn_ = net::TcpConn::connect(host, port, kPeerConnectTimeoutMs);
        if (!conn_) return false;
        try {
            uint8_t op = 0;
            Bytes body;
            if (!proto::read_frame(*conn_, &op, &body, kPeerIoTimeoutMs) ||
                op != proto::OP_HELLO) {
                return fail();
            }
            ByteReader r(body);
            auto hello = proto::decode_hello(r);
            proto::AuthReq auth{kClusterIdentity, hmac_sha256(secret, hello.nonce)};
            if (!proto::write_frame(*conn_, proto::OP_AUTH, proto::encode(auth),
                                    kPeerIoTimeoutMs)) {
                return fail();
            }
            if (!proto::read_frame(*conn_, &op, &body, kPeerIoTimeoutMs) ||
                op != (proto::OP_AUTH | proto::RESP_BIT)) {
                return fail();
            }
            ByteReader ar(body);
            auto resp = proto::decode_auth_resp(ar);
            if (resp.status != proto::Status::OK) return fail();
        } catch (const CodecError&) {
            return fail();
        }
        return true;
    }

    bool ready() const { return conn_ != nullptr; }
    void reset() { conn_.reset(); }

    // Returns false on transport failure (connection is dropped).
    bool request(uint8_t opcode, const Bytes& body, uint8_t* resp_op, Bytes* resp_body,
                 int timeout_ms) {
        if (!conn_) return false;
        try {
            if (!proto::write_frame(*conn_, opcode, body, timeout_ms)) return fail();
            if (!proto::read_frame(*conn_, resp_op, resp_body, timeout_ms)) return fail();
        } catch (const CodecError&) {
            return fail();
        }
        return true;
    }

private:
    bool fail() {
        conn_.reset();
        return false;
    }
    std::unique_ptr<net::TcpConn> conn_;
};

}  // namespace

Cluster::Cluster(ClusterConfig cfg) : cfg_(std::move(cfg)) {
    if (!cfg_.clock) cfg_.clock = system_clock_fn();
    OCTO_CHECK(cfg_.brokers >= 1, "cluster needs at least one broker");
    std::filesystem::create_directories(cfg_.data_dir);
    meta_ = std::make_unique<MetadataStore>(cfg_.data_dir / "meta.json");
    for (int i = 0; i < cfg_.brokers; ++i) {
        auto b = std::make_unique<Broker>();
        b->id = i;
        brokers_.push_back(std::move(b));
    }
}

Cluster::~Cluster() { stop(); }

std::string Cluster::broker_addr(int broker_id) const {
    return cfg_.host + ":" + std::to_string(cfg_.base_port + broker_id);
}

int32_t Cluster::partition_for_key(const Bytes& key, int32_t partitions) {
    OCTO_CHECK(partitions >= 1, "partitions must be >= 1");
    return static_cast<int32_t>(fnv1a64(key) % static_cast<uint64_t>(partitions));
}

void Cluster::start() {
    if (running_.exchange(true)) return;

    // Materialize replicas for every known topic, then elect leaders.
    for (const auto& name : meta_->topic_names()) {
        auto assignment = meta_->assignment(name);
        for (size_t p = 0; p < assignment.size(); ++p) {
            create_partition_replicas(name, static_cast<int32_t>(p), assignment[p]);
        }
    }
    bootstrap_internal_topics();

    for (const auto& name : meta_->topic_names()) {
        auto assignment = meta_->assignment(name);
        for (size_t p = 0; p < assignment.size(); ++p) {
            int leader = assignment[p].leader;
            if (leader < 0 || leader >= cfg_.brokers) leader = assignment[p].replicas.front();
            if (meta_->leader(name, static_cast<int32_t>(p)) != leader) {
                meta_->set_leader(name, static_cast<int32_t>(p), leader);
            }
            Partition* part = replica(leader, name, static_cast<int32_t>(p));
            OCTO_CHECK(part != nullptr, "leader replica missing");
            become_leader(*part);
        }
    }

    rebuild_offsets_cache();

    for (auto& b : brokers_) {
        b->server = std::make_unique<ProtocolServer>(*this, b->id, cfg_.host, broker_port(b->id));
        if (!b->server->start()) {
            throw ApiError(500, "LISTEN_FAILED", "cannot listen on " + broker_addr(b->id));
        }
    }

    last_retention_run_ms_ = cfg_.clock();
    monitor_ = std::thread([this] { monitor_loop(); });
}

void Cluster::stop() {
    if (!running_.exchange(false)) return;
    {
        std::lock_guard lk(monitor_mu_);
        monitor_cv_.notify_all();
    }
    if (monitor_.joinable()) monitor_.join();

    // Stop replication before tearing down listeners so channel threads see
    // their stop flags rather than hanging on dead peers.
    std::vector<Partition*> leaders;
    {
        std::shared_lock lk(topo_mu_);
        for (auto& b : brokers_) {
            for (auto& [key, part] : b->partitions) leaders.push_back(part.get());
        }
    }
    for (auto* p : leaders) stop_leadership(*p);
    {
        std::lock_guard lk(bg_mu_);
        for (auto& t : bg_threads_) {
            if (t.joinable()) t.join();
        }
        bg_threads_.clear();
    }
    for (auto& b : brokers_) {
        if (b->server) b->server->stop();
    }
}

// -- Topology ----------------------------------------------------------------

Cluster::Partition* Cluster::replica(int broker_id, const std::string& topic,
                                     int32_t partition) const {
    std::shared_lock lk(topo_mu_);
    if (broker_id < 0 || broker_id >= static_cast<int>(brokers_.size())) return nullptr;
    auto& parts = brokers_[static_cast<size_t>(broker_id)]->partitions;
    auto it = parts.find({topic, partition});
    if (it == parts.end()) return nullptr;
    return it->second.get();
}

Cluster::Partition* Cluster::leader_replica(const std::string& topic, int32_t partition,
                                            int* leader_out) const {
    int leader = meta_->leader(topic, partition);
    if (leader_out) *leader_out = leader;
    if (leader < 0) return nullptr;
    if (brokers_[static_cast<size_t>(leader)]->halted.load()) return nullptr;
    return replica(leader, topic, partition);
}

void Cluster::create_partition_replicas(const std::string& topic, int32_t partition,
                                        const PartitionAssignment& pa) {
    std::unique_lock lk(topo_mu_);
    for (int broker_id : pa.replicas) {
        auto& parts = brokers_[static_cast<size_t>(broker_id)]->partitions;
        if (parts.count({topic, partition})) continue;
        auto part = std::make_unique<Partition>();
        part->topic = topic;
        part->index = partition;
        part->broker_id = broker_id;
        PartitionLog::Options opts;
        opts.dir = cfg_.data_dir / ("broker-" + std::to_string(broker_id)) /
                   (topic + "-" + std::to_string(partition));
        opts.segment_bytes = cfg_.segment_bytes;
        part->log = std::make_unique<PartitionLog>(opts);
        parts.emplace(std::make_pair(topic, partition), std::move(part));
    }
}

TopicSpec Cluster::create_topic(TopicSpec spec, const std::string& owner) {
    return create_topic_internal(std::move(spec), owner, {});
}

TopicSpec Cluster::create_topic_internal(TopicSpec spec, const std::string& owner,
                                         const std::set<std::string>& extra_grantees) {
    if (!valid_topic_name(spec.name)) {
        throw ApiError(400, "INVALID_NAME", "topic name must match [A-Za-z0-9._-]{1,249}");
    }
    if (meta_->topic_exists(spec.name)) {
        throw ApiError(409, "DUPLICATE_TOPIC", "topic already exists: " + spec.name);
    }
    if (spec.partitions < 1) {
        throw ApiError(400, "INVALID_SPEC", "partitions must be >= 1");
    }
    if (spec.replication_factor < 1 || spec.replication_factor > cfg_.brokers) {
        throw ApiError(400, "REPLICATION_UNSATISFIABLE",
                       "replication factor must be in [1, " + std::to_string(cfg_.brokers) + "]");
    }
    if (spec.retention_ms <= 0) spec.retention_ms = cfg_.default_retention_ms;
    spec.owner = owner;

    uint64_t seed = meta_->next_assignment_seed();
    std::vector<PartitionAssignment> assignment;
    for (int32_t p = 0; p < spec.partitions; ++p) {
        PartitionAssignment pa;
        for (int32_t r = 0; r < spec.replication_factor; ++r) {
            pa.replicas.push_back(
                static_cast<int>((seed + static_cast<uint64_t>(p + r)) % cfg_.brokers));
        }
        pa.leader = pa.replicas.front();
        assignment.push_back(std::move(pa));
    }
    meta_->put_topic(spec, assignment);
    std::set<Permission> all{Permission::READ, Permission::WRITE, Permission::DESCRIBE};
    meta_->set_grants(spec.name, owner, all, false);
    for (const auto& grantee : extra_grantees) {
        meta_->set_grants(spec.name, grantee, all, false);
    }

    for (int32_t p = 0; p < spec.partitions; ++p) {
        create_partition_replicas(spec.name, p, assignment[static_cast<size_t>(p)]);
        if (running_.load()) {
            Partition* part = replica(assignment[static_cast<size_t>(p)].leader, spec.name, p);
            become_leader(*part);
        }
    }
    return spec;
}

void Cluster::set_retention(const std::string& topic, int64_t retention_ms) {
    if (!meta_->topic_exists(topic)) throw ApiError(404, "UNKNOWN_TOPIC", topic);
    if (retention_ms <= 0) throw ApiError(400, "INVALID_SPEC", "retention_ms must be > 0");
    meta_->set_retention(topic, retention_ms);
}

void Cluster::increase_partitions(const std::string& topic, int32_t new_count) {
    auto spec = meta_->topic(topic);
    if (!spec) throw ApiError(404, "UNKNOWN_TOPIC", topic);
    if (new_count <= spec->partitions) {
        throw ApiError(400, "INVALID_SPEC", "partition count can only be increased");
    }
    uint64_t seed = meta_->next_assignment_seed();
    std::vector<PartitionAssignment> added;
    for (int32_t p = spec->partitions; p < new_count; ++p) {
        PartitionAssignment pa;
        for (int32_t r = 0; r < spec->replication_factor; ++r) {
            pa.replicas.push_back(
                static_cast<int>((seed + static_cast<uint64_t>(p + r)) % cfg_.brokers));
        }
        pa.leader = pa.replicas.front();
        added.push_back(std::move(pa));
    }
    meta_->add_partitions(topic, added);
    for (int32_t p = spec->partitions; p < new_count; ++p) {
        const auto& pa = added[static_cast<size_t>(p - spec->partitions)];
        create_partition_replicas(topic, p, pa);
        if (running_.load()) {
            Partition* part = replica(pa.leader, topic, p);
            become_leader(*part);
        }
    }
}

void Cluster::grant(const std::string& topic, const std::string& identity,
                    const std::set<Permission>& perms, bool revoke) {
    if (!meta_->topic_exists(topic)) throw ApiError(404, "UNKNOWN_TOPIC", topic);
    meta_->set_grants(topic, identity, perms, revoke);
}

bool Cluster::has_permission(const std::string& identity, const std::string& topic,
                             Permission perm) const {
    if (identity == kClusterIdentity) return true;
    return meta_->has_permission(identity, topic, perm);
}

// -- Leadership and replication ----------------------------------------------

void Cluster::become_leader(Partition& p) {
    auto assignment = meta_->assignment(p.topic);
    const auto& pa = assignment[static_cast<size_t>(p.index)];

    std::vector<int> others;
    for (int replica_id : pa.replicas) {
        if (replica_id != p.broker_id) others.push_back(replica_id);
    }

    uint64_t epoch;
    {
        std::lock_guard lk(p.mu);
        if (p.leading.load()) return;
        epoch = p.epoch.fetch_add(1) + 1;
        p.followers.clear();
        int64_t now_us = steady_now_us();
        int64_t leo = p.log->next_offset();
        for (int f : others) {
            auto fo = std::make_unique<Follower>();
            // Fresh topics start with every replica in sync at offset zero;
            // re-elections start conservatively and let followers rejoin by
            // catching up.
            bool fresh = (leo == 0);
            fo->acked_leo.store(fresh ? 0 : leo);
            fo->in_sync.store(fresh);
            fo->last_progress_us.store(now_us);
            p.followers[f] = std::move(fo);
        }
        p.has_followers.store(!p.followers.empty());
        p.raise_watermark(leo);
        p.leading.store(true);
        recompute_hw(p);
        for (int f : others) {
            auto ch = std::make_unique<ReplChannel>();
            auto* raw = ch.get();
            p.channels[f] = std::move(ch);
            raw->thread = std::thread([this, &p, f, epoch] { replication_loop(p, f, epoch); });
        }
    }
    p.cv.notify_all();
}

void Cluster::stop_leadership(Partition& p) {
    std::map<int, std::unique_ptr<ReplChannel>> channels;
    {
        std::lock_guard lk(p.mu);
        if (!p.leading.load() && p.channels.empty()) return;
        p.leading.store(false);
        p.epoch.fetch_add(1);
        channels.swap(p.channels);
        for (auto& [id, ch] : channels) ch->stop.store(true);
    }
    p.cv.notify_all();
    for (auto& [id, ch] : channels) {
        if (ch->thread.joinable()) ch->thread.join();
    }
}

void Cluster::recompute_hw(Partition& p) {
    int64_t hw = p.log->next_offset();
    for (const auto& [id, f] : p.followers) {
        if (f->in_sync.load()) hw = std::min(hw, f->acked_leo.load());
    }
    if (hw > p.high_watermark.load()) {
        p.raise_watermark(hw);
        p.cv.notify_all();
    }
}

void Cluster::reevaluate_isr(Partition& p, int64_t now_us) {
    std::lock_guard lk(p.mu);
    if (!p.leading.load()) return;
    int64_t leo = p.log->next_offset();
    bool changed = false;
    for (auto& [id, f] : p.followers) {
        if (!f->in_sync.load()) continue;
        if (f->acked_leo.load() >= leo) {
            f->last_progress_us.store(now_us);
            continue;
        }
        if (now_us - f->last_progress_us.load() > int64_t(cfg_.sync_timeout_ms) * 1000) {
            f->in_sync.store(false);
            changed = true;
        }
    }
    if (changed) recompute_hw(p);
}

void Cluster::replication_loop(Partition& p, int follower_id, uint64_t epoch) {
    PeerConn peer;
    int64_t sent_earliest = -1;
    Follower* f = nullptr;
    ReplChannel* ch = nullptr;
    {
        std::lock_guard lk(p.mu);
        auto fit = p.followers.find(follower_id);
        auto cit = p.channels.find(follower_id);
        if (fit == p.followers.end() || cit == p.channels.end()) return;
        f = fit->second.get();
        ch = cit->second.get();
    }

    for (;;) {
        if (p.epoch.load() != epoch || !p.leading.load() || ch->stop.load()) return;

        int64_t leo = p.log->next_offset();
        int64_t earliest = p.log->earliest_offset();
        // Idle while the follower is in sync, caught up, and earliest is
        // unchanged. The wait is sliced so a missed notify costs little.
        if (f->in_sync.load() && f->acked_leo.load() >= leo && sent_earliest == earliest) {
            std::unique_lock lk(p.mu);
            p.cv.wait_for(lk, 20ms);
            continue;
        }
        int64_t base = std::max(f->acked_leo.load(), earliest);

        if (broker_halted(follower_id)) {
            peer.reset();
            std::this_thread::sleep_for(20ms);
            continue;
        }
        if (!peer.ready() &&
            !peer.open(cfg_.host, broker_port(follower_id), meta_->cluster_secret())) {
            std::this_thread::sleep_for(10ms);
            continue;
        }

        proto::ReplicateReq req;
        req.topic = p.topic;
        req.partition = p.index;
        req.earliest = earliest;
        req.base = base;
        if (base < leo) {
            req.records = p.log->read(base, kReplicationBatchRecords, kReplicationBatchBytes,
                                      leo);
        }

        uint8_t op = 0;
        Bytes body;
        if (!peer.request(proto::OP_REPLICATE, proto::encode(req), &op, &body,
                          kPeerIoTimeoutMs)) {
            std::this_thread::sleep_for(10ms);
            continue;
        }
        if (op != (proto::OP_REPLICATE | proto::RESP_BIT)) {
            peer.reset();
            continue;
        }
        proto::ReplicateResp resp;
        try {
            ByteReader r(body);
            resp = proto::decode_replicate_resp(r);
        } catch (const CodecError&) {
            peer.reset();
            continue;
        }
        if (resp.status != proto::Status::OK) {
            std::this_thread::sleep_for(10ms);
            continue;
        }
        sent_earliest = earliest;

        if (p.epoch.load() != epoch || !p.leading.load()) return;
        int64_t current_leo = p.log->next_offset();
        // A follower reporting a longer log than ours has a stale tail; it
        // gets truncated when we push real records over it.
        int64_t acked = std::min(resp.log_end, current_leo);
        if (acked != f->acked_leo.load()) {
            f->last_progress_us.store(steady_now_us());
        }
        f->acked_leo.store(acked);
        bool newly_in_sync = false;
        if (acked >= current_leo) {
            f->last_progress_us.store(steady_now_us());
            newly_in_sync = !f->in_sync.load();
        }
        {
            std::lock_guard lk(p.mu);
            if (p.epoch.load() != epoch || !p.leading.load()) return;
            if (newly_in_sync && f->acked_leo.load() >= p.log->next_offset()) {
                f->in_sync.store(true);
            }
            recompute_hw(p);
        }
    }
}

void Cluster::fail_over(const std::string& topic, int32_t partition, int dead_broker) {
    auto assignment = meta_->assignment(topic);
    if (partition < 0 || partition >= static_cast<int32_t>(assignment.size())) return;
    const auto& pa = assignment[static_cast<size_t>(partition)];

    Partition* old_leader = replica(dead_broker, topic, partition);
    std::set<int> isr;
    if (old_leader) {
        std::lock_guard lk(old_leader->mu);
        for (const auto& [id, f] : old_leader->followers) {
            if (f->in_sync.load()) isr.insert(id);
        }
    }

    // Next replica in declared order after the dead leader, restricted to
    // live replicas that were in sync (so no confirmed record is lost).
    auto pos = std::find(pa.replicas.begin(), pa.replicas.end(), dead_broker);
    size_t start = pos == pa.replicas.end() ? 0 : static_cast<size_t>(pos - pa.replicas.begin());
    int new_leader = -1;
    for (size_t i = 1; i <= pa.replicas.size(); ++i) {
        int cand = pa.replicas[(start + i) % pa.replicas.size()];
        if (cand == dead_broker) continue;
        if (broker_halted(cand)) continue;
        if (isr.count(cand)) {
            new_leader = cand;
            break;
        }
    }

    if (old_leader) stop_leadership(*old_leader);
    meta_->set_leader(topic, partition, new_leader);
    if (new_leader >= 0) {
        Partition* part = replica(new_leader, topic, partition);
        if (part) become_leader(*part);
    }
}

void Cluster::halt_broker(int broker_id) {
    if (broker_id < 0 || broker_id >= cfg_.brokers) {
        throw ApiError(404, "UNKNOWN_BROKER", "broker " + std::to_string(broker_id));
    }
    auto& b = *brokers_[static_cast<size_t>(broker_id)];
    if (b.halted.exchange(true)) return;
    if (b.server) b.server->pause();

    // Deterministic leadership transfer for every partition this broker led.
    for (const auto& name : meta_->topic_names()) {
        auto assignment = meta_->assignment(name);
        for (size_t p = 0; p < assignment.size(); ++p) {
            if (assignment[p].leader == broker_id) {
                fail_over(name, static_cast<int32_t>(p), broker_id);
            }
        }
    }
}

void Cluster::resume_broker(int broker_id) {
    if (broker_id < 0 || broker_id >= cfg_.brokers) {
        throw ApiError(404, "UNKNOWN_BROKER", "broker " + std::to_string(broker_id));
    }
    auto& b = *brokers_[static_cast<size_t>(broker_id)];
    if (!b.halted.exchange(false)) return;
    if (b.server) b.server->resume();

    for (const auto& name : meta_->topic_names()) {
        auto assignment = meta_->assignment(name);
        for (size_t p = 0; p < assignment.size(); ++p) {
            const auto& pa = assignment[p];
            if (std::find(pa.replicas.begin(), pa.replicas.end(), broker_id) ==
                pa.replicas.end()) {
                continue;
            }
            int32_t part_idx = static_cast<int32_t>(p);
            int leader = meta_->leader(name, part_idx);
            if (leader == broker_id) continue;  // still registered as leader
            if (leader < 0 || broker_halted(leader)) {
                // Partition had no serving leader; first live replica in
                // declared order takes over.
                for (int cand : pa.replicas) {
                    if (!broker_halted(cand)) {
                        meta_->set_leader(name, part_idx, cand);
                        Partition* part = replica(cand, name, part_idx);
                        if (part) become_leader(*part);
                        break;
                    }
                }
                continue;
            }
            // Re-sync from the current leader before rejoining the ISR.
            std::lock_guard lk(bg_mu_);
            bg_threads_.emplace_back([this, broker_id, name, part_idx] {
                catch_up_from_leader(broker_id, name, part_idx);
            });
        }
    }
}

bool Cluster::broker_halted(int broker_id) const {
    if (broker_id < 0 || broker_id >= static_cast<int>(brokers_.size())) return true;
    return brokers_[static_cast<size_t>(broker_id)]->halted.load();
}

void Cluster::catch_up_from_leader(int broker_id, const std::string& topic, int32_t partition) {
    Partition* mine = replica(broker_id, topic, partition);
    if (!mine) return;
    PeerConn peer;
    for (int attempts = 0; attempts < 200 && running_.load(); ++attempts) {
        int leader = meta_->leader(topic, partition);
        if (leader < 0 || leader == broker_id || broker_halted(leader)) return;
        if (broker_halted(broker_id)) return;
        if (!peer.ready() && !peer.open(cfg_.host, broker_port(leader), meta_->cluster_secret())) {
            std::this_thread::sleep_for(50ms);
            continue;
        }
        proto::SyncReq req;
        req.topic = topic;
        req.partition = partition;
        req.from = mine->log->next_offset();
        req.max_records = kReplicationBatchRecords;
        uint8_t op = 0;
        Bytes body;
        if (!peer.request(proto::OP_SYNC, proto::encode(req), &op, &body, kPeerIoTimeoutMs) ||
            op != (proto::OP_SYNC | proto::RESP_BIT)) {
            peer.reset();
            std::this_thread::sleep_for(50ms);
            continue;
        }
        proto::SyncResp resp;
        try {
            ByteReader r(body);
            resp = proto::decode_sync_resp(r);
        } catch (const CodecError&) {
            peer.reset();
            continue;
        }
        if (resp.status != proto::Status::OK) return;
        if (resp.records.empty()) {
            if (mine->log->next_offset() >= resp.log_end) return;  // caught up
            std::this_thread::sleep_for(20ms);
            continue;
        }
        proto::Status st = proto::Status::OK;
        apply_replicate(broker_id, topic, partition, resp.earliest, resp.records.front().offset,
                        resp.records, &st);
        if (st != proto::Status::OK) return;
    }
}

int64_t Cluster::apply_replicate(int broker_id, const std::string& topic, int32_t partition,
                                 int64_t leader_earliest, int64_t base_offset,
                                 const std::vector<Record>& records, proto::Status* st) {
    *st = proto::Status::OK;
    Partition* p = replica(broker_id, topic, partition);
    if (!p) {
        *st = proto::Status::UNKNOWN_PARTITION;
        return -1;
    }
    std::lock_guard lk(p->apply_mu);
    auto& log = *p->log;
    int64_t leo = log.next_offset();

    if (base_offset > leo) {
        // Too far behind to be bridged: the leader has purged below its
        // base. Restart the replica at the leader's earliest.
        if (base_offset <= leader_earliest) {
            log.reset(base_offset);
            leo = base_offset;
        } else {
            return leo;  // ask the leader to rewind
        }
    }
    for (const auto& rec : records) {
        if (rec.offset < leo) {
            auto local = log.read_one(rec.offset);
            if (local && local->same_content(rec)) continue;  // duplicate push
            log.truncate_from(rec.offset);
            leo = rec.offset;
        }
        if (rec.offset == leo) {
            log.append_replicated(rec);
            leo = log.next_offset();
        } else if (rec.offset > leo) {
            break;  // gap; leader will resend from our end
        }
    }
    if (leader_earliest > log.earliest_offset()) {
        log.advance_earliest(std::min(leader_earliest, log.next_offset()));
    }
    return log.next_offset();
}

FetchResult Cluster::sync_read(int broker_id, const std::string& topic, int32_t partition,
                               int64_t from, uint32_t max_records, int64_t* log_end,
                               int64_t* earliest) {
    FetchResult res;
    *log_end = 0;
    *earliest = 0;
    Partition* p = replica(broker_id, topic, partition);
    if (!p) {
        res.status = proto::Status::UNKNOWN_PARTITION;
        return res;
    }
    int64_t leo = p->log->next_offset();
    *log_end = leo;
    *earliest = p->log->earliest_offset();
    from = std::max(from, *earliest);
    if (from < leo) {
        res.records = p->log->read(from, max_records, kReplicationBatchBytes, leo);
    }
    res.status = proto::Status::OK;
    return res;
}

// -- Data plane ----------------------------------------------------------------

AppendResult Cluster::append(const std::string& identity, const std::string& topic,
                             int32_t partition, uint8_t acks, Bytes key, Bytes value,
                             uint32_t* rr_cursor) {
    AppendResult res;
    auto spec = meta_->topic(topic);
    if (!spec) {
        res.status = proto::Status::UNKNOWN_TOPIC;
        return res;
    }
    if (!has_permission(identity, topic, Permission::WRITE)) {
        res.status = proto::Status::UNAUTHORIZED;
        return res;
    }
    if (key.size() + value.size() > proto::kMaxRecordBytes) {
        res.status = proto::Status::MALFORMED;
        return res;
    }
    if (partition < 0) {
        partition = resolve_partition(topic, key, rr_cursor, -1);
    }
    if (partition >= spec->partitions) {
        res.status = proto::Status::UNKNOWN_PARTITION;
        return res;
    }
    res.partition = partition;

    int leader = -1;
    Partition* p = leader_replica(topic, partition, &leader);
    if (!p) {
        res.status = proto::Status::NO_LEADER;
        return res;
    }
    AppendResult out = append_on_leader(*p, acks, std::move(key), std::move(value));
    out.partition = partition;
    return out;
}

int32_t Cluster::resolve_partition(const std::string& topic, const Bytes& key,
                                   uint32_t* rr_cursor, int prefer_broker) const {
    auto spec = meta_->topic(topic);
    if (!spec) return -1;
    if (!key.empty()) return partition_for_key(key, spec->partitions);
    uint32_t cursor = rr_cursor ? (*rr_cursor)++ : default_rr_.fetch_add(1);
    if (prefer_broker >= 0) {
        std::vector<int32_t> led;
        for (int32_t p = 0; p < spec->partitions; ++p) {
            if (meta_->leader(topic, p) == prefer_broker) led.push_back(p);
        }
        if (!led.empty()) return led[cursor % led.size()];
    }
    return static_cast<int32_t>(cursor % static_cast<uint32_t>(spec->partitions));
}

AppendResult Cluster::append_on_leader(Partition& p, uint8_t acks, Bytes key, Bytes value) {
    AppendResult res;
    Record rec = p.log->append(std::move(key), std::move(value), cfg_.clock());
    if (!p.leading.load()) {
        // Deposed while appending; the record lands in a stale replica log
        // and is repaired by truncation when this broker rejoins.
        res.status = proto::Status::NOT_LEADER;
        return res;
    }
    if (!p.has_followers.load()) {
        p.raise_watermark(rec.offset + 1);
    }
    p.cv.notify_all();

    res.offset = rec.offset;
    res.timestamp_ms = rec.timestamp_ms;
    if (acks == 0 || acks == 1) {
        res.status = proto::Status::OK;
        return res;
    }
    // acks=ALL: wait for the high watermark to cover this record. Sliced
    // waits keep the wakeup path free of the append-side lock.
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(cfg_.replication_timeout_ms);
    for (;;) {
        if (p.high_watermark.load() > rec.offset) break;
        if (!p.leading.load() || std::chrono::steady_clock::now() >= deadline) {
            res.status = proto::Status::REPLICATION_TIMEOUT;
            return res;
        }
        std::unique_lock lk(p.mu);
        p.cv.wait_for(lk, 2ms);
    }
    res.status = proto::Status::OK;
    return res;
}

FetchResult Cluster::fetch(const std::string& identity, const std::string& topic,
                           int32_t partition, int64_t from, uint32_t max_records,
                           uint32_t max_bytes, bool long_poll) {
    FetchResult res;
    auto spec = meta_->topic(topic);
    if (!spec) {
        res.status = proto::Status::UNKNOWN_TOPIC;
        return res;
    }
    if (!has_permission(identity, topic, Permission::READ)) {
        res.status = proto::Status::UNAUTHORIZED;
        return res;
    }
    if (partition < 0 || partition >= spec->partitions) {
        res.status = proto::Status::UNKNOWN_PARTITION;
        return res;
    }
    Partition* p = leader_replica(topic, partition, nullptr);
    if (!p) {
        res.status = proto::Status::NO_LEADER;
        return res;
    }

    int64_t earliest = p->log->earliest_offset();
    int64_t leo = p->log->next_offset();
    if (from < earliest || from > leo) {
        res.status = proto::Status::OFFSET_OUT_OF_RANGE;
        return res;
    }
    max_records = std::min(max_records, 100'000u);
    max_bytes = std::min<uint32_t>(max_bytes, 6u << 20);

    res.status = proto::Status::OK;
    if (from < p->high_watermark.load()) {
        res.records = p->log->read(from, max_records, max_bytes, p->high_watermark.load());
        return res;
    }
    if (long_poll) {
        auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(cfg_.fetch_longpoll_ms);
        while (p->high_watermark.load() <= from && p->leading.load() &&
               std::chrono::steady_clock::now() < deadline) {
            std::unique_lock lk(p->mu);
            p->cv.wait_for(lk, 20ms);
        }
        if (from < p->high_watermark.load()) {
            res.records = p->log->read(from, max_records, max_bytes, p->high_watermark.load());
        }
    }
    return res;
}

OffsetResult Cluster::lookup_offset(const std::string& identity, const std::string& topic,
                                    int32_t partition, int64_t target) {
    OffsetResult res;
    auto spec = meta_->topic(topic);
    if (!spec) {
        res.status = proto::Status::UNKNOWN_TOPIC;
        return res;
    }
    if (!has_permission(identity, topic, Permission::READ) &&
        !has_permission(identity, topic, Permission::DESCRIBE)) {
        res.status = proto::Status::UNAUTHORIZED;
        return res;
    }
    if (partition < 0 || partition >= spec->partitions) {
        res.status = proto::Status::UNKNOWN_PARTITION;
        return res;
    }
    Partition* p = leader_replica(topic, partition, nullptr);
    if (!p) {
        res.status = proto::Status::NO_LEADER;
        return res;
    }
    if (target == kTargetEarliest) {
        res.offset = p->log->earliest_offset();
    } else if (target == kTargetLatest) {
        res.offset = p->log->next_offset();
    } else {
        res.offset = p->log->lookup_timestamp(target);
    }
    res.status = proto::Status::OK;
    return res;
}

// -- Consumer group offsets ------------------------------------------------------

Bytes Cluster::offsets_key(const std::string& group, const std::string& topic,
                           int32_t partition) {
    ByteWriter w;
    w.str16(group);
    w.str16(topic);
    w.i32(partition);
    return w.take();
}

proto::Status Cluster::commit_offset(const std::string& group, const std::string& topic,
                                     int32_t partition, int64_t offset) {
    auto spec = meta_->topic(topic);
    if (!spec) return proto::Status::UNKNOWN_TOPIC;
    if (partition < 0 || partition >= spec->partitions) return proto::Status::UNKNOWN_PARTITION;
    Partition* p = leader_replica(topic, partition, nullptr);
    if (!p) return proto::Status::NO_LEADER;
    int64_t earliest = p->log->earliest_offset();
    int64_t leo = p->log->next_offset();
    if (offset < earliest || offset > leo) return proto::Status::OFFSET_OUT_OF_RANGE;

    // Persist to the internal offsets topic before acknowledging.
    ByteWriter val;
    val.i64(offset);
    AppendResult ar = append(kClusterIdentity, kOffsetsTopic, 0, 1,
                             offsets_key(group, topic, partition), val.take());
    if (ar.status != proto::Status::OK) return ar.status;
    {
        std::lock_guard lk(offsets_mu_);
        offsets_cache_[{group, topic, partition}] = offset;
    }
    maybe_compact_offsets();
    return proto::Status::OK;
}

int64_t Cluster::fetch_committed(const std::string& group, const std::string& topic,
                                 int32_t partition) const {
    std::lock_guard lk(const_cast<std::mutex&>(offsets_mu_));
    auto it = offsets_cache_.find({group, topic, partition});
    if (it == offsets_cache_.end()) return -1;
    return it->second;
}

int64_t Cluster::group_lag(const std::string& group, const std::string& topic) const {
    auto spec = meta_->topic(topic);
    if (!spec) return 0;
    int64_t lag = 0;
    for (int32_t p = 0; p < spec->partitions; ++p) {
        Partition* part = leader_replica(topic, p, nullptr);
        if (!part) continue;
        int64_t committed = fetch_committed(group, topic, p);
        if (committed < 0) committed = part->log->earliest_offset();
        lag += std::max<int64_t>(0, part->log->next_offset() - committed);
    }
    return lag;
}

void Cluster::rebuild_offsets_cache() {
    Partition* p = leader_replica(kOffsetsTopic, 0, nullptr);
    if (!p) return;
    int64_t off = p->log->earliest_offset();
    int64_t end = p->log->next_offset();
    std::lock_guard lk(offsets_mu_);
    offsets_cache_.clear();
    while (off < end) {
        auto batch = p->log->read(off, 1024, 8u << 20, end);
        if (batch.empty()) break;
        for (const auto& rec : batch) {
            try {
                ByteReader kr(rec.key);
                std::string group = kr.str16();
                std::string topic = kr.str16();
                int32_t partition = kr.i32();
                ByteReader vr(rec.value);
                offsets_cache_[{group, topic, partition}] = vr.i64();
            } catch (const CodecError&) {
                // tolerate foreign entries
            }
        }
        off = batch.back().offset + 1;
    }
}

void Cluster::maybe_compact_offsets() {
    Partition* p = leader_replica(kOffsetsTopic, 0, nullptr);
    if (!p) return;
    int64_t span = p->log->next_offset() - p->log->earliest_offset();
    if (span < cfg_.offsets_compact_threshold) return;
    if (compacting_offsets_.exchange(true)) return;
    struct Release {
        std::atomic<bool>& flag;
        ~Release() { flag.store(false); }
    } release{compacting_offsets_};

    // Rewrite: append a snapshot of the live entries, then advance earliest
    // past the old region. Followers pick the new earliest up from
    // replication pushes.
    std::map<std::tuple<std::string, std::string, int32_t>, int64_t> snapshot;
    {
        std::lock_guard lk(offsets_mu_);
        snapshot = offsets_cache_;
    }
    int64_t snapshot_base = p->log->next_offset();
    for (const auto& [key, offset] : snapshot) {
        ByteWriter val;
        val.i64(offset);
        append(kClusterIdentity, kOffsetsTopic, 0, 1,
               offsets_key(std::get<0>(key), std::get<1>(key), std::get<2>(key)), val.take());
    }
    p->log->advance_earliest(std::min(snapshot_base, p->high_watermark.load()));
    p->cv.notify_all();
}

// -- Retention -------------------------------------------------------------------

uint64_t Cluster::enforce_retention(int64_t now_ms) {
    uint64_t purged = 0;
    for (const auto& name : meta_->topic_names()) {
        auto spec = meta_->topic(name);
        if (!spec) continue;
        int64_t cutoff = now_ms - spec->retention_ms;
        for (int32_t pi = 0; pi < spec->partitions; ++pi) {
            Partition* p = leader_replica(name, pi, nullptr);
            if (!p) continue;
            int64_t target = p->log->lookup_timestamp(cutoff);
            target = std::min(target, p->high_watermark.load());
            int64_t before = p->log->earliest_offset();
            if (target > before) {
                p->log->advance_earliest(target);
                purged += static_cast<uint64_t>(target - before);
                p->cv.notify_all();  // wake channels to propagate earliest
            }
        }
    }
    return purged;
}

// -- Introspection ------------------------------------------------------------------

int Cluster::leader_of(const std::string& topic, int32_t partition) const {
    int leader = meta_->leader(topic, partition);
    if (leader >= 0 && broker_halted(leader)) return -1;
    return leader;
}

int32_t Cluster::partition_count(const std::string& topic) const {
    auto spec = meta_->topic(topic);
    return spec ? spec->partitions : -1;
}

int64_t Cluster::latest_offset(const std::string& topic, int32_t partition) const {
    Partition* p = leader_replica(topic, partition, nullptr);
    return p ? p->log->next_offset() : -1;
}

int64_t Cluster::earliest_offset(const std::string& topic, int32_t partition) const {
    Partition* p = leader_replica(topic, partition, nullptr);
    return p ? p->log->earliest_offset() : -1;
}

int64_t Cluster::high_watermark(const std::string& topic, int32_t partition) const {
    Partition* p = leader_replica(topic, partition, nullptr);
    if (!p) return -1;
    return p->high_watermark.load();
}

bool Cluster::wait_high_watermark(const std::string& topic, int32_t partition, int64_t offset,
                                  int timeout_ms) {
    Partition* p = leader_replica(topic, partition, nullptr);
    if (!p) return false;
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (p->high_watermark.load() < offset) {
        if (std::chrono::steady_clock::now() >= deadline) return false;
        std::unique_lock lk(p->mu);
        p->cv.wait_for(lk, 5ms);
    }
    return true;
}

// -- Maintenance ---------------------------------------------------------------------

void Cluster::bootstrap_internal_topics() {
    int32_t rf = static_cast<int32_t>(std::min(cfg_.brokers, 3));
    if (!meta_->topic_exists(kOffsetsTopic)) {
        TopicSpec spec;
        spec.name = kOffsetsTopic;
        spec.partitions = 1;
        spec.replication_factor = rf;
        spec.retention_ms = kInternalRetentionMs;
        create_topic_internal(spec, kClusterIdentity, {});
    }
    if (!meta_->topic_exists(kAuditTopic)) {
        TopicSpec spec;
        spec.name = kAuditTopic;
        spec.partitions = 1;
        spec.replication_factor = rf;
        spec.retention_ms = cfg_.default_retention_ms;
        create_topic_internal(spec, kClusterIdentity, {});
    }
}

void Cluster::monitor_loop() {
    int64_t tick_ms = std::max(20, std::min(cfg_.sync_timeout_ms / 4, 100));
    while (running_.load()) {
        {
            std::unique_lock lk(monitor_mu_);
            monitor_cv_.wait_for(lk, std::chrono::milliseconds(tick_ms),
                                 [&] { return !running_.load(); });
        }
        if (!running_.load()) break;

        int64_t now_us = steady_now_us();
        std::vector<Partition*> parts;
        {
            std::shared_lock lk(topo_mu_);
            for (auto& b : brokers_) {
                if (b->halted.load()) continue;
                for (auto& [key, part] : b->partitions) parts.push_back(part.get());
            }
        }
        for (auto* p : parts) reevaluate_isr(*p, now_us);

        int64_t now = cfg_.clock();
        if (now - last_retention_run_ms_ >= cfg_.retention_interval_ms) {
            last_retention_run_ms_ = now;
            enforce_retention(now);
        }
    }
}

}  // namespace octo::broker
