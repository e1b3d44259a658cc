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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "octo/common/bytes.hpp"

namespace octo::broker {

enum class Permission { READ, WRITE, DESCRIBE };

std::string permission_name(Permission p);
std::optional<Permission> permission_from_name(const std::string& name);

struct TopicSpec {
    std::string name;
    int32_t partitions = 1;
    int32_t replication_factor = 1;
    int64_t retention_ms = 604'800'000;  // seven days
    std::string owner;
};

// Topic name rule: [A-Za-z0-9._-]{1,249}
bool valid_topic_name(const std::string& name);

struct PartitionAssignment {
    std::vector<int> replicas;  // declared order; replicas[0] is the initial leader
    int leader = -1;            // current leader broker id, -1 when unavailable
};

struct IdentityInfo {
    std::string identity_id;
    std::string display_name;
    std::string pass_salt_hex;  // empty when login is disabled for this identity
    std::string pass_hash_hex;  // sha256(salt || password)
    std::map<std::string, int64_t> tokens;  // bearer token -> expiry, ms since epoch
};

struct DataKey {
    std::string key_id;
    std::string identity_id;
    Bytes secret;
    int64_t created_ms = 0;
};

// Durable cluster configuration: topics, partition assignments, grants,
// identities, data keys, and stored trigger specs. Single-writer via an
// internal mutex; persisted as one JSON document rewritten atomically on
// each mutation. Brokers consult it on every request.
class MetadataStore {
public:
    explicit MetadataStore(std::filesystem::path path);

    // Topics ---------------------------------------------------------------
    bool topic_exists(const std::string& topic) const;
    std::optional<TopicSpec> topic(const std::string& topic) const;
    std::vector<std::string> topic_names() const;
    // Registers a topic with its assignment; fails if present.
    void put_topic(const TopicSpec& spec, const std::vector<PartitionAssignment>& assignment);
    void set_retention(const std::string& topic, int64_t retention_ms);
    void add_partitions(const std::string& topic,
                        const std::vector<PartitionAssignment>& new_assignments);
    std::vector<PartitionAssignment> assignment(const std::string& topic) const;
    void set_leader(const std::string& topic, int32_t partition, int leader);
    int leader(const std::string& topic, int32_t partition) const;

    // Grants ---------------------------------------------------------------
    void set_grants(const std::string& topic, const std::string& identity,
                    const std::set<Permission>& perms, bool revoke);
    bool has_permission(const std::string& identity, const std::string& topic,
                        Permission perm) const;
    std::map<std::string, std::set<Permission>> grants(const std::string& topic) const;

    // Identities and credentials -------------------------------------------
    void put_identity(const IdentityInfo& info);
    std::optional<IdentityInfo> identity(const std::string& identity_id) const;
    bool identity_exists(const std::string& identity_id) const;
    void put_token(const std::string& identity_id, const std::string& token, int64_t expiry_ms);
    // Returns the identity owning a live token, or nullopt.
    std::optional<std::string> identity_for_token(const std::string& token, int64_t now_ms) const;
    void put_key(const DataKey& key);
    std::optional<DataKey> key(const std::string& key_id) const;

    // Trigger storage (opaque to the metadata layer) -------------------------
    void put_trigger(const std::string& trigger_id, const nlohmann::json& doc);
    void delete_trigger(const std::string& trigger_id);
    std::map<std::string, nlohmann::json> triggers() const;

    // Cluster-wide secret used by replication peers.
    const Bytes& cluster_secret() const { return cluster_secret_; }
    // Monotonic counter used to spread assignments across brokers.
    uint64_t next_assignment_seed();

private:
    void load();
    void persist_locked();

    std::filesystem::path path_;
    mutable std::shared_mutex mu_;

    std::map<std::string, TopicSpec> topics_;
    std::map<std::string, std::vector<PartitionAssignment>> assignments_;
    // topic -> identity -> permissions
    std::map<std::string, std::map<std::string, std::set<Permission>>> grants_;
    std::map<std::string, IdentityInfo> identities_;
    std::map<std::string, DataKey> keys_;
    std::map<std::string, nlohmann::json> triggers_;
    Bytes cluster_secret_;
    uint64_t assignment_seed_ = 0;
};

}  // namespace octo::broker
