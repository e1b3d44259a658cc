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

#include "octo/broker/metadata.hpp"

#include <fstream>
#include <mutex>
#include <shared_mutex>

#include "octo/common/crypto.hpp"
#include "octo/common/error.hpp"

namespace octo::broker {

using nlohmann::json;

std::string permission_name(Permission p) {
    switch (p) {
        case Permission::READ: return "READ";
        case Permission::WRITE: return "WRITE";
        case Permission::DESCRIBE: return "DESCRIBE";
    }
    return "?";
}

std::optional<Permission> permission_from_name(const std::string& name) {
    if (name == "READ") return Permission::READ;
    if (name == "WRITE") return Permission::WRITE;
    if (name == "DESCRIBE") return Permission::DESCRIBE;
    return std::nullopt;
}

bool valid_topic_name(const std::string& name) {
    if (name.empty() || name.size() > 249) return false;
    for (char c : name) {
        bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                  c == '.' || c == '_' || c == '-';
        if (!ok) return false;
    }
    return true;
}

MetadataStore::MetadataStore(std::filesystem::path path) : path_(std::move(path)) {
    std::filesystem::create_directories(path_.parent_path());
    if (std::filesystem::exists(path_)) {
        load();
    } else {
        cluster_secret_ = random_bytes(32);
        std::unique_lock lk(mu_);
        persist_locked();
    }
}

void MetadataStore::load() {
    std::ifstream in(path_);
    json doc = json::parse(in);

    std::unique_lock lk(mu_);
    hex_decode(doc.value("cluster_secret", std::string{}), cluster_secret_);
    assignment_seed_ = doc.value("assignment_seed", 0ull);

    for (const auto& t : doc.value("topics", json::array())) {
        TopicSpec spec;
        spec.name = t.at("name");
        spec.partitions = t.at("partitions");
        spec.replication_factor = t.at("replication_factor");
        spec.retention_ms = t.at("retention_ms");
        spec.owner = t.value("owner", "");
        topics_[spec.name] = spec;
        std::vector<PartitionAssignment> assign;
        for (const auto& pa : t.at("assignment")) {
            PartitionAssignment a;
            a.replicas = pa.at("replicas").get<std::vector<int>>();
            a.leader = pa.at("leader");
            assign.push_back(std::move(a));
        }
        assignments_[spec.name] = std::move(assign);
        json grants_doc = t.value("grants", json::object());
        for (const auto& [identity, perms] : grants_doc.items()) {
            for (const auto& p : perms) {
                auto perm = permission_from_name(p.get<std::string>());
                if (perm) grants_[spec.name][identity].insert(*perm);
            }
        }
    }
    json identities_doc = doc.value("identities", json::object());
    for (const auto& [id, v] : identities_doc.items()) {
        IdentityInfo info;
        info.identity_id = id;
        info.display_name = v.value("display_name", "");
        info.pass_salt_hex = v.value("pass_salt", "");
        info.pass_hash_hex = v.value("pass_hash", "");
        json tokens_doc = v.value("tokens", json::object());
        for (const auto& [tok, exp] : tokens_doc.items()) {
            info.tokens[tok] = exp.get<int64_t>();
        }
        identities_[id] = std::move(info);
    }
    json keys_doc = doc.value("keys", json::object());
    for (const auto& [kid, v] : keys_doc.items()) {
        DataKey key;
        key.key_id = kid;
        key.identity_id = v.at("identity");
        hex_decode(v.at("secret").get<std::string>(), key.secret);
        key.created_ms = v.value("created_ms", 0);
        keys_[kid] = std::move(key);
    }
    json triggers_doc = doc.value("triggers", json::object());
    for (const auto& [tid, v] : triggers_doc.items()) {
        triggers_[tid] = v;
    }
}

void MetadataStore::persist_locked() {
    json doc;
    doc["cluster_secret"] = hex_encode(cluster_secret_);
    doc["assignment_seed"] = assignment_seed_;
    json topics = json::array();
    for (const auto& [name, spec] : topics_) {
        json t;
        t["name"] = spec.name;
        t["partitions"] = spec.partitions;
        t["replication_factor"] = spec.replication_factor;
        t["retention_ms"] = spec.retention_ms;
        t["owner"] = spec.owner;
        json assign = json::array();
        for (const auto& pa : assignments_.at(name)) {
            assign.push_back({{"replicas", pa.replicas}, {"leader", pa.leader}});
        }
        t["assignment"] = assign;
        json grants = json::object();
        auto git = grants_.find(name);
        if (git != grants_.end()) {
            for (const auto& [identity, perms] : git->second) {
                json list = json::array();
                for (auto p : perms) list.push_back(permission_name(p));
                grants[identity] = list;
            }
        }
        t["grants"] = grants;
        topics.push_back(std::move(t));
    }
    doc["topics"] = topics;

    json ids = json::object();
    for (const auto& [id, info] : identities_) {
        json v;
        v["display_name"] = info.display_name;
        v["pass_salt"] = info.pass_salt_hex;
        v["pass_hash"] = info.pass_hash_hex;
        json toks = json::object();
        for (const auto& [tok, exp] : info.tokens) toks[tok] = exp;
        v["tokens"] = toks;
        ids[id] = std::move(v);
    }
    doc["identities"] = ids;

    json keys = json::object();
    for (const auto& [kid, key] : keys_) {
        keys[kid] = {{"identity", key.identity_id},
                     {"secret", hex_encode(key.secret)},
                     {"created_ms", key.created_ms}};
    }
    doc["keys"] = keys;

    json triggers = json::object();
    for (const auto& [tid, v] : triggers_) triggers[tid] = v;
    doc["triggers"] = triggers;

    auto tmp = path_;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << doc.dump();
    }
    std::filesystem::rename(tmp, path_);
#ifndef _WIN32
    std::filesystem::permissions(path_, std::filesystem::perms::owner_read |
                                            std::filesystem::perms::owner_write);
#endif
}

bool MetadataStore::topic_exists(const std::string& topic) const {
    std::shared_lock lk(mu_);
    return topics_.count(topic) > 0;
}

std::optional<TopicSpec> MetadataStore::topic(const std::string& topic) const {
    std::shared_lock lk(mu_);
    auto it = topics_.find(topic);
    if (it == topics_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> MetadataStore::topic_names() const {
    std::shared_lock lk(mu_);
    std::vector<std::string> out;
    out.reserve(topics_.size());
    for (const auto& [name, _] : topics_) out.push_back(name);
    return out;
}

void MetadataStore::put_topic(const TopicSpec& spec,
                              const std::vector<PartitionAssignment>& assignment) {
    std::unique_lock lk(mu_);
    OCTO_CHECK(topics_.count(spec.name) == 0, "topic already registered");
    topics_[spec.name] = spec;
    assignments_[spec.name] = assignment;
    persist_locked();
}

void MetadataStore::set_retention(const std::string& topic, int64_t retention_ms) {
    std::unique_lock lk(mu_);
    topics_.at(topic).retention_ms = retention_ms;
    persist_locked();
}

void MetadataStore::add_partitions(const std::string& topic,
                                   const std::vector<PartitionAssignment>& new_assignments) {
    std::unique_lock lk(mu_);
    auto& assign = assignments_.at(topic);
    assign.insert(assign.end(), new_assignments.begin(), new_assignments.end());
    topics_.at(topic).partitions = static_cast<int32_t>(assign.size());
    persist_locked();
}

std::vector<PartitionAssignment> MetadataStore::assignment(const std::string& topic) const {
    std::shared_lock lk(mu_);
    auto it = assignments_.find(topic);
    if (it == assignments_.end()) return {};
    return it->second;
}

void MetadataStore::set_leader(const std::string& topic, int32_t partition, int leader) {
    std::unique_lock lk(mu_);
    auto it = assignments_.find(topic);
    if (it == assignments_.end()) return;
    if (partition < 0 || partition >= static_cast<int32_t>(it->second.size())) return;
    it->second[static_cast<size_t>(partition)].leader = leader;
    persist_locked();
}

int MetadataStore::leader(const std::string& topic, int32_t partition) const {
    std::shared_lock lk(mu_);
    auto it = assignments_.find(topic);
    if (it == assignments_.end()) return -1;
    if (partition < 0 || partition >= static_cast<int32_t>(it->second.size())) return -1;
    return it->second[static_cast<size_t>(partition)].leader;
}

void MetadataStore::set_grants(const std::string& topic, const std::string& identity,
                               const std::set<Permission>& perms, bool revoke) {
    std::unique_lock lk(mu_);
    auto& by_identity = grants_[topic];
    if (revoke) {
        auto it = by_identity.find(identity);
        if (it != by_identity.end()) {
            for (auto p : perms) it->second.erase(p);
            if (it->second.empty()) by_identity.erase(it);
        }
    } else {
        by_identity[identity].insert(perms.begin(), perms.end());
    }
    persist_locked();
}

bool MetadataStore::has_permission(const std::string& identity, const std::string& topic,
                                   Permission perm) const {
    std::shared_lock lk(mu_);
    auto tit = grants_.find(topic);
    if (tit == grants_.end()) return false;
    auto iit = tit->second.find(identity);
    if (iit == tit->second.end()) return false;
    return iit->second.count(perm) > 0;
}

std::map<std::string, std::set<Permission>> MetadataStore::grants(const std::string& topic) const {
    std::shared_lock lk(mu_);
    auto it = grants_.find(topic);
    if (it == grants_.end()) return {};
    return it->second;
}

void MetadataStore::put_identity(const IdentityInfo& info) {
    std::unique_lock lk(mu_);
    identities_[info.identity_id] = info;
    persist_locked();
}

std::optional<IdentityInfo> MetadataStore::identity(const std::string& identity_id) const {
    std::shared_lock lk(mu_);
    auto it = identities_.find(identity_id);
    if (it == identities_.end()) return std::nullopt;
    return it->second;
}

bool MetadataStore::identity_exists(const std::string& identity_id) const {
    std::shared_lock lk(mu_);
    return identities_.count(identity_id) > 0;
}

void MetadataStore::put_token(const std::string& identity_id, const std::string& token,
                              int64_t expiry_ms) {
    std::unique_lock lk(mu_);
    identities_.at(identity_id).tokens[token] = expiry_ms;
    persist_locked();
}

std::optional<std::string> MetadataStore::identity_for_token(const std::string& token,
                                                             int64_t now_ms) const {
    std::shared_lock lk(mu_);
    for (const auto& [id, info] : identities_) {
        auto it = info.tokens.find(token);
        if (it != info.tokens.end() && it->second > now_ms) return id;
    }
    return std::nullopt;
}

void MetadataStore::put_key(const DataKey& key) {
    std::unique_lock lk(mu_);
    keys_[key.key_id] = key;
    persist_locked();
}

std::optional<DataKey> MetadataStore::key(const std::string& key_id) const {
    std::shared_lock lk(mu_);
    auto it = keys_.find(key_id);
    if (it == keys_.end()) return std::nullopt;
    return it->second;
}

void MetadataStore::put_trigger(const std::string& trigger_id, const json& doc) {
    std::unique_lock lk(mu_);
    triggers_[trigger_id] = doc;
    persist_locked();
}

void MetadataStore::delete_trigger(const std::string& trigger_id) {
    std::unique_lock lk(mu_);
    triggers_.erase(trigger_id);
    persist_locked();
}

std::map<std::string, json> MetadataStore::triggers() const {
    std::shared_lock lk(mu_);
    return triggers_;
}

uint64_t MetadataStore::next_assignment_seed() {
    std::unique_lock lk(mu_);
    uint64_t v = assignment_seed_++;
    persist_locked();
    return v;
}

}  // namespace octo::broker
