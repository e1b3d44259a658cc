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

#include <map>
#include <optional>
#include <vector>

#include "octo/broker/record.hpp"
#include "octo/client/connection.hpp"
#include "octo/client/credentials.hpp"

namespace octo::client {

struct ConsumerConfig {
    std::string group_id;  // empty = no offset tracking
    enum class Start { EARLIEST, LATEST, TIMESTAMP };
    Start start = Start::LATEST;
    int64_t start_timestamp_ms = 0;
    int auto_commit_interval_ms = 5000;  // 0 = manual commits only
    size_t receive_buffer_bytes = 2'097'152;
    int max_poll_records = 500;
    int request_timeout_ms = 10'000;
    int connect_timeout_ms = 2'000;
};

struct ConsumedRecord {
    std::string topic;
    int32_t partition = 0;
    broker::Record record;
};

// Single-threaded consumer with an explicit, static partition assignment.
// Positions resume from the group's committed offsets when present, else
// from the configured start. Auto-commit persists positions of records
// already returned by poll.
class Consumer {
public:
    Consumer(Credentials creds, ConsumerConfig cfg);
    ~Consumer();
    Consumer(const Consumer&) = delete;
    Consumer& operator=(const Consumer&) = delete;

    void assign(const std::string& topic, const std::vector<int32_t>& partitions);
    std::vector<ConsumedRecord> poll(size_t max_records);
    // Blocks until positions for all assigned partitions are durably
    // committed; returns false if any commit failed.
    bool commit_sync();
    int64_t position(const std::string& topic, int32_t partition) const;
    void seek(const std::string& topic, int32_t partition, int64_t offset);
    void close();

    uint64_t reset_count() const { return resets_; }

private:
    struct Assignment {
        std::string topic;
        int32_t partition = 0;
        int64_t position = -1;   // next offset to consume, -1 = unresolved
        int64_t committed = -1;  // last committed position
    };

    Connection* leader_conn(const std::string& topic, int32_t partition, bool force_reconnect);
    Connection* any_conn();
    bool resolve_position(Assignment& a);
    void maybe_auto_commit();
    bool commit_one(const Assignment& a);

    Credentials creds_;
    ConsumerConfig cfg_;
    std::vector<Assignment> assignments_;
    size_t cursor_ = 0;
    // Endpoint cache per partition plus live connections per endpoint.
    std::map<std::pair<std::string, int32_t>, Endpoint> leaders_;
    std::map<Endpoint, std::unique_ptr<Connection>> conns_;
    size_t rr_ = 0;
    int64_t last_auto_commit_us_ = 0;
    uint64_t resets_ = 0;
    bool closed_ = false;
};

}  // namespace octo::client
