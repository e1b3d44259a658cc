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
#include <deque>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

#include "octo/client/connection.hpp"
#include "octo/client/credentials.hpp"
#include "octo/protocol/status.hpp"

namespace octo::client {

struct ProducerConfig {
    uint8_t acks = 1;  // 0, 1 or 255 (= all in-sync replicas)
    int retries = 5;
    int retry_backoff_ms = 100;  // exponential x2 with +-20% jitter
    size_t buffer_memory_bytes = 262'144;
    int linger_ms = 5;
    int max_in_flight = 16;  // outstanding unacknowledged sends per broker
    bool block_on_buffer_full = true;
    int request_timeout_ms = 10'000;
    int connect_timeout_ms = 2'000;
    uint64_t jitter_seed = 0;  // 0 = seeded from entropy
};

struct DeliveryReport {
    enum class Outcome { OK, FAILED, EXHAUSTED };

    std::string topic;
    int32_t partition = -1;
    int64_t offset = -1;  // -1 at acks=0
    int64_t enqueue_us = 0;
    int64_t done_us = 0;
    double latency_ms = 0.0;
    Outcome outcome = Outcome::FAILED;
    proto::Status status = proto::Status::OK;  // last broker status for FAILED
    int attempts = 0;
};

// Buffered, pipelined producer. send() may be called from any thread;
// records are transmitted by a background sender respecting linger and
// in-flight limits, retried on leader changes and transport errors, and
// resolved with exactly one DeliveryReport each.
class Producer {
public:
    Producer(Credentials creds, ProducerConfig cfg);
    ~Producer();
    Producer(const Producer&) = delete;
    Producer& operator=(const Producer&) = delete;

    std::future<DeliveryReport> send(const std::string& topic, Bytes key, Bytes value,
                                     int32_t partition = -1);
    // Blocks until all outstanding sends resolve or the timeout elapses;
    // returns the number still unresolved.
    size_t flush(int timeout_ms);
    void close();

    uint64_t ok_count() const { return ok_.load(); }
    uint64_t failed_count() const { return failed_.load(); }
    uint64_t exhausted_count() const { return exhausted_.load(); }

private:
    struct Pending {
        std::string topic;
        int32_t partition = -1;
        Bytes key;
        Bytes value;
        int attempts = 0;
        uint64_t seq = 0;  // send order, preserved across requeues
        int64_t enqueue_us = 0;
        int64_t due_us = 0;  // retry backoff deadline
        std::promise<DeliveryReport> promise;
    };
    using PendingPtr = std::shared_ptr<Pending>;

    struct Pipe {
        Endpoint endpoint;
        std::unique_ptr<Connection> conn;
        std::thread reader;
        std::mutex mu;
        std::deque<PendingPtr> awaiting;  // responses expected in this order
        std::atomic<bool> dead{false};
    };

    void sender_loop();
    void reader_loop(Pipe* pipe);
    Pipe* pipe_for(const Endpoint& ep);
    Endpoint target_for(const PendingPtr& p);
    void resolve(const PendingPtr& p, DeliveryReport::Outcome outcome, proto::Status st,
                 int32_t partition, int64_t offset);
    void requeue(const PendingPtr& p, proto::Status st);
    // Reinserts a pending send at its sequence position so retries keep the
    // original per-partition order.
    void reinsert(const PendingPtr& p);
    int64_t backoff_us(int attempts);

    Credentials creds_;
    ProducerConfig cfg_;

    std::mutex mu_;
    std::condition_variable queue_cv_;  // sender wakeups
    std::condition_variable space_cv_;  // producers blocked on the buffer
    std::condition_variable drain_cv_;  // flush waiters
    std::deque<PendingPtr> queue_;
    size_t queued_bytes_ = 0;
    size_t unresolved_ = 0;
    uint64_t next_seq_ = 0;

    std::map<Endpoint, std::unique_ptr<Pipe>> pipes_;
    std::mutex pipes_mu_;
    // Leader cache: (topic, partition) -> endpoint.
    std::map<std::pair<std::string, int32_t>, Endpoint> leaders_;
    std::mutex leaders_mu_;

    std::atomic<bool> running_{true};
    std::thread sender_;
    std::mt19937_64 rng_;
    std::mutex rng_mu_;
    size_t rr_ = 0;

    std::atomic<uint64_t> ok_{0}, failed_{0}, exhausted_{0};
};

}  // namespace octo::client
