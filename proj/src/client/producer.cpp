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

#include "octo/client/producer.hpp"

#include <algorithm>

#include "octo/common/clock.hpp"
#include "octo/common/crypto.hpp"

namespace octo::client {

using namespace std::chrono_literals;

Producer::Producer(Credentials creds, ProducerConfig cfg)
    : creds_(std::move(creds)), cfg_(cfg) {
    uint64_t seed = cfg_.jitter_seed;
    if (seed == 0) {
        auto r = random_bytes(8);
        for (int i = 0; i < 8; ++i) seed = (seed << 8) | r[static_cast<size_t>(i)];
    }
    rng_.seed(seed);
    sender_ = std::thread([this] { sender_loop(); });
}

Producer::~Producer() { close(); }

std::future<DeliveryReport> Producer::send(const std::string& topic, Bytes key, Bytes value,
                                           int32_t partition) {
    auto p = std::make_shared<Pending>();
    p->topic = topic;
    p->partition = partition;
    p->key = std::move(key);
    p->value = std::move(value);
    p->enqueue_us = steady_now_us();
    p->due_us = p->enqueue_us;
    auto fut = p->promise.get_future();

    size_t bytes = p->key.size() + p->value.size();
    {
        std::unique_lock lk(mu_);
        if (queued_bytes_ + bytes > cfg_.buffer_memory_bytes && !queue_.empty()) {
            if (!cfg_.block_on_buffer_full) {
                lk.unlock();
                DeliveryReport rep;
                rep.topic = topic;
                rep.outcome = DeliveryReport::Outcome::FAILED;
                rep.status = proto::Status::MALFORMED;
                rep.enqueue_us = p->enqueue_us;
                rep.done_us = steady_now_us();
                p->promise.set_value(rep);
                failed_.fetch_add(1);
                return fut;
            }
            space_cv_.wait(lk, [&] {
                return !running_.load() || queued_bytes_ + bytes <= cfg_.buffer_memory_bytes ||
                       queue_.empty();
            });
        }
        p->seq = next_seq_++;
        queue_.push_back(p);
        queued_bytes_ += bytes;
        ++unresolved_;
    }
    queue_cv_.notify_one();
    return fut;
}

size_t Producer::flush(int timeout_ms) {
    std::unique_lock lk(mu_);
    drain_cv_.wait_for(lk, std::chrono::milliseconds(timeout_ms),
                       [&] { return unresolved_ == 0; });
    return unresolved_;
}

void Producer::close() {
    if (!running_.exchange(false)) return;
    queue_cv_.notify_all();
    space_cv_.notify_all();
    if (sender_.joinable()) sender_.join();

    std::vector<std::unique_ptr<Pipe>> pipes;
    {
        std::lock_guard lk(pipes_mu_);
        for (auto& [ep, pipe] : pipes_) pipes.push_back(std::move(pipe));
        pipes_.clear();
    }
    for (auto& pipe : pipes) {
        if (pipe->conn) pipe->conn->shutdown();
        if (pipe->reader.joinable()) pipe->reader.join();
        std::lock_guard plk(pipe->mu);
        for (auto& p : pipe->awaiting) {
            resolve(p, DeliveryReport::Outcome::EXHAUSTED, proto::Status::NO_LEADER, p->partition,
                    -1);
        }
        pipe->awaiting.clear();
    }
    std::deque<PendingPtr> leftovers;
    {
        std::lock_guard lk(mu_);
        leftovers.swap(queue_);
        queued_bytes_ = 0;
    }
    for (auto& p : leftovers) {
        resolve(p, DeliveryReport::Outcome::EXHAUSTED, proto::Status::NO_LEADER, p->partition, -1);
    }
}

int64_t Producer::backoff_us(int attempts) {
    int64_t base = int64_t(cfg_.retry_backoff_ms) * 1000;
    int64_t delay = base << std::min(attempts - 1, 16);
    delay = std::min<int64_t>(delay, 30'000'000);
    std::lock_guard lk(rng_mu_);
    double jitter = 0.8 + 0.4 * std::uniform_real_distribution<double>(0, 1)(rng_);
    return static_cast<int64_t>(static_cast<double>(delay) * jitter);
}

Endpoint Producer::target_for(const PendingPtr& p) {
    std::lock_guard lk(leaders_mu_);
    if (p->partition >= 0) {
        auto it = leaders_.find({p->topic, p->partition});
        if (it != leaders_.end()) return it->second;
        // Unknown leader: pick a stable bootstrap broker so every record of
        // this partition follows the same path (and the same redirect).
        return creds_.brokers[static_cast<size_t>(p->partition) % creds_.brokers.size()];
    }
    // Rotate across bootstrap brokers; with server-side routing each broker
    // prefers partitions it leads, so empty-key traffic avoids redirects.
    return creds_.brokers[rr_++ % creds_.brokers.size()];
}

Producer::Pipe* Producer::pipe_for(const Endpoint& ep) {
    std::lock_guard lk(pipes_mu_);
    auto it = pipes_.find(ep);
    if (it != pipes_.end() && !it->second->dead.load()) return it->second.get();
    if (it != pipes_.end()) {
        // Tear down the dead pipe before reconnecting.
        auto& pipe = it->second;
        if (pipe->conn) pipe->conn->shutdown();
        if (pipe->reader.joinable()) pipe->reader.join();
        std::deque<PendingPtr> orphans;
        {
            std::lock_guard plk(pipe->mu);
            orphans.swap(pipe->awaiting);
        }
        for (auto& p : orphans) requeue(p, proto::Status::NO_LEADER);
        pipes_.erase(it);
    }
    auto conn = Connection::dial(ep, creds_.key_id, creds_.secret, cfg_.connect_timeout_ms);
    if (!conn) return nullptr;
    auto pipe = std::make_unique<Pipe>();
    pipe->endpoint = ep;
    pipe->conn = std::move(conn);
    auto* raw = pipe.get();
    pipe->reader = std::thread([this, raw] { reader_loop(raw); });
    pipes_[ep] = std::move(pipe);
    return raw;
}

void Producer::resolve(const PendingPtr& p, DeliveryReport::Outcome outcome, proto::Status st,
                       int32_t partition, int64_t offset) {
    DeliveryReport rep;
    rep.topic = p->topic;
    rep.partition = partition;
    rep.offset = offset;
    rep.enqueue_us = p->enqueue_us;
    rep.done_us = steady_now_us();
    rep.latency_ms = static_cast<double>(rep.done_us - rep.enqueue_us) / 1000.0;
    rep.outcome = outcome;
    rep.status = st;
    rep.attempts = p->attempts;
    try {
        p->promise.set_value(rep);
    } catch (const std::future_error&) {
        return;  // already resolved
    }
    switch (outcome) {
        case DeliveryReport::Outcome::OK: ok_.fetch_add(1); break;
        case DeliveryReport::Outcome::FAILED: failed_.fetch_add(1); break;
        case DeliveryReport::Outcome::EXHAUSTED: exhausted_.fetch_add(1); break;
    }
    {
        std::lock_guard lk(mu_);
        --unresolved_;
        if (unresolved_ == 0) drain_cv_.notify_all();
    }
}

void Producer::requeue(const PendingPtr& p, proto::Status st) {
    if (p->attempts > cfg_.retries) {
        resolve(p, DeliveryReport::Outcome::EXHAUSTED, st, p->partition, -1);
        return;
    }
    p->due_us = steady_now_us() + backoff_us(std::max(p->attempts, 1));
    reinsert(p);
}

void Producer::reinsert(const PendingPtr& p) {
    {
        std::lock_guard lk(mu_);
        auto it = queue_.begin();
        while (it != queue_.end() && (*it)->seq < p->seq) ++it;
        queue_.insert(it, p);
        queued_bytes_ += p->key.size() + p->value.size();
    }
    queue_cv_.notify_one();
}

void Producer::reader_loop(Pipe* pipe) {
    for (;;) {
        uint8_t op = 0;
        Bytes body;
        bool ok = false;
        try {
            ok = pipe->conn->recv(&op, &body, 60'000);
        } catch (const CodecError&) {
            ok = false;
        }
        if (!ok) {
            pipe->dead.store(true);
            // Outstanding sends are requeued by the sender when it notices.
            queue_cv_.notify_one();
            return;
        }
        if (op != (proto::OP_PRODUCE | proto::RESP_BIT)) continue;

        PendingPtr p;
        {
            std::lock_guard lk(pipe->mu);
            if (pipe->awaiting.empty()) continue;
            p = pipe->awaiting.front();
            pipe->awaiting.pop_front();
        }
        proto::ProduceResp resp;
        try {
            ByteReader r(body);
            resp = proto::decode_produce_resp(r);
        } catch (const CodecError&) {
            pipe->dead.store(true);
            requeue(p, proto::Status::MALFORMED);
            queue_cv_.notify_one();
            return;
        }
        switch (resp.status) {
            case proto::Status::OK:
                resolve(p, DeliveryReport::Outcome::OK, resp.status, resp.partition, resp.offset);
                break;
            case proto::Status::NOT_LEADER: {
                ++p->attempts;
                if (resp.partition >= 0) p->partition = resp.partition;
                auto ep = Endpoint::parse(resp.leader_addr);
                if (ep && resp.partition >= 0) {
                    std::lock_guard lk(leaders_mu_);
                    leaders_[{p->topic, resp.partition}] = *ep;
                } else if (resp.partition >= 0) {
                    std::lock_guard lk(leaders_mu_);
                    leaders_.erase({p->topic, resp.partition});
                }
                // Redirects retry immediately (no backoff).
                p->due_us = steady_now_us();
                if (p->attempts > cfg_.retries) {
                    resolve(p, DeliveryReport::Outcome::EXHAUSTED, resp.status, p->partition, -1);
                } else {
                    reinsert(p);
                }
                break;
            }
            case proto::Status::NO_LEADER:
            case proto::Status::REPLICATION_TIMEOUT: {
                ++p->attempts;
                if (resp.partition >= 0) p->partition = resp.partition;
                {
                    std::lock_guard lk(leaders_mu_);
                    if (p->partition >= 0) leaders_.erase({p->topic, p->partition});
                }
                requeue(p, resp.status);
                break;
            }
            default:
                // Permanent: unauthorized, unknown topic/partition, malformed.
                resolve(p, DeliveryReport::Outcome::FAILED, resp.status, resp.partition, -1);
                break;
        }
    }
}

void Producer::sender_loop() {
    std::vector<PendingPtr> batch;
    for (;;) {
        batch.clear();
        int64_t next_due = 0;
        {
            std::unique_lock lk(mu_);
            queue_cv_.wait_for(lk, std::chrono::milliseconds(std::max(cfg_.linger_ms, 1)), [&] {
                return !running_.load() || !queue_.empty();
            });
            if (!running_.load() && queue_.empty()) return;
            int64_t now = steady_now_us();
            // Pull everything due; keep backoff-delayed entries queued.
            for (auto it = queue_.begin(); it != queue_.end() && batch.size() < 256;) {
                if ((*it)->due_us <= now) {
                    batch.push_back(*it);
                    queued_bytes_ -= (*it)->key.size() + (*it)->value.size();
                    it = queue_.erase(it);
                } else {
                    next_due = next_due == 0 ? (*it)->due_us : std::min(next_due, (*it)->due_us);
                    ++it;
                }
            }
            if (!batch.empty() || queue_.empty()) {
                space_cv_.notify_all();
            }
        }
        if (batch.empty()) {
            if (next_due > 0) {
                int64_t now = steady_now_us();
                if (next_due > now) {
                    std::this_thread::sleep_for(
                        std::chrono::microseconds(std::min<int64_t>(next_due - now, 20'000)));
                }
            }
            if (!running_.load()) {
                std::lock_guard lk(mu_);
                if (queue_.empty()) return;
            }
            continue;
        }

        for (auto& p : batch) {
            if (!running_.load()) {
                resolve(p, DeliveryReport::Outcome::EXHAUSTED, proto::Status::NO_LEADER,
                        p->partition, -1);
                continue;
            }
            Endpoint ep = target_for(p);
            Pipe* pipe = pipe_for(ep);
            if (!pipe) {
                ++p->attempts;
                {
                    std::lock_guard lk(leaders_mu_);
                    if (p->partition >= 0) leaders_.erase({p->topic, p->partition});
                }
                requeue(p, proto::Status::NO_LEADER);
                continue;
            }
            // Respect the per-broker in-flight window.
            if (cfg_.acks != 0) {
                for (;;) {
                    {
                        std::lock_guard plk(pipe->mu);
                        if (pipe->awaiting.size() <
                            static_cast<size_t>(std::max(cfg_.max_in_flight, 1))) {
                            break;
                        }
                    }
                    if (pipe->dead.load() || !running_.load()) break;
                    std::this_thread::sleep_for(200us);
                }
                if (pipe->dead.load()) {
                    requeue(p, proto::Status::NO_LEADER);
                    continue;
                }
            }

            proto::ProduceReq req;
            req.topic = p->topic;
            req.partition = p->partition;
            req.acks = cfg_.acks;
            req.key = p->key;
            req.value = p->value;
            ++p->attempts;
            if (cfg_.acks != 0) {
                std::lock_guard plk(pipe->mu);
                pipe->awaiting.push_back(p);
            }
            bool sent = false;
            try {
                sent = pipe->conn->send(proto::OP_PRODUCE, proto::encode(req),
                                        cfg_.request_timeout_ms);
            } catch (const CodecError&) {
                sent = false;
            }
            if (!sent) {
                pipe->dead.store(true);
                if (cfg_.acks != 0) {
                    std::lock_guard plk(pipe->mu);
                    auto it = std::find(pipe->awaiting.begin(), pipe->awaiting.end(), p);
                    if (it != pipe->awaiting.end()) pipe->awaiting.erase(it);
                }
                requeue(p, proto::Status::NO_LEADER);
                continue;
            }
            if (cfg_.acks == 0) {
                // Fire-and-forget: done when the transmit completes.
                resolve(p, DeliveryReport::Outcome::OK, proto::Status::OK, p->partition, -1);
            }
        }
    }
}

}  // namespace octo::client
