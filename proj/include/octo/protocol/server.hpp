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
#include <list>
#include <memory>
#include <mutex>
#include <thread>

#include "octo/common/net.hpp"

namespace octo::broker {

class Cluster;

// Per-broker TCP listener speaking the framed data-plane protocol. One
// handler thread per connection; requests on a connection are answered in
// order. Pausing (broker halt) closes the listener and every live
// connection.
class ProtocolServer {
public:
    ProtocolServer(Cluster& cluster, int broker_id, std::string host, uint16_t port);
    ~ProtocolServer();

    bool start();
    void pause();
    bool resume();
    void stop();

    uint16_t port() const { return port_; }

private:
    struct ConnCtx {
        std::unique_ptr<net::TcpConn> conn;
        std::thread thread;
        std::atomic<bool> done{false};
    };

    void accept_loop();
    void handle_connection(ConnCtx* ctx);
    void reap_finished();
    void close_all_connections();

    Cluster& cluster_;
    int broker_id_;
    std::string host_;
    uint16_t port_;
    net::TcpListener listener_;
    std::thread accept_thread_;
    std::atomic<bool> running_{false};

    std::mutex conns_mu_;
    std::list<std::unique_ptr<ConnCtx>> conns_;
};

}  // namespace octo::broker
