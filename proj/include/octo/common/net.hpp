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
#include <memory>
#include <string>

#include "octo/common/bytes.hpp"

namespace octo::net {

// Blocking TCP connection with millisecond timeouts. Not thread-safe for
// concurrent reads or concurrent writes; one reader plus one writer is fine.
class TcpConn {
public:
    TcpConn() = default;
    explicit TcpConn(int fd) : fd_(fd) {}
    ~TcpConn() { close(); }
    TcpConn(TcpConn&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    TcpConn& operator=(TcpConn&& other) noexcept;
    TcpConn(const TcpConn&) = delete;
    TcpConn& operator=(const TcpConn&) = delete;

    static std::unique_ptr<TcpConn> connect(const std::string& host, uint16_t port,
                                            int timeout_ms);

    bool ok() const { return fd_ >= 0; }
    // 1 = data (or hangup) pending, 0 = timeout, -1 = closed/error.
    int wait_readable(int timeout_ms);
    // Reads exactly n bytes; false on EOF, error, or timeout.
    bool read_exact(uint8_t* dst, size_t n, int timeout_ms);
    bool write_all(const uint8_t* src, size_t n, int timeout_ms);
    bool write_all(const Bytes& b, int timeout_ms) { return write_all(b.data(), b.size(), timeout_ms); }
    void shutdown();
    void close();

private:
    int fd_ = -1;
};

class TcpListener {
public:
    TcpListener() = default;
    ~TcpListener() { close(); }
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    // Binds and listens on host:port. Returns false on failure.
    bool open(const std::string& host, uint16_t port);
    // Accepts the next connection; nullptr on error or after close().
    std::unique_ptr<TcpConn> accept();
    void close();
    bool is_open() const { return fd_.load() >= 0; }
    uint16_t port() const { return port_; }

private:
    std::atomic<int> fd_{-1};
    uint16_t port_ = 0;
};

}  // namespace octo::net
