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

#include "octo/common/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace octo::net {

namespace {

bool wait_fd(int fd, short events, int timeout_ms) {
    struct pollfd pfd {};
    pfd.fd = fd;
    pfd.events = events;
    for (;;) {
        int rc = ::poll(&pfd, 1, timeout_ms);
        if (rc > 0) return (pfd.revents & (events | POLLERR | POLLHUP)) != 0;
        if (rc == 0) return false;  // timeout
        if (errno != EINTR) return false;
    }
}

void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

}  // namespace

TcpConn& TcpConn::operator=(TcpConn&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

std::unique_ptr<TcpConn> TcpConn::connect(const std::string& host, uint16_t port,
                                          int timeout_ms) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) return nullptr;
    struct sockaddr_in addr {};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        return nullptr;
    }
    int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, reinterpret_cast<struct sockaddr*>(&addr), sizeof(addr));
    if (rc != 0) {
        if (errno != EINPROGRESS) {
            ::close(fd);
            return nullptr;
        }
        if (!wait_fd(fd, POLLOUT, timeout_ms)) {
            ::close(fd);
            return nullptr;
        }
        int err = 0;
        socklen_t len = sizeof(err);
        if (::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len) != 0 || err != 0) {
            ::close(fd);
            return nullptr;
        }
    }
    ::fcntl(fd, F_SETFL, flags);
    set_nodelay(fd);
    return std::make_unique<TcpConn>(fd);
}

int TcpConn::wait_readable(int timeout_ms) {
    if (fd_ < 0) return -1;
    struct pollfd pfd {};
    pfd.fd = fd_;
    pfd.events = POLLIN;
    int rc = ::poll(&pfd, 1, timeout_ms);
    if (rc == 0) return 0;
    if (rc < 0) return errno == EINTR ? 0 : -1;
    if (pfd.revents & (POLLIN | POLLHUP | POLLERR)) return 1;
    return 0;
}

bool TcpConn::read_exact(uint8_t* dst, size_t n, int timeout_ms) {
    size_t got = 0;
    while (got < n) {
        if (fd_ < 0) return false;
        ssize_t rc = ::recv(fd_, dst + got, n - got, MSG_DONTWAIT);
        if (rc > 0) {
            got += static_cast<size_t>(rc);
            continue;
        }
        if (rc == 0) return false;  // peer closed
        if (errno == EAGAIN || errno == EWOULDBLOCK) {
            if (!wait_fd(fd_, POLLIN, timeout_ms)) return false;
            continue;
        }
        if (errno == EINTR) continue;
        return false;
    }
    return true;
}

bool TcpConn::write_all(const uint8_t* src, size_t n, int timeout_ms) {
    size_t sent = 0;
    while (sent < n) {
        if (fd_ < 0) return false;
        ssize_t rc = ::send(fd_, src + sent, n - sent, MSG_NOSIGNAL | MSG_DONTWAIT);
        if (rc > 0) {
            sent += static_cast<size_t>(rc);
            continue;
        }
        if (rc < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
            if (!wait_fd(fd_, POLLOUT, timeout_ms)) return false;
            continue;
        }
        if (rc < 0 && errno == EINTR) continue;
        return false;
    }
    return true;
}

void TcpConn::shutdown() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void TcpConn::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

bool TcpListener::open(const std::string& host, uint16_t port) {
    close();
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) return false;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    struct sockaddr_in addr {};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        return false;
    }
    if (::bind(fd, reinterpret_cast<struct sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(fd, 128) != 0) {
        ::close(fd);
        return false;
    }
    fd_.store(fd);
    port_ = port;
    return true;
}

std::unique_ptr<TcpConn> TcpListener::accept() {
    int fd = fd_.load();
    if (fd < 0) return nullptr;
    int cfd = ::accept(fd, nullptr, nullptr);
    if (cfd < 0) return nullptr;
    set_nodelay(cfd);
    return std::make_unique<TcpConn>(cfd);
}

void TcpListener::close() {
    int fd = fd_.exchange(-1);
    if (fd >= 0) {
        // Unblock any accept() in progress.
        ::shutdown(fd, SHUT_RDWR);
        ::close(fd);
    }
}

}  // namespace octo::net
