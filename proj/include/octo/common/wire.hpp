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

#include <cstring>
#include <stdexcept>
#include <string>

#include "octo/common/bytes.hpp"

namespace octo {

// Thrown on any structurally invalid input; the protocol layer maps it to
// a MALFORMED status.
class CodecError : public std::runtime_error {
public:
    explicit CodecError(const std::string& what) : std::runtime_error(what) {}
};

// Big-endian append-only encoder. Strings are u16-length-prefixed UTF-8,
// blobs are u32-length-prefixed.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) {
        buf_.push_back(static_cast<uint8_t>(v >> 8));
        buf_.push_back(static_cast<uint8_t>(v));
    }
    void u32(uint32_t v) {
        for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<uint8_t>(v >> s));
    }
    void u64(uint64_t v) {
        for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<uint8_t>(v >> s));
    }
    void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
    void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
    void str16(std::string_view s) {
        if (s.size() > 0xffff) throw CodecError("string too long");
        u16(static_cast<uint16_t>(s.size()));
        raw(reinterpret_cast<const uint8_t*>(s.data()), s.size());
    }
    void blob32(const Bytes& b) {
        u32(static_cast<uint32_t>(b.size()));
        raw(b.data(), b.size());
    }
    void raw(const uint8_t* data, size_t n) { buf_.insert(buf_.end(), data, data + n); }
    void raw(const Bytes& b) { raw(b.data(), b.size()); }

    const Bytes& bytes() const { return buf_; }
    Bytes take() { return std::move(buf_); }
    size_t size() const { return buf_.size(); }

private:
    Bytes buf_;
};

// Bounds-checked big-endian decoder over a borrowed buffer.
class ByteReader {
public:
    ByteReader(const uint8_t* data, size_t n) : data_(data), size_(n) {}
    explicit ByteReader(const Bytes& b) : ByteReader(b.data(), b.size()) {}
    explicit ByteReader(Bytes&&) = delete;  // would dangle

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_ + i];
        pos_ += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_ + i];
        pos_ += 8;
        return v;
    }
    int32_t i32() { return static_cast<int32_t>(u32()); }
    int64_t i64() { return static_cast<int64_t>(u64()); }
    std::string str16() {
        uint16_t n = u16();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }
    Bytes blob32() {
        uint32_t n = u32();
        if (n > remaining()) throw CodecError("blob exceeds frame");
        Bytes b(data_ + pos_, data_ + pos_ + n);
        pos_ += n;
        return b;
    }
    Bytes rest() {
        Bytes b(data_ + pos_, data_ + size_);
        pos_ = size_;
        return b;
    }
    size_t remaining() const { return size_ - pos_; }
    bool done() const { return pos_ == size_; }
    void expect_done() const {
        if (!done()) throw CodecError("trailing bytes in frame");
    }

private:
    void need(size_t n) const {
        if (size_ - pos_ < n) throw CodecError("frame truncated");
    }
    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

}  // namespace octo
