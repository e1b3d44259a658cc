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

#include "octo/broker/partition_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "octo/common/hash.hpp"
#include "octo/common/wire.hpp"

namespace octo::broker {

namespace {

constexpr size_t kFrameHeader = 4;            // length field
constexpr size_t kBodyFixed = 8 + 8 + 4;      // offset + timestamp + key_len
constexpr size_t kFrameTrailer = 4;           // crc32
constexpr uint32_t kMaxFrameBody = 9u << 20;  // sanity bound during recovery

std::string segment_name(int64_t base_offset) {
    char buf[32];
    snprintf(buf, sizeof(buf), "%020" PRId64 ".log", base_offset);
    return buf;
}

Bytes encode_frame(const Record& rec) {
    ByteWriter w;
    w.i64(rec.offset);
    w.i64(rec.timestamp_ms);
    w.u32(static_cast<uint32_t>(rec.key.size()));
    w.raw(rec.key);
    w.raw(rec.value);
    Bytes body = w.take();
    ByteWriter frame;
    frame.u32(static_cast<uint32_t>(body.size()));
    frame.raw(body);
    frame.u32(crc32(body));
    return frame.take();
}

}  // namespace

PartitionLog::Segment::~Segment() {
    if (fd >= 0) ::close(fd);
}

PartitionLog::PartitionLog(Options opts) : opts_(std::move(opts)) {
    std::filesystem::create_directories(opts_.dir);
    recover();
}

void PartitionLog::recover() {
    int64_t earliest = 0;
    std::ifstream ef(opts_.dir / "earliest");
    if (ef) ef >> earliest;

    std::vector<int64_t> bases;
    for (const auto& entry : std::filesystem::directory_iterator(opts_.dir)) {
        const auto name = entry.path().filename().string();
        if (name.size() == 24 && name.ends_with(".log")) {
            bases.push_back(std::strtoll(name.c_str(), nullptr, 10));
        }
    }
    std::sort(bases.begin(), bases.end());

    int64_t expected = -1;
    for (int64_t base : bases) {
        auto path = opts_.dir / segment_name(base);
        int fd = ::open(path.c_str(), O_RDONLY);
        if (fd < 0) continue;
        auto seg = std::make_shared<Segment>();
        seg->base_offset = base;
        seg->fd = fd;

        uint64_t pos = 0;
        int64_t next = base;
        for (;;) {
            uint8_t hdr[kFrameHeader];
            if (::pread(fd, hdr, kFrameHeader, static_cast<off_t>(pos)) !=
                static_cast<ssize_t>(kFrameHeader)) {
                break;
            }
            uint32_t len = (hdr[0] << 24) | (hdr[1] << 16) | (hdr[2] << 8) | hdr[3];
            if (len < kBodyFixed || len > kMaxFrameBody) break;
            Bytes body(len + kFrameTrailer);
            if (::pread(fd, body.data(), body.size(), static_cast<off_t>(pos + kFrameHeader)) !=
                static_cast<ssize_t>(body.size())) {
                break;
            }
            uint32_t stored = (body[len] << 24) | (body[len + 1] << 16) | (body[len + 2] << 8) |
                              body[len + 3];
            if (stored != crc32(body.data(), len)) break;
            ByteReader r(body.data(), len);
            int64_t off = r.i64();
            int64_t ts = r.i64();
            if (off != next) break;
            seg->positions.push_back(pos);
            seg->timestamps.push_back(ts);
            last_timestamp_ = std::max(last_timestamp_, ts);
            pos += kFrameHeader + len + kFrameTrailer;
            ++next;
        }
        // Truncate anything unreadable (bad CRC, torn frame, stray bytes).
        if (std::filesystem::file_size(path) > pos) {
            if (::truncate(path.c_str(), static_cast<off_t>(pos)) != 0) {
                throw std::runtime_error("segment truncate failed: " + path.string());
            }
        }
        seg->size_bytes = pos;

        // Segments must be contiguous; anything after a gap is unusable.
        if (expected >= 0 && base != expected) break;
        expected = seg->end_offset();
        segments_.push_back(std::move(seg));
    }

    if (segments_.empty()) {
        earliest = std::max<int64_t>(earliest, 0);
        earliest_a_.store(earliest);
        next_offset_a_.store(earliest);
        std::scoped_lock lk(write_mu_, idx_mu_);
        open_new_segment_locked(earliest);
        return;
    }
    earliest = std::max(earliest, segments_.front()->base_offset);
    earliest_a_.store(earliest);
    next_offset_a_.store(segments_.back()->end_offset());

    auto path = opts_.dir / segment_name(segments_.back()->base_offset);
    write_fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND);
    if (write_fd_ < 0) {
        throw std::runtime_error("cannot reopen segment for append: " + path.string());
    }
}

void PartitionLog::open_new_segment_locked(int64_t base_offset) {
    if (write_fd_ >= 0) {
        ::close(write_fd_);
        write_fd_ = -1;
    }
    auto path = opts_.dir / segment_name(base_offset);
    int wfd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0600);
    if (wfd < 0) throw std::runtime_error("cannot create segment: " + path.string());
    int rfd = ::open(path.c_str(), O_RDONLY);
    if (rfd < 0) {
        ::close(wfd);
        throw std::runtime_error("cannot open segment: " + path.string());
    }
    auto seg = std::make_shared<Segment>();
    seg->base_offset = base_offset;
    seg->fd = rfd;
    segments_.push_back(std::move(seg));
    write_fd_ = wfd;
}

void PartitionLog::do_append(const Record& rec) {
    // write_mu_ held. File I/O happens before the brief index update so
    // readers never wait behind the write syscall.
    Bytes frame = encode_frame(rec);
    if (::write(write_fd_, frame.data(), frame.size()) != static_cast<ssize_t>(frame.size())) {
        throw std::runtime_error("partition log write failed");
    }
    bool roll;
    {
        std::lock_guard lk(idx_mu_);
        auto& seg = *segments_.back();
        seg.positions.push_back(seg.size_bytes);
        seg.timestamps.push_back(rec.timestamp_ms);
        seg.size_bytes += frame.size();
        roll = seg.size_bytes >= opts_.segment_bytes;
        next_offset_a_.store(rec.offset + 1, std::memory_order_release);
    }
    last_timestamp_ = std::max(last_timestamp_, rec.timestamp_ms);
    if (roll) {
        std::lock_guard lk(idx_mu_);
        open_new_segment_locked(next_offset_a_.load());
    }
}

Record PartitionLog::append(Bytes key, Bytes value, int64_t timestamp_ms) {
    std::lock_guard wl(write_mu_);
    Record rec;
    rec.offset = next_offset_a_.load(std::memory_order_relaxed);
    rec.timestamp_ms = std::max(timestamp_ms, last_timestamp_);
    rec.key = std::move(key);
    rec.value = std::move(value);
    do_append(rec);
    return rec;
}

void PartitionLog::append_replicated(const Record& rec) {
    std::lock_guard wl(write_mu_);
    if (rec.offset != next_offset_a_.load(std::memory_order_relaxed)) {
        throw std::runtime_error("replicated append out of sequence");
    }
    do_append(rec);
}

bool PartitionLog::locate_locked(int64_t offset, SegmentPtr* seg, uint64_t* pos) const {
    auto it = std::upper_bound(
        segments_.begin(), segments_.end(), offset,
        [](int64_t off, const SegmentPtr& s) { return off < s->base_offset; });
    if (it == segments_.begin()) return false;
    --it;
    if (offset >= (*it)->end_offset()) return false;
    *seg = *it;
    *pos = (*it)->positions[static_cast<size_t>(offset - (*it)->base_offset)];
    return true;
}

std::optional<Record> PartitionLog::read_frame_at(const Segment& seg, uint64_t pos) {
    uint8_t hdr[kFrameHeader];
    if (::pread(seg.fd, hdr, kFrameHeader, static_cast<off_t>(pos)) !=
        static_cast<ssize_t>(kFrameHeader)) {
        return std::nullopt;
    }
    uint32_t len = (hdr[0] << 24) | (hdr[1] << 16) | (hdr[2] << 8) | hdr[3];
    if (len < kBodyFixed || len > kMaxFrameBody) return std::nullopt;
    Bytes body(len);
    if (::pread(seg.fd, body.data(), len, static_cast<off_t>(pos + kFrameHeader)) !=
        static_cast<ssize_t>(len)) {
        return std::nullopt;
    }
    ByteReader r(body);
    Record rec;
    rec.offset = r.i64();
    rec.timestamp_ms = r.i64();
    uint32_t key_len = r.u32();
    if (key_len > r.remaining()) return std::nullopt;
    Bytes rest = r.rest();
    rec.key.assign(rest.begin(), rest.begin() + key_len);
    rec.value.assign(rest.begin() + key_len, rest.end());
    return rec;
}

std::vector<Record> PartitionLog::read(int64_t from, size_t max_records, size_t max_bytes,
                                       int64_t upper_bound, bool* out_of_range) const {
    if (out_of_range) *out_of_range = false;
    std::vector<Record> out;
    if (from < earliest_offset()) {
        if (out_of_range) *out_of_range = true;
        return out;
    }
    int64_t limit = std::min<int64_t>(upper_bound, next_offset());
    size_t bytes = 0;
    for (int64_t off = from; off < limit && out.size() < max_records; ++off) {
        SegmentPtr seg;
        uint64_t pos = 0;
        {
            std::lock_guard lk(idx_mu_);
            if (!locate_locked(off, &seg, &pos)) break;
        }
        auto rec = read_frame_at(*seg, pos);
        if (!rec || rec->offset != off) break;
        if (!out.empty() && bytes + rec->payload_size() > max_bytes) break;
        bytes += rec->payload_size();
        out.push_back(std::move(*rec));
    }
    return out;
}

std::optional<Record> PartitionLog::read_one(int64_t offset) const {
    if (offset < earliest_offset() || offset >= next_offset()) return std::nullopt;
    SegmentPtr seg;
    uint64_t pos = 0;
    {
        std::lock_guard lk(idx_mu_);
        if (!locate_locked(offset, &seg, &pos)) return std::nullopt;
    }
    return read_frame_at(*seg, pos);
}

int64_t PartitionLog::lookup_timestamp(int64_t target_ms) const {
    int64_t lo = earliest_offset();
    int64_t hi = next_offset();
    // Timestamps are non-decreasing; binary search over the retained range.
    while (lo < hi) {
        int64_t mid = lo + (hi - lo) / 2;
        int64_t ts;
        {
            std::lock_guard lk(idx_mu_);
            SegmentPtr seg;
            uint64_t pos = 0;
            if (!locate_locked(mid, &seg, &pos)) return hi;
            ts = seg->timestamps[static_cast<size_t>(mid - seg->base_offset)];
        }
        if (ts >= target_ms) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return lo;
}

void PartitionLog::truncate_from(int64_t offset) {
    std::scoped_lock lk(write_mu_, idx_mu_);
    int64_t next = next_offset_a_.load();
    if (offset >= next) return;
    if (offset < earliest_a_.load()) offset = earliest_a_.load();

    while (segments_.size() > 1 && segments_.back()->base_offset >= offset) {
        auto seg = segments_.back();
        segments_.pop_back();
        std::filesystem::remove(opts_.dir / segment_name(seg->base_offset));
        if (write_fd_ >= 0) {
            ::close(write_fd_);
            write_fd_ = -1;
        }
    }
    auto& seg = *segments_.back();
    if (write_fd_ < 0) {
        auto path = opts_.dir / segment_name(seg.base_offset);
        write_fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND);
        if (write_fd_ < 0) throw std::runtime_error("cannot reopen segment: " + path.string());
    }
    if (offset < seg.end_offset()) {
        size_t keep = static_cast<size_t>(std::max<int64_t>(offset - seg.base_offset, 0));
        uint64_t new_size = keep < seg.positions.size() ? seg.positions[keep] : seg.size_bytes;
        auto path = opts_.dir / segment_name(seg.base_offset);
        // O_APPEND fds track the file end, so truncation is safe here.
        if (::truncate(path.c_str(), static_cast<off_t>(new_size)) != 0) {
            throw std::runtime_error("log truncate failed: " + path.string());
        }
        seg.positions.resize(keep);
        seg.timestamps.resize(keep);
        seg.size_bytes = new_size;
    }
    next_offset_a_.store(segments_.back()->end_offset());
}

void PartitionLog::advance_earliest(int64_t offset) {
    std::vector<SegmentPtr> dropped;
    {
        std::lock_guard lk(idx_mu_);
        offset = std::min(offset, next_offset_a_.load());
        if (offset <= earliest_a_.load()) return;
        earliest_a_.store(offset);
        persist_earliest(offset);
        // Drop whole segments that fall entirely below the new earliest.
        while (segments_.size() > 1 && segments_.front()->end_offset() <= offset) {
            dropped.push_back(segments_.front());
            segments_.erase(segments_.begin());
        }
    }
    for (const auto& seg : dropped) {
        std::filesystem::remove(opts_.dir / segment_name(seg->base_offset));
    }
}

uint64_t PartitionLog::purge_older_than(int64_t cutoff_ms) {
    int64_t base = earliest_offset();
    int64_t target = base;
    int64_t latest = next_offset();
    while (target < latest) {
        int64_t ts;
        {
            std::lock_guard lk(idx_mu_);
            SegmentPtr seg;
            uint64_t pos = 0;
            if (!locate_locked(target, &seg, &pos)) break;
            ts = seg->timestamps[static_cast<size_t>(target - seg->base_offset)];
        }
        if (ts >= cutoff_ms) break;
        ++target;
    }
    if (target == base) return 0;
    advance_earliest(target);
    return static_cast<uint64_t>(target - base);
}

void PartitionLog::reset(int64_t base_offset) {
    std::scoped_lock lk(write_mu_, idx_mu_);
    std::vector<int64_t> bases;
    for (const auto& seg : segments_) bases.push_back(seg->base_offset);
    segments_.clear();
    for (int64_t b : bases) std::filesystem::remove(opts_.dir / segment_name(b));
    if (write_fd_ >= 0) {
        ::close(write_fd_);
        write_fd_ = -1;
    }
    earliest_a_.store(base_offset);
    next_offset_a_.store(base_offset);
    persist_earliest(base_offset);
    open_new_segment_locked(base_offset);
}

void PartitionLog::persist_earliest(int64_t value) {
    std::ofstream ef(opts_.dir / "earliest", std::ios::trunc);
    ef << value << "\n";
}

}  // namespace octo::broker
