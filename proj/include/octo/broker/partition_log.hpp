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
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "octo/broker/record.hpp"

namespace octo::broker {

// Segmented append-only log for one partition replica.
//
// Disk layout per frame:
//   [length u32 BE][offset i64 BE][timestamp_ms i64 BE]
//   [key_len u32 BE][key][value][crc32 u32 BE]
// where length covers offset..value and the CRC is computed over those
// bytes. Recovery truncates the segment at the first bad or short frame.
// Segments roll at segment_bytes; files are named by base offset.
//
// Locking: writers serialize on write_mu_ and perform file I/O outside
// idx_mu_; idx_mu_ holds only in-memory index updates and lookups, so
// readers and offset probes never wait behind a write syscall. Offset
// bounds are additionally mirrored in atomics for lock-free polling.
class PartitionLog {
public:
    struct Options {
        std::filesystem::path dir;
        uint64_t segment_bytes = 64ull << 20;
    };

    explicit PartitionLog(Options opts);
    ~PartitionLog() = default;
    PartitionLog(const PartitionLog&) = delete;
    PartitionLog& operator=(const PartitionLog&) = delete;

    // Appends a broker-assigned record; returns its offset. Timestamps are
    // clamped to be non-decreasing.
    Record append(Bytes key, Bytes value, int64_t timestamp_ms);
    // Replica path: appends a record with a caller-assigned offset, which
    // must equal next_offset().
    void append_replicated(const Record& rec);

    // Reads up to max_records starting at from (total payload bytes below
    // max_bytes, but always at least one record), bounded by the exclusive
    // upper offset. Offsets below earliest yield an empty result with
    // *out_of_range set.
    std::vector<Record> read(int64_t from, size_t max_records, size_t max_bytes,
                             int64_t upper_bound, bool* out_of_range = nullptr) const;
    std::optional<Record> read_one(int64_t offset) const;

    int64_t next_offset() const { return next_offset_a_.load(std::memory_order_acquire); }
    int64_t earliest_offset() const { return earliest_a_.load(std::memory_order_acquire); }
    bool empty() const { return next_offset() == earliest_offset(); }

    // Lowest offset whose timestamp is >= target, or next_offset() if none.
    int64_t lookup_timestamp(int64_t target_ms) const;

    // Drops all records at or above `offset` (divergent tail repair).
    void truncate_from(int64_t offset);

    // Logically removes leading records below `offset`; physical segment
    // files are deleted once fully covered. No-op if offset <= earliest.
    void advance_earliest(int64_t offset);

    // Advances earliest past leading records older than cutoff; returns the
    // number of records purged.
    uint64_t purge_older_than(int64_t cutoff_ms);

    // Discards everything and restarts the log at base_offset. Used when a
    // replica is too far behind the leader's retained range to catch up.
    void reset(int64_t base_offset);

private:
    struct Segment {
        int64_t base_offset = 0;
        std::vector<uint64_t> positions;   // file offset of each frame
        std::vector<int64_t> timestamps;   // timestamp per record
        uint64_t size_bytes = 0;
        int fd = -1;  // read fd, closed when the segment is destroyed

        ~Segment();
        int64_t end_offset() const {
            return base_offset + static_cast<int64_t>(positions.size());
        }
    };
    using SegmentPtr = std::shared_ptr<Segment>;

    void recover();
    // Both locks held.
    void open_new_segment_locked(int64_t base_offset);
    // idx_mu_ held; resolves an offset to its segment and frame position.
    bool locate_locked(int64_t offset, SegmentPtr* seg, uint64_t* pos) const;
    static std::optional<Record> read_frame_at(const Segment& seg, uint64_t pos);
    void persist_earliest(int64_t value);
    void do_append(const Record& rec);

    Options opts_;

    std::mutex write_mu_;  // serializes appenders; held across file writes
    int write_fd_ = -1;    // guarded by write_mu_
    int64_t last_timestamp_ = 0;  // guarded by write_mu_

    mutable std::mutex idx_mu_;  // guards segments_ and index vectors
    std::vector<SegmentPtr> segments_;

    std::atomic<int64_t> next_offset_a_{0};
    std::atomic<int64_t> earliest_a_{0};
};

}  // namespace octo::broker
