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

#include <cstdint>
#include <string_view>

namespace octo::proto {

// LIST_OFFSETS targets.
constexpr int64_t kTargetEarliest = -2;
constexpr int64_t kTargetLatest = -1;

// Wire status byte. Values are part of the protocol and must not change.
enum class Status : uint8_t {
    OK = 0,
    UNAUTHORIZED = 1,
    UNKNOWN_TOPIC = 2,
    UNKNOWN_PARTITION = 3,
    OFFSET_OUT_OF_RANGE = 4,
    NOT_LEADER = 5,
    MALFORMED = 6,
    REPLICATION_TIMEOUT = 7,
    NO_LEADER = 8,
};

inline std::string_view status_name(Status s) {
    switch (s) {
        case Status::OK: return "OK";
        case Status::UNAUTHORIZED: return "UNAUTHORIZED";
        case Status::UNKNOWN_TOPIC: return "UNKNOWN_TOPIC";
        case Status::UNKNOWN_PARTITION: return "UNKNOWN_PARTITION";
        case Status::OFFSET_OUT_OF_RANGE: return "OFFSET_OUT_OF_RANGE";
        case Status::NOT_LEADER: return "NOT_LEADER";
        case Status::MALFORMED: return "MALFORMED";
        case Status::REPLICATION_TIMEOUT: return "REPLICATION_TIMEOUT";
        case Status::NO_LEADER: return "NO_LEADER";
    }
    return "UNKNOWN";
}

}  // namespace octo::proto
