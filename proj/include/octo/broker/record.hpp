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

#include "octo/common/bytes.hpp"

namespace octo::broker {

// One immutable event at a partition position. Offsets are dense and
// strictly increasing; timestamps are broker-assigned and non-decreasing
// in offset order.
struct Record {
    int64_t offset = -1;
    int64_t timestamp_ms = 0;
    Bytes key;
    Bytes value;

    size_t payload_size() const { return key.size() + value.size(); }

    bool same_content(const Record& other) const {
        return offset == other.offset && timestamp_ms == other.timestamp_ms &&
               key == other.key && value == other.value;
    }
};

}  // namespace octo::broker
