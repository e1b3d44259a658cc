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

#include "octo/common/hash.hpp"

#include <zlib.h>

namespace octo {

uint32_t crc32(const uint8_t* data, size_t n) {
    return static_cast<uint32_t>(::crc32(0L, data, static_cast<uInt>(n)));
}

}  // namespace octo
