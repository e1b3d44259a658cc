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
#include <string>
#include <string_view>
#include <vector>

namespace octo {

using Bytes = std::vector<uint8_t>;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(const Bytes& b) {
    return std::string(b.begin(), b.end());
}

std::string hex_encode(const uint8_t* data, size_t n);
inline std::string hex_encode(const Bytes& b) { return hex_encode(b.data(), b.size()); }
// Returns false on odd length or non-hex characters.
bool hex_decode(std::string_view hex, Bytes& out);

std::string b64_encode(const uint8_t* data, size_t n);
inline std::string b64_encode(const Bytes& b) { return b64_encode(b.data(), b.size()); }
bool b64_decode(std::string_view text, Bytes& out);

}  // namespace octo
