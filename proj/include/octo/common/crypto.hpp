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

#include <string>

#include "octo/common/bytes.hpp"

namespace octo {

Bytes random_bytes(size_t n);
// URL-safe random identifier, hex of n random bytes.
std::string random_token(size_t n = 16);

Bytes sha256(const Bytes& data);
Bytes hmac_sha256(const Bytes& key, const Bytes& message);

// Constant-time comparison.
bool digest_equal(const Bytes& a, const Bytes& b);

}  // namespace octo
