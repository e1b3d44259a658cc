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

#include <stdexcept>
#include <string>

namespace octo {

// Error for control-surface operations. `code` is a stable machine-readable
// string (e.g. "DUPLICATE_TOPIC"); `http_status` maps the error onto the
// REST API.
class ApiError : public std::runtime_error {
public:
    ApiError(int http_status, std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail),
          http_status(http_status),
          code(std::move(code)),
          detail(detail) {}

    int http_status;
    std::string code;
    std::string detail;
};

// Internal invariant check; active in all build types.
#define OCTO_CHECK(cond, msg)                                        \
    do {                                                             \
        if (!(cond)) throw std::logic_error(std::string("check failed: ") + (msg)); \
    } while (0)

}  // namespace octo
