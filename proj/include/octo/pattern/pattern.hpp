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

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "octo/common/bytes.hpp"

namespace octo::pattern {

using Json = nlohmann::json;

enum class MatchVerdict { MATCH, NO_MATCH, NON_STRUCTURED };

class PatternError : public std::runtime_error {
public:
    enum class Kind { SYNTAX_ERROR, INVALID_LEAF, UNSUPPORTED_OPERATOR };

    PatternError(Kind kind, std::string path, size_t position, const std::string& message)
        : std::runtime_error(message), kind(kind), path(std::move(path)), position(position) {}

    Kind kind;
    std::string path;  // dotted field path for leaf errors, empty otherwise
    size_t position;   // byte offset for syntax errors, 0 otherwise
};

// A filter over decoded event bodies. Interior nodes are field mappings;
// every leaf is a non-empty list of scalar literals. A body matches when,
// for each leaf path, the body holds an equal scalar at that path (any one
// of the listed literals; any element, if the body value is a list). The
// empty pattern matches everything.
class Pattern {
public:
    Pattern() : doc_(Json::object()) {}

    // Parses and validates a pattern document. Throws PatternError.
    static Pattern parse(const std::string& text);
    static Pattern parse_value(const Json& doc);

    bool matches(const Json& body) const;
    bool empty() const { return doc_.empty(); }
    const Json& doc() const { return doc_; }

    // Scalar equality used for leaf comparison: same JSON type, except that
    // integer and floating-point numbers compare numerically. NaN matches
    // nothing.
    static bool scalar_equal(const Json& a, const Json& b);

private:
    explicit Pattern(Json doc) : doc_(std::move(doc)) {}
    Json doc_;
};

// One or more patterns, OR-ed. This is the shape trigger registrations
// carry: either a bare pattern object, or a list of {"Pattern": "<escaped
// JSON document>"} entries.
class PatternSet {
public:
    PatternSet() = default;

    static PatternSet parse(const std::string& text);
    static PatternSet parse_value(const Json& doc);

    bool matches(const Json& body) const;
    bool empty() const { return patterns_.empty(); }
    const std::vector<Pattern>& patterns() const { return patterns_; }

    // Serialized list form for storage and API responses.
    Json to_listing() const;

private:
    std::vector<Pattern> patterns_;
};

// Decodes a record value and evaluates the pattern against the match
// envelope {"value": <decoded document>}. Undecodable values yield
// NON_STRUCTURED, never an error.
MatchVerdict match_value_bytes(const Pattern& pattern, const Bytes& value);
MatchVerdict match_value_bytes(const PatternSet& patterns, const Bytes& value);

// Parses record value bytes into the body document, or nullopt when the
// bytes are not a structured document.
std::optional<Json> decode_body(const Bytes& value);

// Wraps a decoded record value in the envelope patterns are written
// against (Listing-style patterns address the record value under "value").
Json match_envelope(Json decoded_value);

}  // namespace octo::pattern
