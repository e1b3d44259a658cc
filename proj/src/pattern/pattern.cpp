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

#include "octo/pattern/pattern.hpp"

#include <cmath>

namespace octo::pattern {

namespace {

std::string join_path(const std::string& base, const std::string& field) {
    return base.empty() ? field : base + "." + field;
}

bool is_scalar(const Json& v) {
    return v.is_string() || v.is_number() || v.is_boolean() || v.is_null();
}

void validate_node(const Json& node, const std::string& path) {
    if (node.is_array()) {
        if (node.empty()) {
            throw PatternError(PatternError::Kind::INVALID_LEAF, path, 0,
                               "empty literal list at '" + path + "'");
        }
        for (const auto& lit : node) {
            if (lit.is_object()) {
                throw PatternError(PatternError::Kind::UNSUPPORTED_OPERATOR, path, 0,
                                   "operator objects are not supported at '" + path + "'");
            }
            if (lit.is_array()) {
                throw PatternError(PatternError::Kind::INVALID_LEAF, path, 0,
                                   "nested list in literal list at '" + path + "'");
            }
        }
        return;
    }
    if (node.is_object()) {
        if (node.empty()) {
            throw PatternError(PatternError::Kind::INVALID_LEAF, path, 0,
                               "empty mapping constraint at '" + path + "'");
        }
        for (const auto& [field, child] : node.items()) {
            validate_node(child, join_path(path, field));
        }
        return;
    }
    throw PatternError(PatternError::Kind::INVALID_LEAF, path, 0,
                       "leaf must be a list of scalars at '" + path + "'");
}

// Conjunction over pattern paths; disjunction within each literal list.
bool matches_node(const Json& pat, const Json& body) {
    if (pat.is_array()) {
        // body is a scalar or list; any listed literal equal to the body
        // value (or to any of its elements) satisfies this leaf.
        for (const auto& lit : pat) {
            if (body.is_array()) {
                for (const auto& elem : body) {
                    if (Pattern::scalar_equal(lit, elem)) return true;
                }
            } else if (is_scalar(body) && Pattern::scalar_equal(lit, body)) {
                return true;
            }
        }
        return false;
    }
    // Interior node: every constrained field must be present and match;
    // an unconstrained node matches anything (vacuous conjunction).
    if (pat.empty()) return true;
    if (!body.is_object()) return false;
    for (const auto& [field, child] : pat.items()) {
        auto it = body.find(field);
        if (it == body.end()) return false;
        if (!matches_node(child, *it)) return false;
    }
    return true;
}

}  // namespace

Pattern Pattern::parse(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw PatternError(PatternError::Kind::SYNTAX_ERROR, "", e.byte, e.what());
    }
    return parse_value(doc);
}

Pattern Pattern::parse_value(const Json& doc) {
    if (!doc.is_object()) {
        throw PatternError(PatternError::Kind::INVALID_LEAF, "", 0,
                           "pattern root must be a mapping");
    }
    for (const auto& [field, child] : doc.items()) {
        validate_node(child, field);
    }
    return Pattern(doc);
}

bool Pattern::matches(const Json& body) const {
    return matches_node(doc_, body);
}

bool Pattern::scalar_equal(const Json& a, const Json& b) {
    if (a.is_number() && b.is_number()) {
        if (a.is_number_float() || b.is_number_float()) {
            double x = a.get<double>(), y = b.get<double>();
            if (std::isnan(x) || std::isnan(y)) return false;
            return x == y;
        }
        // Both integral; a negative value can only equal another negative.
        bool a_neg = !a.is_number_unsigned() && a.get<int64_t>() < 0;
        bool b_neg = !b.is_number_unsigned() && b.get<int64_t>() < 0;
        if (a_neg != b_neg) return false;
        if (a_neg) return a.get<int64_t>() == b.get<int64_t>();
        return a.get<uint64_t>() == b.get<uint64_t>();
    }
    if (a.type() != b.type()) return false;
    return a == b;
}

PatternSet PatternSet::parse(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw PatternError(PatternError::Kind::SYNTAX_ERROR, "", e.byte, e.what());
    }
    return parse_value(doc);
}

PatternSet PatternSet::parse_value(const Json& doc) {
    PatternSet set;
    if (doc.is_object()) {
        set.patterns_.push_back(Pattern::parse_value(doc));
        return set;
    }
    if (doc.is_array()) {
        for (const auto& entry : doc) {
            if (!entry.is_object() || !entry.contains("Pattern")) {
                throw PatternError(PatternError::Kind::INVALID_LEAF, "", 0,
                                   "list entries must be {\"Pattern\": \"<document>\"}");
            }
            const Json& p = entry.at("Pattern");
            if (p.is_string()) {
                set.patterns_.push_back(Pattern::parse(p.get<std::string>()));
            } else if (p.is_object()) {
                set.patterns_.push_back(Pattern::parse_value(p));
            } else {
                throw PatternError(PatternError::Kind::INVALID_LEAF, "Pattern", 0,
                                   "Pattern entry must be a document or escaped string");
            }
        }
        return set;
    }
    throw PatternError(PatternError::Kind::INVALID_LEAF, "", 0,
                       "pattern must be a mapping or a list of Pattern entries");
}

bool PatternSet::matches(const Json& body) const {
    for (const auto& p : patterns_) {
        if (p.matches(body)) return true;
    }
    return false;
}

Json PatternSet::to_listing() const {
    Json out = Json::array();
    for (const auto& p : patterns_) {
        out.push_back(Json{{"Pattern", p.doc().dump()}});
    }
    return out;
}

std::optional<Json> decode_body(const Bytes& value) {
    Json doc = Json::parse(value.begin(), value.end(), nullptr, false);
    if (doc.is_discarded()) return std::nullopt;
    return doc;
}

Json match_envelope(Json decoded_value) {
    return Json{{"value", std::move(decoded_value)}};
}

MatchVerdict match_value_bytes(const Pattern& pattern, const Bytes& value) {
    auto body = decode_body(value);
    if (!body) return MatchVerdict::NON_STRUCTURED;
    return pattern.matches(match_envelope(std::move(*body))) ? MatchVerdict::MATCH
                                                             : MatchVerdict::NO_MATCH;
}

MatchVerdict match_value_bytes(const PatternSet& patterns, const Bytes& value) {
    auto body = decode_body(value);
    if (!body) return MatchVerdict::NON_STRUCTURED;
    return patterns.matches(match_envelope(std::move(*body))) ? MatchVerdict::MATCH
                                                              : MatchVerdict::NO_MATCH;
}

}  // namespace octo::pattern
