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

#include <doctest.h>

#include <random>
#include <vector>

#include "octo/pattern/pattern.hpp"

using namespace octo;
using namespace octo::pattern;
using Json = nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Reference oracle. Written independently of the engine, straight from the
// filter definition: collect every constrained path, navigate the body to
// it, and require one equal literal per path. Kept deliberately naive.
// ---------------------------------------------------------------------------

struct LeafConstraint {
    std::vector<std::string> path;
    Json literals;  // array
};

void oracle_collect(const Json& node, std::vector<std::string> prefix,
                    std::vector<LeafConstraint>& out) {
    for (auto it = node.begin(); it != node.end(); ++it) {
        auto path = prefix;
        path.push_back(it.key());
        if (it->is_array()) {
            out.push_back({path, *it});
        } else {
            oracle_collect(*it, path, out);
        }
    }
}

bool oracle_scalar_eq(const Json& a, const Json& b) {
    if (a.is_number() && b.is_number()) {
        long double x = a.is_number_unsigned() ? static_cast<long double>(a.get<uint64_t>())
                                               : (a.is_number_integer()
                                                      ? static_cast<long double>(a.get<int64_t>())
                                                      : static_cast<long double>(a.get<double>()));
        long double y = b.is_number_unsigned() ? static_cast<long double>(b.get<uint64_t>())
                                               : (b.is_number_integer()
                                                      ? static_cast<long double>(b.get<int64_t>())
                                                      : static_cast<long double>(b.get<double>()));
        if (std::isnan(static_cast<double>(x)) || std::isnan(static_cast<double>(y))) return false;
        return x == y;
    }
    if (a.is_string() && b.is_string()) return a.get<std::string>() == b.get<std::string>();
    if (a.is_boolean() && b.is_boolean()) return a.get<bool>() == b.get<bool>();
    if (a.is_null() && b.is_null()) return true;
    return false;
}

bool oracle_match(const Json& pattern, const Json& body) {
    std::vector<LeafConstraint> leaves;
    oracle_collect(pattern, {}, leaves);
    for (const auto& leaf : leaves) {
        const Json* node = &body;
        bool found = true;
        for (const auto& field : leaf.path) {
            if (!node->is_object() || !node->contains(field)) {
                found = false;
                break;
            }
            node = &node->at(field);
        }
        if (!found) return false;
        bool leaf_ok = false;
        for (const auto& lit : leaf.literals) {
            if (node->is_array()) {
                for (const auto& elem : *node) {
                    if (oracle_scalar_eq(lit, elem)) {
                        leaf_ok = true;
                        break;
                    }
                }
            } else if (oracle_scalar_eq(lit, *node)) {
                leaf_ok = true;
            }
            if (leaf_ok) break;
        }
        if (!leaf_ok) return false;
    }
    return true;
}

// Small-space enumeration: values for pattern literals and body scalars.
const std::vector<Json> kScalars = {Json(1), Json("x"), Json(true)};
const std::vector<std::string> kKeys = {"a", "b"};

std::vector<Json> enumerate_bodies() {
    std::vector<Json> leaf_choices;  // possible values for one field
    for (const auto& s : kScalars) leaf_choices.push_back(s);
    // one nested level
    for (const auto& s : kScalars) {
        leaf_choices.push_back(Json{{"a", s}});
        leaf_choices.push_back(Json{{"b", s}, {"a", kScalars[0]}});
    }
    std::vector<Json> bodies;
    bodies.push_back(Json::object());
    for (const auto& va : leaf_choices) {
        Json b1;
        b1["a"] = va;
        bodies.push_back(b1);
        for (const auto& vb : leaf_choices) {
            Json b2;
            b2["a"] = va;
            b2["b"] = vb;
            bodies.push_back(b2);
        }
    }
    return bodies;
}

std::vector<Json> enumerate_patterns() {
    std::vector<Json> lists;
    for (size_t i = 0; i < kScalars.size(); ++i) {
        lists.push_back(Json::array({kScalars[i]}));
        for (size_t j = i + 1; j < kScalars.size(); ++j) {
            lists.push_back(Json::array({kScalars[i], kScalars[j]}));
        }
    }
    std::vector<Json> leaf_or_nested = lists;
    for (const auto& l : lists) leaf_or_nested.push_back(Json{{"a", l}});

    std::vector<Json> patterns;
    patterns.push_back(Json::object());
    for (const auto& va : leaf_or_nested) {
        patterns.push_back(Json{{"a", va}});
        for (const auto& vb : leaf_or_nested) {
            patterns.push_back(Json{{"a", va}, {"b", vb}});
        }
    }
    return patterns;
}

const char* kListing1 = R"([
 {
   "Pattern": "{\"value\": {\"event_type\": [\"created\"]}}"
 }
])";

}  // namespace

TEST_CASE("pattern matches agree with the brute-force oracle over the small space") {
    auto bodies = enumerate_bodies();
    auto patterns = enumerate_patterns();
    size_t pairs = 0, mismatches = 0;
    for (const auto& pd : patterns) {
        Pattern p = Pattern::parse_value(pd);
        for (const auto& body : bodies) {
            ++pairs;
            if (p.matches(body) != oracle_match(pd, body)) ++mismatches;
        }
    }
    CHECK(pairs > 10'000);
    CHECK(mismatches == 0);
}

TEST_CASE("pattern oracle agreement on randomized deeper documents") {
    std::mt19937_64 rng(20260810);
    auto rand_scalar = [&]() -> Json {
        switch (rng() % 5) {
            case 0: return Json(static_cast<int64_t>(rng() % 5));
            case 1: return Json(double(rng() % 8) / 2.0);
            case 2: return Json(std::string(1, static_cast<char>('p' + rng() % 4)));
            case 3: return Json(bool(rng() % 2));
            default: return Json(nullptr);
        }
    };
    std::function<Json(int)> rand_body = [&](int depth) -> Json {
        Json obj = Json::object();
        int fields = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < fields; ++i) {
            std::string key(1, static_cast<char>('a' + rng() % 4));
            if (depth > 0 && rng() % 3 == 0) {
                obj[key] = rand_body(depth - 1);
            } else if (rng() % 5 == 0) {
                Json arr = Json::array();
                int n = 1 + static_cast<int>(rng() % 3);
                for (int k = 0; k < n; ++k) arr.push_back(rand_scalar());
                obj[key] = arr;
            } else {
                obj[key] = rand_scalar();
            }
        }
        return obj;
    };
    std::function<Json(int)> rand_pattern = [&](int depth) -> Json {
        Json obj = Json::object();
        int fields = 1 + static_cast<int>(rng() % 2);
        for (int i = 0; i < fields; ++i) {
            std::string key(1, static_cast<char>('a' + rng() % 4));
            if (depth > 0 && rng() % 3 == 0) {
                obj[key] = rand_pattern(depth - 1);
            } else {
                Json arr = Json::array();
                int n = 1 + static_cast<int>(rng() % 2);
                for (int k = 0; k < n; ++k) arr.push_back(rand_scalar());
                obj[key] = arr;
            }
        }
        return obj;
    };

    for (int i = 0; i < 5000; ++i) {
        Json pd = rand_pattern(2);
        Json body = rand_body(3);
        Pattern p = Pattern::parse_value(pd);
        CAPTURE(pd.dump());
        CAPTURE(body.dump());
        CHECK(p.matches(body) == oracle_match(pd, body));
    }
}

TEST_CASE("listing-style pattern set matches created events only") {
    PatternSet set = PatternSet::parse(kListing1);
    REQUIRE(set.patterns().size() == 1);

    Json created = Json::parse(R"({"value":{"event_type":"created","path":"/d/f1"}})");
    Json deleted = Json::parse(R"({"value":{"event_type":"deleted","path":"/d/f1"}})");
    CHECK(set.matches(created));
    CHECK_FALSE(set.matches(deleted));

    // Record-value form: the envelope adds the "value" wrapper.
    Bytes created_value = to_bytes(R"({"event_type":"created","path":"/d/f1"})");
    Bytes deleted_value = to_bytes(R"({"event_type":"deleted"})");
    CHECK(match_value_bytes(set, created_value) == MatchVerdict::MATCH);
    CHECK(match_value_bytes(set, deleted_value) == MatchVerdict::NO_MATCH);
}

TEST_CASE("empty pattern matches everything") {
    Pattern p = Pattern::parse("{}");
    CHECK(p.empty());
    CHECK(p.matches(Json::object()));
    CHECK(p.matches(Json::parse(R"({"anything":1})")));
    CHECK(p.matches(Json(42)));
}

TEST_CASE("pattern parse rejections") {
    SUBCASE("bare scalar leaf") {
        try {
            Pattern::parse(R"({"a": "created"})");
            FAIL("expected INVALID_LEAF");
        } catch (const PatternError& e) {
            CHECK(e.kind == PatternError::Kind::INVALID_LEAF);
            CHECK(e.path == "a");
        }
    }
    SUBCASE("empty list") {
        try {
            Pattern::parse(R"({"a": []})");
            FAIL("expected INVALID_LEAF");
        } catch (const PatternError& e) {
            CHECK(e.kind == PatternError::Kind::INVALID_LEAF);
        }
    }
    SUBCASE("nested list") {
        try {
            Pattern::parse(R"({"a": [[1]]})");
            FAIL("expected INVALID_LEAF");
        } catch (const PatternError& e) {
            CHECK(e.kind == PatternError::Kind::INVALID_LEAF);
        }
    }
    SUBCASE("operator object is reserved") {
        try {
            Pattern::parse(R"({"a": [{"prefix": "x"}]})");
            FAIL("expected UNSUPPORTED_OPERATOR");
        } catch (const PatternError& e) {
            CHECK(e.kind == PatternError::Kind::UNSUPPORTED_OPERATOR);
            CHECK(e.path == "a");
        }
    }
    SUBCASE("syntax error carries a position") {
        try {
            Pattern::parse(R"({"a": )");
            FAIL("expected SYNTAX_ERROR");
        } catch (const PatternError& e) {
            CHECK(e.kind == PatternError::Kind::SYNTAX_ERROR);
            CHECK(e.position > 0);
        }
    }
}

TEST_CASE("numeric equality is cross-type, NaN never matches") {
    Pattern p = Pattern::parse(R"({"a": [2]})");
    CHECK(p.matches(Json::parse(R"({"a": 2.0})")));
    CHECK(p.matches(Json::parse(R"({"a": 2})")));
    CHECK_FALSE(p.matches(Json::parse(R"({"a": 3})")));
    CHECK_FALSE(p.matches(Json::parse(R"({"a": "2"})")));

    Json nan_body;
    nan_body["a"] = std::nan("");
    Pattern pf = Pattern::parse(R"({"a": [1.5]})");
    CHECK_FALSE(pf.matches(nan_body));
}

TEST_CASE("body lists match any element") {
    Pattern p = Pattern::parse(R"({"tags": ["hot"]})");
    CHECK(p.matches(Json::parse(R"({"tags": ["cold", "hot"]})")));
    CHECK_FALSE(p.matches(Json::parse(R"({"tags": ["cold"]})")));
}

TEST_CASE("spec example: {a:[1,2]} vs {a:3} is false") {
    Pattern p = Pattern::parse(R"({"a": [1, 2]})");
    CHECK_FALSE(p.matches(Json::parse(R"({"a": 3})")));
    CHECK(p.matches(Json::parse(R"({"a": 2})")));
}

TEST_CASE("non-structured record values never crash") {
    Pattern p = Pattern::parse(R"({"value": {"x": [1]}})");
    Bytes blob(32);
    for (size_t i = 0; i < blob.size(); ++i) blob[i] = static_cast<uint8_t>(0xf0 + i);
    CHECK(match_value_bytes(p, blob) == MatchVerdict::NON_STRUCTURED);
    CHECK(match_value_bytes(Pattern{}, to_bytes("{\"k\":1}")) == MatchVerdict::MATCH);
}

TEST_CASE("monotonicity: constraints narrow, wider lists widen") {
    std::mt19937_64 rng(7);
    auto bodies = enumerate_bodies();
    Pattern base = Pattern::parse(R"({"a": [1, "x"]})");
    Pattern narrowed = Pattern::parse(R"({"a": [1, "x"], "b": [true]})");
    Pattern widened = Pattern::parse(R"({"a": [1, "x", true]})");
    for (const auto& body : bodies) {
        if (narrowed.matches(body)) CHECK(base.matches(body));
        if (base.matches(body)) CHECK(widened.matches(body));
    }
    (void)rng;
}

TEST_CASE("matches is pure") {
    Pattern p = Pattern::parse(R"({"k": ["v"]})");
    Json body = Json::parse(R"({"k": "v"})");
    for (int i = 0; i < 100; ++i) CHECK(p.matches(body));
}
