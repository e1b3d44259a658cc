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

#include "octo/common/bytes.hpp"
#include "octo/common/crypto.hpp"
#include "octo/common/hash.hpp"
#include "octo/common/kvconfig.hpp"
#include "octo/common/wire.hpp"

using namespace octo;

TEST_CASE("fnv1a64 reference values") {
    // Computed with an independent implementation before the build.
    CHECK(fnv1a64(to_bytes("sensor-1")) == 11570620482435813161ULL);
    CHECK(fnv1a64(to_bytes("sensor-1")) % 4 == 1);
    CHECK(fnv1a64(to_bytes("")) == 14695981039346656037ULL);
    CHECK(fnv1a64(to_bytes("a")) == 12638187200555641996ULL);
    CHECK(fnv1a64(to_bytes("fsmon")) == 10241159487255225620ULL);
}

TEST_CASE("fnv1a64 is deterministic") {
    auto key = to_bytes("task-42");
    uint64_t first = fnv1a64(key);
    CHECK(first == 4931307825073182965ULL);
    for (int i = 0; i < 1000; ++i) CHECK(fnv1a64(key) == first);
}

TEST_CASE("crc32 matches the zlib polynomial") {
    CHECK(crc32(to_bytes("abc")) == 0x352441c2u);
    CHECK(crc32(to_bytes("")) == 0u);
}

TEST_CASE("hex round trip") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        Bytes b(rng() % 64);
        for (auto& x : b) x = static_cast<uint8_t>(rng());
        Bytes back;
        REQUIRE(hex_decode(hex_encode(b), back));
        CHECK(back == b);
    }
    Bytes out;
    CHECK_FALSE(hex_decode("abc", out));   // odd length
    CHECK_FALSE(hex_decode("zz", out));    // bad digit
}

TEST_CASE("base64 round trip") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        Bytes b(rng() % 64);
        for (auto& x : b) x = static_cast<uint8_t>(rng());
        Bytes back;
        REQUIRE(b64_decode(b64_encode(b), back));
        CHECK(back == b);
    }
    CHECK(b64_encode(to_bytes("hi")) == "aGk=");
}

TEST_CASE("hmac-sha256 self-consistency") {
    Bytes key = to_bytes("secret");
    Bytes msg = to_bytes("message");
    auto mac1 = hmac_sha256(key, msg);
    auto mac2 = hmac_sha256(key, msg);
    CHECK(mac1.size() == 32);
    CHECK(digest_equal(mac1, mac2));
    CHECK_FALSE(digest_equal(mac1, hmac_sha256(key, to_bytes("other"))));
}

TEST_CASE("byte writer and reader round trip") {
    ByteWriter w;
    w.u8(7);
    w.u16(0xbeef);
    w.u32(0xdeadbeef);
    w.i64(-42);
    w.str16("hello");
    w.blob32(to_bytes("payload"));
    Bytes buf = w.take();

    ByteReader r(buf);
    CHECK(r.u8() == 7);
    CHECK(r.u16() == 0xbeef);
    CHECK(r.u32() == 0xdeadbeefu);
    CHECK(r.i64() == -42);
    CHECK(r.str16() == "hello");
    CHECK(to_string(r.blob32()) == "payload");
    CHECK(r.done());
}

TEST_CASE("byte reader rejects truncation") {
    ByteWriter w;
    w.str16("topic");
    Bytes buf = w.take();
    buf.pop_back();
    ByteReader r(buf);
    CHECK_THROWS_AS(r.str16(), CodecError);
}

TEST_CASE("kv config parsing") {
    auto cfg = KvConfig::parse_string(R"(
# comment
listen = 127.0.0.1
brokers = 4
verbose = true
[bench]
producers = 8
sizes = 32, 1024,4096
name = "quoted value"
)");
    CHECK(cfg.get_or("listen", "") == "127.0.0.1");
    CHECK(cfg.get_int("brokers", 0) == 4);
    CHECK(cfg.get_bool("verbose", false));
    CHECK(cfg.get_int("bench.producers", 0) == 8);
    CHECK(cfg.get_list("bench.sizes") == std::vector<std::string>{"32", "1024", "4096"});
    CHECK(cfg.get_or("bench.name", "") == "quoted value");
    CHECK(cfg.get_int("missing", 99) == 99);
}
