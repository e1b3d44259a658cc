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

#include "frame_gen.hpp"

using namespace octo;
using namespace octo::proto;

TEST_CASE("codec round trip over randomized frames of every opcode") {
    test::FrameGen gen(0x0c70);
    for (int i = 0; i < 20'000; ++i) {
        CHECK(gen.roundtrip_one());
    }
}

TEST_CASE("decoders reject truncated and padded buffers") {
    test::FrameGen gen(99);
    int rejected = 0;
    for (int i = 0; i < 2000; ++i) {
        ProduceReq m{gen.rand_name(), 1, 1, gen.rand_bytes(16), gen.rand_bytes(64)};
        Bytes buf = encode(m);
        // Truncate somewhere strictly inside the buffer.
        Bytes cut(buf.begin(), buf.begin() + static_cast<long>(gen.rng() % buf.size()));
        try {
            ByteReader r(cut);
            decode_produce_req(r);
        } catch (const CodecError&) {
            ++rejected;
        }
        // Trailing garbage must also be rejected.
        Bytes padded = buf;
        padded.push_back(0xff);
        CHECK_THROWS_AS(
            [&] {
                ByteReader r(padded);
                decode_produce_req(r);
            }(),
            CodecError);
    }
    // Nearly every truncation point must fail to decode (offset 0 with an
    // empty name can decode as an empty prefix, so allow a tiny remainder).
    CHECK(rejected > 1900);
}

TEST_CASE("record count sanity bound rejects absurd headers") {
    ByteWriter w;
    w.u8(0);            // status OK
    w.u32(0xffffffff);  // claimed record count
    Bytes body = w.take();
    ByteReader r(body);
    CHECK_THROWS_AS(decode_fetch_resp(r), CodecError);
}
