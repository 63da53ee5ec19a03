// Copyright 2026-present the cott-runtime project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cstdio>

#include "support.h"

using namespace cott;
using namespace cott::testing;

TEST_CASE("parse timestamp fields") {
    Timestamp t = parse_timestamp("DAY1_11210217");
    CHECK(t.day() == 1);
    CHECK(t.hour() == 11);
    CHECK(t.minute() == 21);
    CHECK(t.second() == 2);
    CHECK(t.frame() == 17);
    CHECK(t.frame_index() == reference_frame_index(1, 11, 21, 2, 17));

    Timestamp zero = parse_timestamp("DAY1_00000000");
    CHECK(zero.frame_index() == 0);
    CHECK(parse_timestamp("DAY99_23595919").frame_index() ==
          reference_frame_index(99, 23, 59, 59, 19));
}

TEST_CASE("format timestamp") {
    CHECK(format_timestamp(Timestamp::from_fields(2, 15, 50, 0, 0)) == "DAY2_15500000");
    CHECK(format_timestamp(Timestamp::from_fields(1, 0, 0, 0, 0)) == "DAY1_00000000");
    CHECK(format_timestamp(Timestamp::from_fields(1, 11, 21, 2, 17)) == "DAY1_11210217");
    CHECK(format_timestamp(Timestamp::from_fields(12, 1, 2, 3, 4)) == "DAY12_01020304");
}

TEST_CASE("invalid timestamps carry the right error class") {
    CHECK(error_of([] { parse_timestamp("DAY1_11210220"); }) == ErrorType::RANGE);
    CHECK(error_of([] { parse_timestamp("DAY1_24000000"); }) == ErrorType::RANGE);
    CHECK(error_of([] { parse_timestamp("DAY1_00600000"); }) == ErrorType::RANGE);
    CHECK(error_of([] { parse_timestamp("DAY1_00006000"); }) == ErrorType::RANGE);
    CHECK(error_of([] { parse_timestamp("DAY0_00000000"); }) == ErrorType::RANGE);
    CHECK(error_of([] { parse_timestamp("DAY100_00000000"); }) == ErrorType::RANGE);

    for (const char* bad : {"", "DAY", "DAY_00000000", "day1_00000000", "DAY1-00000000",
                            "DAY1_0000000", "DAY1_000000000", "DAY01_00000000", "DAY1_0000000a",
                            " DAY1_00000000", "DAY1_00000000 ", "DAYx_00000000", "DAY1__0000000"}) {
        CAPTURE(bad);
        CHECK(error_of([&] { parse_timestamp(bad); }) == ErrorType::SYNTAX);
    }
}

TEST_CASE("advance carries through every field") {
    CHECK(format_timestamp(advance(ts("DAY1_11210217"), {3})) == "DAY1_11210300");
    CHECK(format_timestamp(advance(ts("DAY1_23595919"), {1})) == "DAY2_00000000");
    CHECK(advance(ts("DAY3_10101010"), {0}) == ts("DAY3_10101010"));
    CHECK(error_of([] { advance(ts("DAY99_23595919"), {1}); }) == ErrorType::RANGE);
}

TEST_CASE("advance is associative with duration addition") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        Timestamp t = at(static_cast<int64_t>(rng() % (40 * kDay)));
        Duration a{static_cast<int64_t>(rng() % (5 * kDay))};
        Duration b{static_cast<int64_t>(rng() % (5 * kDay))};
        CHECK(advance(advance(t, a), b) == advance(t, a + b));
        CHECK(advance(t, a).frame_index() == t.frame_index() + a.frames);
    }
}

TEST_CASE("round trip and ordering over random timestamps") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 5000; ++i) {
        int day = 1 + static_cast<int>(rng() % 99);
        int h = static_cast<int>(rng() % 24);
        int m = static_cast<int>(rng() % 60);
        int s = static_cast<int>(rng() % 60);
        int f = static_cast<int>(rng() % 20);
        char buf[32];
        std::snprintf(buf, sizeof buf, "DAY%d_%02d%02d%02d%02d", day, h, m, s, f);
        Timestamp t = parse_timestamp(buf);
        CHECK(format_timestamp(t) == buf);
        CHECK(t.frame_index() == reference_frame_index(day, h, m, s, f));
        CHECK(parse_timestamp(format_timestamp(t)) == t);

        Timestamp u = at(static_cast<int64_t>(rng() % (9 * kDay)));
        Timestamp v = at(static_cast<int64_t>(rng() % (9 * kDay)));
        // Days 1..9 share one digit width, so strings order like frames.
        CHECK((u < v) == (format_timestamp(u) < format_timestamp(v)));
    }
}

TEST_CASE("parse range") {
    TimeRange r = parse_range("DAY1_11000000-DAY1_11050000");
    CHECK(r.duration().frames == 5 * 60 * 20);
    CHECK(parse_range("DAY1_11210217-DAY1_11220217").duration().frames == 60 * 20);
    CHECK(format_range(r) == "DAY1_11000000-DAY1_11050000");
    CHECK(error_of([] { parse_range("DAY1_11000000-DAY1_11000000"); }) == ErrorType::ORDER);
    CHECK(error_of([] { parse_range("DAY1_11050000-DAY1_11000000"); }) == ErrorType::ORDER);
    CHECK(error_of([] { parse_range("DAY1_11000000"); }) == ErrorType::SYNTAX);
    CHECK(error_of([] { parse_range("DAY1_11000000--DAY1_11050000"); }) == ErrorType::SYNTAX);
    CHECK(error_of([] { parse_range("DAY1_11000000-DAY1_11050020"); }) == ErrorType::RANGE);
}

TEST_CASE("video range bounds are strict") {
    Timestamp base = ts("DAY1_11000000");
    auto span = [&](int64_t frames) { return TimeRange(base, advance(base, {frames})); };
    CHECK(error_of([&] { validate_video_range(span(20)); }) == ErrorType::TOO_SHORT);
    CHECK(error_of([&] { validate_video_range(span(12000)); }) == ErrorType::TOO_LONG);
    CHECK_NOTHROW(validate_video_range(span(21)));
    CHECK_NOTHROW(validate_video_range(span(11999)));
    CHECK_NOTHROW(validate_video_range(span(5 * 60 * 20)));
}

TEST_CASE("fuzzed strings never escape as anything but Error") {
    std::mt19937_64 rng(99);
    const std::string alphabet = "DAY_-0123456789x ";
    for (int i = 0; i < 20000; ++i) {
        std::string s;
        size_t len = rng() % 32;
        for (size_t k = 0; k < len; ++k) {
            s.push_back(rng() % 5 == 0 ? static_cast<char>(rng() % 256)
                                       : alphabet[rng() % alphabet.size()]);
        }
        try {
            Timestamp t = parse_timestamp(s);
            CHECK(format_timestamp(t) == s);
        } catch (const Error&) {
        }
        try {
            TimeRange r = parse_range(s);
            CHECK(format_range(r) == s);
        } catch (const Error&) {
        }
    }
}
