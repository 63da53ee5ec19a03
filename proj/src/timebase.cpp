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

#include "cott/timebase.h"

#include <cstdio>

#include "cott/error.h"

namespace cott {
namespace {

constexpr int64_t kMaxIndex = kMaxDay * kFramesPerDay;  // exclusive

bool
is_digit(char c) {
    return c >= '0' && c <= '9';
}

int
two_digits(std::string_view s, size_t pos) {
    return (s[pos] - '0') * 10 + (s[pos + 1] - '0');
}

std::string
quoted(std::string_view text) {
    constexpr size_t kMaxShown = 48;
    std::string out = "'";
    out.append(text.substr(0, kMaxShown));
    if (text.size() > kMaxShown) {
        out += "...";
    }
    out += "'";
    return out;
}

}  // namespace

Timestamp
Timestamp::from_fields(int day, int hour, int minute, int second, int frame) {
    if (day < 1 || day > kMaxDay) {
        throw Error(ErrorType::RANGE, "day " + std::to_string(day) + " outside 1..99");
    }
    if (hour < 0 || hour > 23) {
        throw Error(ErrorType::RANGE, "hour " + std::to_string(hour) + " outside 00..23");
    }
    if (minute < 0 || minute > 59) {
        throw Error(ErrorType::RANGE, "minute " + std::to_string(minute) + " outside 00..59");
    }
    if (second < 0 || second > 59) {
        throw Error(ErrorType::RANGE, "second " + std::to_string(second) + " outside 00..59");
    }
    if (frame < 0 || frame >= kFramesPerSecond) {
        throw Error(ErrorType::RANGE, "frame " + std::to_string(frame) + " outside 00..19");
    }
    int64_t index = ((((day - 1) * int64_t{24} + hour) * 60 + minute) * 60 + second) *
                        kFramesPerSecond +
                    frame;
    return Timestamp(index);
}

Timestamp
Timestamp::from_frame_index(int64_t index) {
    if (index < 0 || index >= kMaxIndex) {
        throw Error(ErrorType::RANGE, "frame index " + std::to_string(index) + " outside DAY1..DAY99");
    }
    return Timestamp(index);
}

TimeRange::TimeRange(Timestamp start, Timestamp end) : start_(start), end_(end) {
    if (!(end > start)) {
        throw Error(ErrorType::ORDER, "range end " + format_timestamp(end) +
                                          " is not after start " + format_timestamp(start));
    }
}

// Grammar: "DAY" day "_" HH MM SS FF, where day is 1-2 digits without a
// leading zero so that every accepted string is already canonical.
Timestamp
parse_timestamp(std::string_view text) {
    if (text.size() < 3 || text.substr(0, 3) != "DAY") {
        throw Error(ErrorType::SYNTAX, "timestamp " + quoted(text) + " must start with DAY");
    }
    size_t pos = 3;
    size_t digits_begin = pos;
    while (pos < text.size() && is_digit(text[pos])) {
        ++pos;
    }
    size_t day_digits = pos - digits_begin;
    if (day_digits == 0) {
        throw Error(ErrorType::SYNTAX, "timestamp " + quoted(text) + " has no day number");
    }
    if (text[digits_begin] == '0' && day_digits > 1) {
        throw Error(ErrorType::SYNTAX, "timestamp " + quoted(text) + " pads the day number");
    }
    if (pos >= text.size() || text[pos] != '_') {
        throw Error(ErrorType::SYNTAX, "timestamp " + quoted(text) + " expects '_' after the day");
    }
    ++pos;
    if (text.size() - pos != 8) {
        throw Error(ErrorType::SYNTAX, "timestamp " + quoted(text) + " expects 8 digits HHMMSSFF");
    }
    for (size_t i = pos; i < text.size(); ++i) {
        if (!is_digit(text[i])) {
            throw Error(ErrorType::SYNTAX,
                        "timestamp " + quoted(text) + " expects 8 digits HHMMSSFF");
        }
    }
    if (day_digits > 2) {
        throw Error(ErrorType::RANGE, "timestamp " + quoted(text) + " day outside 1..99");
    }
    int day = 0;
    for (size_t i = digits_begin; i < digits_begin + day_digits; ++i) {
        day = day * 10 + (text[i] - '0');
    }
    return Timestamp::from_fields(day, two_digits(text, pos), two_digits(text, pos + 2),
                                  two_digits(text, pos + 4), two_digits(text, pos + 6));
}

std::string
format_timestamp(Timestamp t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "DAY%d_%02d%02d%02d%02d", t.day(), t.hour(), t.minute(),
                  t.second(), t.frame());
    return buf;
}

Timestamp
advance(Timestamp t, Duration d) {
    if (d.frames < 0) {
        throw Error(ErrorType::RANGE, "negative duration");
    }
    if (d.frames >= kMaxIndex - t.frame_index()) {
        throw Error(ErrorType::RANGE, "advancing " + format_timestamp(t) + " passes DAY99");
    }
    return Timestamp::from_frame_index(t.frame_index() + d.frames);
}

TimeRange
parse_range(std::string_view text) {
    size_t dash = text.find('-');
    if (dash == std::string_view::npos) {
        throw Error(ErrorType::SYNTAX, "range " + quoted(text) + " expects START-END");
    }
    if (text.find('-', dash + 1) != std::string_view::npos) {
        throw Error(ErrorType::SYNTAX, "range " + quoted(text) + " has more than one '-'");
    }
    Timestamp start = parse_timestamp(text.substr(0, dash));
    Timestamp end = parse_timestamp(text.substr(dash + 1));
    return TimeRange(start, end);
}

std::string
format_range(const TimeRange& r) {
    return format_timestamp(r.start()) + "-" + format_timestamp(r.end());
}

void
validate_video_range(const TimeRange& r) {
    int64_t frames = r.duration().frames;
    if (frames <= kMinVideoFrames) {
        throw Error(ErrorType::TOO_SHORT, "range " + format_range(r) + " lasts " +
                                              std::to_string(frames) +
                                              " frames; it must be longer than 1 second");
    }
    if (frames >= kMaxVideoFrames) {
        throw Error(ErrorType::TOO_LONG, "range " + format_range(r) + " lasts " +
                                             std::to_string(frames) +
                                             " frames; it must be shorter than 10 minutes");
    }
}

}  // namespace cott
