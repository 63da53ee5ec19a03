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

#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace cott {

inline constexpr int64_t kFramesPerSecond = 20;
inline constexpr int64_t kFramesPerMinute = 60 * kFramesPerSecond;
inline constexpr int64_t kFramesPerHour = 60 * kFramesPerMinute;
inline constexpr int64_t kFramesPerDay = 24 * kFramesPerHour;
inline constexpr int kMaxDay = 99;

/// A count of 1/20-second ticks. Never negative.
struct Duration {
    int64_t frames = 0;

    static constexpr Duration
    seconds(int64_t s) {
        return {s * kFramesPerSecond};
    }
    static constexpr Duration
    minutes(int64_t m) {
        return {m * kFramesPerMinute};
    }
    static constexpr Duration
    hours(int64_t h) {
        return {h * kFramesPerHour};
    }

    constexpr Duration
    operator+(Duration other) const {
        return {frames + other.frames};
    }
    constexpr auto
    operator<=>(const Duration&) const = default;
};

/// An instant on the recording clock, written DAYX_HHMMSSFF.
///
/// Stored as the total frame index counted from DAY1_00000000, so ordering and
/// arithmetic are integer operations; the calendar fields are derived.
class Timestamp {
public:
    constexpr Timestamp() = default;

    /// Throws Error(RANGE) when any field is out of bounds.
    static Timestamp
    from_fields(int day, int hour, int minute, int second, int frame);

    /// Throws Error(RANGE) when the index falls outside DAY1..DAY99.
    static Timestamp
    from_frame_index(int64_t index);

    int64_t
    frame_index() const noexcept {
        return index_;
    }

    int
    day() const noexcept {
        return static_cast<int>(index_ / kFramesPerDay) + 1;
    }
    int
    hour() const noexcept {
        return static_cast<int>(index_ % kFramesPerDay / kFramesPerHour);
    }
    int
    minute() const noexcept {
        return static_cast<int>(index_ % kFramesPerHour / kFramesPerMinute);
    }
    int
    second() const noexcept {
        return static_cast<int>(index_ % kFramesPerMinute / kFramesPerSecond);
    }
    int
    frame() const noexcept {
        return static_cast<int>(index_ % kFramesPerSecond);
    }

    constexpr auto
    operator<=>(const Timestamp&) const = default;

private:
    explicit constexpr Timestamp(int64_t index) : index_(index) {
    }

    int64_t index_ = 0;
};

/// Half-open interval [start, end) with end strictly after start.
class TimeRange {
public:
    /// The first frame of DAY1.
    TimeRange() : end_(Timestamp::from_frame_index(1)) {
    }

    /// Throws Error(ORDER) unless end > start.
    TimeRange(Timestamp start, Timestamp end);

    Timestamp
    start() const noexcept {
        return start_;
    }
    Timestamp
    end() const noexcept {
        return end_;
    }
    Duration
    duration() const noexcept {
        return {end_.frame_index() - start_.frame_index()};
    }

    bool
    contains(Timestamp t) const noexcept {
        return start_ <= t && t < end_;
    }
    bool
    contains(const TimeRange& other) const noexcept {
        return start_ <= other.start_ && other.end_ <= end_;
    }
    bool
    intersects(const TimeRange& other) const noexcept {
        return start_ < other.end_ && other.start_ < end_;
    }

    bool
    operator==(const TimeRange&) const = default;

private:
    Timestamp start_;
    Timestamp end_;
};

Timestamp
parse_timestamp(std::string_view text);

std::string
format_timestamp(Timestamp t);

/// Throws Error(RANGE) if the result would pass DAY99.
Timestamp
advance(Timestamp t, Duration d);

TimeRange
parse_range(std::string_view text);

std::string
format_range(const TimeRange& r);

/// Video windows must be longer than 1 s and shorter than 10 min, both strict.
/// Throws Error(TOO_SHORT) or Error(TOO_LONG).
void
validate_video_range(const TimeRange& r);

inline constexpr int64_t kMinVideoFrames = 1 * kFramesPerSecond;
inline constexpr int64_t kMaxVideoFrames = 10 * kFramesPerMinute;

}  // namespace cott
