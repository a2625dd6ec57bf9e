// gnss_time.hpp : GNSS week/time-of-week epoch type
#pragma once

#include <cmath>

namespace rtkbench {

constexpr double kSecondsPerWeek = 604800.0;

struct GnssTime {
    int week = 0;
    double tow_s = 0.0; // [0, 604800)

    static GnssTime normalized(int week, double tow) {
        while (tow >= kSecondsPerWeek) {
            tow -= kSecondsPerWeek;
            ++week;
        }
        while (tow < 0.0) {
            tow += kSecondsPerWeek;
            --week;
        }
        return {week, tow};
    }

    GnssTime plus(double dt_s) const { return normalized(week, tow_s + dt_s); }

    // seconds of (*this - other)
    double diff(const GnssTime& other) const {
        return (week - other.week) * kSecondsPerWeek + (tow_s - other.tow_s);
    }

    bool operator==(const GnssTime& o) const { return week == o.week && tow_s == o.tow_s; }
    bool operator!=(const GnssTime& o) const { return !(*this == o); }
};

} // namespace rtkbench
