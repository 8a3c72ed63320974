#pragma once

#include <chrono>
#include <cstdint>

#include "egostance/corpus.hpp"

namespace egostance::calendar {

inline constexpr Timestamp kSecondsPerDay = 86400;
/// Mean Gregorian month (365.2425 / 12 days).
inline constexpr double kSecondsPerMonth = 2629746.0;

inline std::chrono::year_month_day to_date(Timestamp ts) {
  using namespace std::chrono;
  const auto days = floor<std::chrono::days>(sys_seconds{seconds{ts}});
  return year_month_day{days};
}

inline Timestamp to_timestamp(std::chrono::year_month_day ymd) {
  using namespace std::chrono;
  return sys_seconds{sys_days{ymd}}.time_since_epoch().count();
}

/// Whole days since the epoch (UTC).
inline std::int64_t day_index(Timestamp ts) {
  return ts >= 0 ? ts / kSecondsPerDay : -((-ts + kSecondsPerDay - 1) / kSecondsPerDay);
}

/// Months since year 0, used as a dense calendar-month key.
inline int month_index(Timestamp ts) {
  const auto ymd = to_date(ts);
  return static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
}

inline unsigned days_in_month(int month_idx) {
  using namespace std::chrono;
  const year y{month_idx / 12};
  const month m{static_cast<unsigned>(month_idx % 12 + 1)};
  return static_cast<unsigned>(year_month_day_last{y, month_day_last{m}}.day());
}

/// Same instant shifted by `n` calendar months, day clamped to the target month's length.
inline Timestamp add_months(Timestamp ts, int n) {
  using namespace std::chrono;
  const Timestamp time_of_day = ts - day_index(ts) * kSecondsPerDay;
  auto ymd = to_date(ts);
  year_month ym = year_month{ymd.year(), ymd.month()} + months{n};
  const unsigned last = static_cast<unsigned>(year_month_day_last{ym.year(), month_day_last{ym.month()}}.day());
  const unsigned d = std::min(static_cast<unsigned>(ymd.day()), last);
  return to_timestamp(year_month_day{ym.year(), ym.month(), day{d}}) + time_of_day;
}

}  // namespace egostance::calendar
