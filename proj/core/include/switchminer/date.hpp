#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace switchminer {

/// A calendar date with day resolution, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(int days_since_epoch) : days_(days_since_epoch) {}
  Date(int year, unsigned month, unsigned day);

  /// Parses `YYYY-MM-DD`; returns nullopt for anything else or for invalid dates.
  static std::optional<Date> parse(std::string_view text);

  [[nodiscard]] constexpr int days_since_epoch() const { return days_; }
  [[nodiscard]] std::string to_string() const;
  [[nodiscard]] std::chrono::year_month_day ymd() const;

  [[nodiscard]] constexpr Date plus_days(int days) const { return Date(days_ + days); }

  friend constexpr auto operator<=>(Date, Date) = default;
  friend constexpr int operator-(Date a, Date b) { return a.days_ - b.days_; }

 private:
  int days_ = 0;
};

/// Whole years between two dates, floor(days / 365.25).
int age_in_years(Date birth, Date at);

}  // namespace switchminer
