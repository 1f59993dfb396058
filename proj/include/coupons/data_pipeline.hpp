#pragma once

#include <chrono>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "coupons/coupon_core.hpp"
#include "coupons/estimation.hpp"

namespace coupons {

using Timestamp = std::chrono::sys_seconds;

// "YYYY-MM-DD HH:MM:SS", "YYYY-MM-DDTHH:MM:SS" or "YYYY-MM-DD" (midnight).
Timestamp parse_timestamp(const std::string& text);
std::string format_timestamp(Timestamp t);
std::chrono::sys_days parse_date(const std::string& text);

struct OrderRecord {
  std::string order_id;
  std::string traveler_id;
  Timestamp trip_start{};
  Timestamp trip_end{};
  Money fare = 0.0;
  std::optional<std::string> used_coupon_id;
  Money payment = 0.0;

  void validate() const;
};

struct CouponRecord {
  std::string coupon_id;
  std::string traveler_id;
  Money face_value = 0.0;
  Timestamp start_time{};
  Timestamp expire_time{};

  void validate() const;
};

// Inclusive calendar range [from, to].
struct DateWindow {
  std::chrono::sys_days from{};
  std::chrono::sys_days to{};

  void validate() const;
  bool contains(Timestamp t) const;
};

struct IngestResult {
  std::vector<TripRecord> records;  // ordered by (traveler_id, trip time)
  std::vector<std::string> warnings;
};

// Rebuilds estimation records from raw logs. The decision time of an order is
// its trip_end; a coupon is alive at t when start_time <= t <= expire_time and
// no earlier order used it. Remaining validity is
// floor((expire_time - t) / day_unit). A group counts as activated when any of
// its coupons was in the wallet during an earlier redemption of another
// coupon. Profiles use in-window trips: lambda_hat = trips / days,
// (mu_p, sigma_p) = mean and population standard deviation of log fares.
// Throws IntegrityError when an order uses a coupon that is not alive.
IngestResult build_dataset(const std::vector<OrderRecord>& orders,
                           const std::vector<CouponRecord>& coupons,
                           std::chrono::seconds day_unit, const DateWindow& window);

enum class CurveAxis { fare_value_ratio, coupon_quantity };

// Keeps records whose statistic is at most (low) or above (high) the given
// quantile of that statistic over the dataset.
struct QuantileSplit {
  double quantile = 0.5;
  bool high = false;
};

struct CurveFilters {
  bool single_coupon = false;
  bool require_I_a = false;     // every coupon group activated
  bool require_v_le_p = false;  // smallest face value <= fare
  // Experience: redemptions of the same traveler in earlier records.
  std::optional<QuantileSplit> experience;
  // Frequency: lambda_hat of the record's profile.
  std::optional<QuantileSplit> frequency;
};

struct CurvePoint {
  double bin = 0.0;  // right endpoint for ratio bins, coupon count otherwise
  double ratio = 0.0;
  std::size_t count = 0;
};

inline constexpr double kRatioBinWidth = 0.2;

// Redemption ratio per bin. Ratio bins are [k w, (k+1) w) over fare / smallest
// face value, labelled (k+1) w. Empty bins are omitted.
std::vector<CurvePoint> redemption_ratio_curve(const std::vector<TripRecord>& dataset,
                                               CurveAxis axis, const CurveFilters& filters);
std::vector<TripRecord> apply_curve_filters(const std::vector<TripRecord>& dataset,
                                            const CurveFilters& filters);

std::string_view to_string(CurveAxis axis);
CurveAxis curve_axis_from_string(std::string_view name);

// --- CSV -------------------------------------------------------------------

using CsvRow = std::vector<std::string>;

// RFC 4180: quoted fields, doubled quotes, embedded newlines.
std::vector<CsvRow> read_csv(std::istream& in);
void write_csv_row(std::ostream& out, const CsvRow& row);

std::vector<OrderRecord> read_orders_csv(std::istream& in);
std::vector<CouponRecord> read_coupons_csv(std::istream& in);
void write_orders_csv(std::ostream& out, const std::vector<OrderRecord>& orders);
void write_coupons_csv(std::ostream& out, const std::vector<CouponRecord>& coupons);

// traveler_id, fare, chosen_v, chosen_T (blank for c0), coupon_set (JSON),
// attention (JSON), lambda_hat, mu_p, sigma_p.
void write_records_csv(std::ostream& out, const std::vector<TripRecord>& records);
std::vector<TripRecord> read_records_csv(std::istream& in);

// axis, bin, ratio, count.
void write_curve_csv(std::ostream& out, CurveAxis axis, const std::vector<CurvePoint>& curve);

}  // namespace coupons
