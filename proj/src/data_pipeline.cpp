#include "coupons/data_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>

#include "coupons/error.hpp"
#include "coupons/io.hpp"

namespace coupons {

using namespace std::chrono;

Timestamp parse_timestamp(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int consumed = 0;
  const int got = std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%n", &y, &mo, &d, &sep, &h,
                              &mi, &s, &consumed);
  bool ok = false;
  if (got == 7 && (sep == ' ' || sep == 'T') && static_cast<std::size_t>(consumed) == text.size()) {
    ok = h < 24 && mi < 60 && s < 61 && h >= 0 && mi >= 0 && s >= 0;
  } else if (got >= 3) {
    consumed = 0;
    std::sscanf(text.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed);
    ok = static_cast<std::size_t>(consumed) == text.size();
    h = mi = s = 0;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ok || !ymd.ok()) throw ValidationError("invalid timestamp '" + text + "'");
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_timestamp(Timestamp t) {
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

sys_days parse_date(const std::string& text) {
  const auto t = parse_timestamp(text);
  const auto d = floor<days>(t);
  if (t != d) throw ValidationError("expected a date without time, got '" + text + "'");
  return d;
}

void OrderRecord::validate() const {
  if (order_id.empty()) throw ValidationError("order without an id");
  if (traveler_id.empty()) throw ValidationError("order " + order_id + " has no traveler id");
  if (trip_start > trip_end) throw ValidationError("order " + order_id + " ends before it starts");
  if (!(fare > 0.0) || !std::isfinite(fare)) {
    throw ValidationError("order " + order_id + " has a non-positive fare");
  }
  if (!(payment >= 0.0) || !std::isfinite(payment)) {
    throw ValidationError("order " + order_id + " has a negative payment");
  }
}

void CouponRecord::validate() const {
  if (coupon_id.empty()) throw ValidationError("coupon without an id");
  if (traveler_id.empty()) throw ValidationError("coupon " + coupon_id + " has no traveler id");
  if (!(face_value > 0.0) || !std::isfinite(face_value)) {
    throw ValidationError("coupon " + coupon_id + " has a non-positive face value");
  }
  if (start_time > expire_time) {
    throw ValidationError("coupon " + coupon_id + " expires before it starts");
  }
}

void DateWindow::validate() const {
  if (from > to) throw ValidationError("window start is after window end");
}

bool DateWindow::contains(Timestamp t) const { return t >= from && t < to + days{1}; }

namespace {

struct TravelerLog {
  std::vector<const OrderRecord*> orders;
  std::vector<const CouponRecord*> coupons;
};

bool alive_at(const CouponRecord& c, Timestamp t) {
  return c.start_time <= t && t <= c.expire_time;
}

}  // namespace

IngestResult build_dataset(const std::vector<OrderRecord>& orders,
                           const std::vector<CouponRecord>& coupons, seconds day_unit,
                           const DateWindow& window) {
  if (day_unit <= seconds{0}) throw ValidationError("day unit must be positive");
  window.validate();

  IngestResult result;
  std::map<std::string, TravelerLog> travelers;
  std::unordered_map<std::string, const CouponRecord*> coupon_by_id;
  std::set<std::string> order_ids;
  for (const auto& o : orders) {
    o.validate();
    if (!order_ids.insert(o.order_id).second) {
      throw IntegrityError("duplicate order id " + o.order_id);
    }
    travelers[o.traveler_id].orders.push_back(&o);
  }
  for (const auto& c : coupons) {
    c.validate();
    if (!coupon_by_id.emplace(c.coupon_id, &c).second) {
      throw IntegrityError("duplicate coupon id " + c.coupon_id);
    }
    auto it = travelers.find(c.traveler_id);
    if (it == travelers.end()) {
      result.warnings.push_back("coupon " + c.coupon_id + " belongs to traveler " + c.traveler_id +
                                " who has no orders");
      continue;
    }
    it->second.coupons.push_back(&c);
  }

  const double window_days =
      duration<double>(days{(window.to - window.from).count() + 1}) / duration<double>(day_unit);

  for (auto& [traveler_id, log] : travelers) {
    std::sort(log.orders.begin(), log.orders.end(), [](const OrderRecord* a, const OrderRecord* b) {
      return std::tie(a->trip_start, a->trip_end, a->order_id) <
             std::tie(b->trip_start, b->trip_end, b->order_id);
    });

    // Profile from in-window trips.
    std::vector<double> log_fares;
    std::map<long long, int> trips_per_day;
    for (const auto* o : log.orders) {
      if (!window.contains(o->trip_end)) continue;
      log_fares.push_back(std::log(o->fare));
      ++trips_per_day[(o->trip_end - sys_seconds{window.from}) / day_unit];
    }
    for (const auto& [day_index, n] : trips_per_day) {
      if (n > 1) {
        result.warnings.push_back("traveler " + traveler_id + " has " + std::to_string(n) +
                                  " trips in day " + std::to_string(day_index) + " of the window");
      }
    }
    TravelerProfile profile;
    if (!log_fares.empty()) {
      double mean = 0.0;
      for (double x : log_fares) mean += x;
      mean /= static_cast<double>(log_fares.size());
      double ss = 0.0;
      for (double x : log_fares) ss += (x - mean) * (x - mean);
      profile.mu_p = mean;
      profile.sigma_p = std::sqrt(ss / static_cast<double>(log_fares.size()));
      profile.lambda_hat = static_cast<double>(log_fares.size()) / window_days;
      if (profile.lambda_hat > 1.0) {
        result.warnings.push_back("traveler " + traveler_id +
                                  " averages more than one trip per day; lambda_hat clamped to 1");
        profile.lambda_hat = 1.0;
      }
    }

    std::set<std::string> used;
    std::set<std::string> activated;
    for (const auto* o : log.orders) {
      const Timestamp t = o->trip_end;
      const CouponRecord* redeemed = nullptr;
      bool orphan = false;
      if (o->used_coupon_id) {
        auto it = coupon_by_id.find(*o->used_coupon_id);
        if (it == coupon_by_id.end()) {
          orphan = true;
          result.warnings.push_back("order " + o->order_id + " uses unknown coupon " +
                                    *o->used_coupon_id + "; record dropped");
        } else {
          redeemed = it->second;
          if (redeemed->traveler_id != o->traveler_id) {
            throw IntegrityError("order " + o->order_id + " uses coupon " + redeemed->coupon_id +
                                 " of another traveler");
          }
          if (used.contains(redeemed->coupon_id) || !alive_at(*redeemed, t)) {
            throw IntegrityError("order " + o->order_id + " uses coupon " + redeemed->coupon_id +
                                 " which is not alive at " + format_timestamp(t));
          }
        }
      }

      const Money expected_payment = o->fare - (redeemed ? std::min(redeemed->face_value, o->fare) : 0.0);
      if (std::abs(o->payment - expected_payment) > 0.005) {
        result.warnings.push_back("order " + o->order_id + " payment " + io::format_number(o->payment) +
                                  " differs from fare minus redeemed amount " +
                                  io::format_number(expected_payment));
      }

      std::vector<const CouponRecord*> alive;
      for (const auto* c : log.coupons) {
        if (!used.contains(c->coupon_id) && alive_at(*c, t)) alive.push_back(c);
      }

      if (!orphan && window.contains(t)) {
        std::vector<CouponGroup> groups;
        std::map<GroupKey, bool> flags;
        GroupKey chosen_key{};
        for (const auto* c : alive) {
          const int T = static_cast<int>((c->expire_time - t) / day_unit);
          const GroupKey key{c->face_value, T};
          groups.push_back({key.v, key.T, 1});
          flags[key] = flags[key] || activated.contains(c->coupon_id);
          if (c == redeemed) chosen_key = key;
        }
        if (!groups.empty()) {
          TripRecord record;
          record.traveler_id = traveler_id;
          record.fare = o->fare;
          record.coupon_set = CouponSet::make(groups);
          record.attention = AttentionState(flags);
          if (redeemed) record.chosen = chosen_key;
          record.profile = profile;
          record.validate();
          result.records.push_back(std::move(record));
        }
      }

      if (redeemed || orphan) {
        // The wallet was opened: every other coupon in it has now been seen.
        for (const auto* c : alive) {
          if (c != redeemed) activated.insert(c->coupon_id);
        }
      }
      if (redeemed) used.insert(redeemed->coupon_id);
    }
  }
  return result;
}

// --- curves -----------------------------------------------------------------

std::string_view to_string(CurveAxis axis) {
  return axis == CurveAxis::fare_value_ratio ? "fare_value_ratio" : "coupon_quantity";
}

CurveAxis curve_axis_from_string(std::string_view name) {
  if (name == "fare_value_ratio" || name == "ratio") return CurveAxis::fare_value_ratio;
  if (name == "coupon_quantity" || name == "quantity") return CurveAxis::coupon_quantity;
  throw ValidationError("unknown curve axis '" + std::string(name) + "'");
}

namespace {

Money smallest_face_value(const CouponSet& set) {
  Money v = set.coupons().front().v;
  for (const auto& g : set.coupons()) v = std::min(v, g.v);
  return v;
}

bool all_activated(const TripRecord& r) {
  for (const auto& g : r.coupon_set.coupons()) {
    if (!r.attention.activated(g.key())) return false;
  }
  return true;
}

double quantile_of(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
}

std::vector<bool> split_mask(const std::vector<double>& stat, const QuantileSplit& split) {
  if (!(split.quantile >= 0.0 && split.quantile <= 1.0)) {
    throw ValidationError("split quantile must lie in [0, 1]");
  }
  std::vector<bool> keep(stat.size(), true);
  if (stat.empty()) return keep;
  const double threshold = quantile_of(stat, split.quantile);
  for (std::size_t i = 0; i < stat.size(); ++i) {
    keep[i] = split.high ? stat[i] > threshold : stat[i] <= threshold;
  }
  return keep;
}

}  // namespace

std::vector<TripRecord> apply_curve_filters(const std::vector<TripRecord>& dataset,
                                            const CurveFilters& filters) {
  std::vector<bool> keep(dataset.size(), true);
  if (filters.experience) {
    std::vector<double> experience(dataset.size());
    std::unordered_map<std::string, int> redemptions;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      experience[i] = redemptions[dataset[i].traveler_id];
      if (dataset[i].chosen) ++redemptions[dataset[i].traveler_id];
    }
    const auto mask = split_mask(experience, *filters.experience);
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = keep[i] && mask[i];
  }
  if (filters.frequency) {
    std::vector<double> frequency(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) frequency[i] = dataset[i].profile.lambda_hat;
    const auto mask = split_mask(frequency, *filters.frequency);
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = keep[i] && mask[i];
  }

  std::vector<TripRecord> out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& r = dataset[i];
    if (!keep[i] || r.coupon_set.is_default()) continue;
    if (filters.single_coupon && !r.coupon_set.is_single_coupon()) continue;
    if (filters.require_I_a && !all_activated(r)) continue;
    if (filters.require_v_le_p && smallest_face_value(r.coupon_set) > r.fare) continue;
    out.push_back(r);
  }
  return out;
}

std::vector<CurvePoint> redemption_ratio_curve(const std::vector<TripRecord>& dataset,
                                               CurveAxis axis, const CurveFilters& filters) {
  std::map<long long, std::pair<std::size_t, std::size_t>> bins;  // index -> (redeemed, total)
  for (const auto& r : apply_curve_filters(dataset, filters)) {
    long long index = 0;
    if (axis == CurveAxis::fare_value_ratio) {
      const double ratio = r.fare / smallest_face_value(r.coupon_set);
      index = static_cast<long long>(std::floor(ratio / kRatioBinWidth + 1e-12));
    } else {
      index = r.coupon_set.coupon_count();
    }
    auto& [redeemed, total] = bins[index];
    redeemed += r.chosen ? 1 : 0;
    ++total;
  }
  std::vector<CurvePoint> curve;
  for (const auto& [index, counts] : bins) {
    CurvePoint p;
    p.bin = axis == CurveAxis::fare_value_ratio
                ? static_cast<double>(index + 1) * kRatioBinWidth
                : static_cast<double>(index);
    p.count = counts.second;
    p.ratio = static_cast<double>(counts.first) / static_cast<double>(counts.second);
    curve.push_back(p);
  }
  return curve;
}

// --- CSV -------------------------------------------------------------------

std::vector<CsvRow> read_csv(std::istream& in) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  char ch = 0;
  auto end_row = [&] {
    if (field_started || !row.empty()) {
      row.push_back(std::move(field));
      rows.push_back(std::move(row));
    }
    row.clear();
    field.clear();
    field_started = false;
  };
  while (in.get(ch)) {
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (quoted) throw ValidationError("CSV ends inside a quoted field");
  end_row();
  return rows;
}

void write_csv_row(std::ostream& out, const CsvRow& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    const auto& f = row[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out << f;
      continue;
    }
    out << '"';
    for (char c : f) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  }
  out << '\n';
}

namespace {

class CsvTable {
 public:
  CsvTable(std::istream& in, const std::vector<std::string>& required) : rows_(read_csv(in)) {
    if (rows_.empty()) throw ValidationError("CSV has no header row");
    const auto& header = rows_.front();
    for (std::size_t i = 0; i < header.size(); ++i) columns_[header[i]] = i;
    for (const auto& name : required) {
      if (!columns_.contains(name)) throw ValidationError("CSV is missing column '" + name + "'");
    }
  }

  std::size_t size() const { return rows_.size() - 1; }

  const std::string& at(std::size_t row, const std::string& column) const {
    const auto& r = rows_[row + 1];
    const auto idx = columns_.at(column);
    if (idx >= r.size()) {
      throw ValidationError("CSV row " + std::to_string(row + 2) + " has too few fields");
    }
    return r[idx];
  }

  double number(std::size_t row, const std::string& column) const {
    const auto& text = at(row, column);
    try {
      std::size_t used = 0;
      const double x = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return x;
    } catch (const std::exception&) {
      throw ValidationError("CSV row " + std::to_string(row + 2) + ": '" + column +
                            "' is not a number: '" + text + "'");
    }
  }

 private:
  std::vector<CsvRow> rows_;
  std::map<std::string, std::size_t> columns_;
};

}  // namespace

std::vector<OrderRecord> read_orders_csv(std::istream& in) {
  const CsvTable table(in, {"order_id", "traveler_id", "trip_start", "trip_end", "fare",
                            "used_coupon_id", "payment"});
  std::vector<OrderRecord> out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    OrderRecord o;
    o.order_id = table.at(i, "order_id");
    o.traveler_id = table.at(i, "traveler_id");
    o.trip_start = parse_timestamp(table.at(i, "trip_start"));
    o.trip_end = parse_timestamp(table.at(i, "trip_end"));
    o.fare = table.number(i, "fare");
    if (const auto& used = table.at(i, "used_coupon_id"); !used.empty()) o.used_coupon_id = used;
    o.payment = table.number(i, "payment");
    o.validate();
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<CouponRecord> read_coupons_csv(std::istream& in) {
  const CsvTable table(in, {"coupon_id", "traveler_id", "face_value", "start_time", "expire_time"});
  std::vector<CouponRecord> out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    CouponRecord c;
    c.coupon_id = table.at(i, "coupon_id");
    c.traveler_id = table.at(i, "traveler_id");
    c.face_value = table.number(i, "face_value");
    c.start_time = parse_timestamp(table.at(i, "start_time"));
    c.expire_time = parse_timestamp(table.at(i, "expire_time"));
    c.validate();
    out.push_back(std::move(c));
  }
  return out;
}

void write_orders_csv(std::ostream& out, const std::vector<OrderRecord>& orders) {
  write_csv_row(out, {"order_id", "traveler_id", "trip_start", "trip_end", "fare", "used_coupon_id",
                      "payment"});
  for (const auto& o : orders) {
    write_csv_row(out, {o.order_id, o.traveler_id, format_timestamp(o.trip_start),
                        format_timestamp(o.trip_end), io::format_number(o.fare),
                        o.used_coupon_id.value_or(""), io::format_number(o.payment)});
  }
}

void write_coupons_csv(std::ostream& out, const std::vector<CouponRecord>& coupons) {
  write_csv_row(out, {"coupon_id", "traveler_id", "face_value", "start_time", "expire_time"});
  for (const auto& c : coupons) {
    write_csv_row(out, {c.coupon_id, c.traveler_id, io::format_number(c.face_value),
                        format_timestamp(c.start_time), format_timestamp(c.expire_time)});
  }
}

void write_records_csv(std::ostream& out, const std::vector<TripRecord>& records) {
  write_csv_row(out, {"traveler_id", "fare", "chosen_v", "chosen_T", "coupon_set", "attention",
                      "lambda_hat", "mu_p", "sigma_p"});
  for (const auto& r : records) {
    write_csv_row(out, {r.traveler_id, io::format_number(r.fare),
                        r.chosen ? io::format_number(r.chosen->v) : "",
                        r.chosen ? std::to_string(r.chosen->T) : "",
                        io::to_json(r.coupon_set).dump(), io::to_json(r.attention).dump(),
                        io::format_number(r.profile.lambda_hat), io::format_number(r.profile.mu_p),
                        io::format_number(r.profile.sigma_p)});
  }
}

std::vector<TripRecord> read_records_csv(std::istream& in) {
  const CsvTable table(in, {"traveler_id", "fare", "chosen_v", "chosen_T", "coupon_set",
                            "attention", "lambda_hat", "mu_p", "sigma_p"});
  std::vector<TripRecord> out;
  out.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const std::string where = "CSV row " + std::to_string(i + 2) + ": ";
    try {
      TripRecord r;
      r.traveler_id = table.at(i, "traveler_id");
      r.fare = table.number(i, "fare");
      const bool has_v = !table.at(i, "chosen_v").empty();
      const bool has_T = !table.at(i, "chosen_T").empty();
      if (has_v != has_T) throw ValidationError("chosen_v and chosen_T must both be set or blank");
      if (has_v) {
        r.chosen = GroupKey{table.number(i, "chosen_v"),
                            static_cast<int>(table.number(i, "chosen_T"))};
      }
      r.coupon_set = io::coupon_set_from_json(io::Json::parse(table.at(i, "coupon_set")));
      const auto& attention = table.at(i, "attention");
      r.attention = attention.empty() ? AttentionState{}
                                      : io::attention_from_json(io::Json::parse(attention));
      r.profile = {table.number(i, "lambda_hat"), table.number(i, "mu_p"),
                   table.number(i, "sigma_p")};
      r.validate();
      out.push_back(std::move(r));
    } catch (const io::Json::exception& e) {
      throw ValidationError(where + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  return out;
}

void write_curve_csv(std::ostream& out, CurveAxis axis, const std::vector<CurvePoint>& curve) {
  write_csv_row(out, {"axis", "bin", "ratio", "count"});
  for (const auto& p : curve) {
    write_csv_row(out, {std::string(to_string(axis)), io::format_number(p.bin),
                        io::format_number(p.ratio), std::to_string(p.count)});
  }
}

}  // namespace coupons
