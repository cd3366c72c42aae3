#include "shiptrack/common.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

namespace shiptrack {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedRaster: return "MalformedRaster";
    case ErrorCode::MissingMetadata: return "MissingMetadata";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TimeMismatch: return "TimeMismatch";
    case ErrorCode::TimestampOrder: return "TimestampOrder";
    case ErrorCode::AllCorrupt: return "AllCorrupt";
    case ErrorCode::FrameTooSmall: return "FrameTooSmall";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::DegenerateBox: return "DegenerateBox";
    case ErrorCode::BoxOutOfBounds: return "BoxOutOfBounds";
    case ErrorCode::InsufficientFeatures: return "InsufficientFeatures";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::HeightOutOfRange: return "HeightOutOfRange";
    case ErrorCode::DisjointTimeRanges: return "DisjointTimeRanges";
    case ErrorCode::NoRecords: return "NoRecords";
  }
  return "Unknown";
}

namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  int digits(std::size_t count) {
    int value = 0;
    for (std::size_t i = 0; i < count; ++i) {
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        bad();
      }
      value = value * 10 + (text_[pos_++] - '0');
    }
    return value;
  }

  void expect(std::string_view accepted) {
    if (pos_ >= text_.size() || accepted.find(text_[pos_]) == std::string_view::npos) bad();
    ++pos_;
  }

  bool peek(char c) const { return pos_ < text_.size() && text_[pos_] == c; }
  bool at_digit() const {
    return pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]));
  }
  bool done() const { return pos_ == text_.size(); }
  char next() {
    if (pos_ >= text_.size()) bad();
    return text_[pos_++];
  }

  [[noreturn]] void bad() const {
    fail(ErrorCode::InvalidArgument, "malformed RFC 3339 timestamp '" + std::string(text_) + "'");
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  Cursor in(text);
  const int y = in.digits(4);
  in.expect("-");
  const int mo = in.digits(2);
  in.expect("-");
  const int d = in.digits(2);
  in.expect("Tt ");
  const int h = in.digits(2);
  in.expect(":");
  const int mi = in.digits(2);
  in.expect(":");
  const int s = in.digits(2);

  int millis = 0;
  if (in.peek('.')) {
    in.next();
    int scale = 100;
    if (!in.at_digit()) in.bad();
    while (in.at_digit()) {
      const int digit = in.digits(1);
      millis += digit * scale;
      scale /= 10;
    }
  }

  int offset_minutes = 0;
  const char zone = in.next();
  if (zone == 'Z' || zone == 'z') {
  } else if (zone == '+' || zone == '-') {
    const int oh = in.digits(2);
    in.expect(":");
    const int om = in.digits(2);
    offset_minutes = (zone == '+' ? 1 : -1) * (oh * 60 + om);
  } else {
    in.bad();
  }
  if (!in.done()) in.bad();

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) in.bad();

  return time_point_cast<milliseconds>(sys_days{ymd}) + hours{h} + minutes{mi} + seconds{s} +
         milliseconds{millis} - minutes{offset_minutes};
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss<milliseconds> tod{t - day_point};
  char buf[40];
  const long long ms = tod.subseconds().count();
  if (ms == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), (long long)tod.hours().count(),
                  (long long)tod.minutes().count(), (long long)tod.seconds().count());
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), (long long)tod.hours().count(),
                  (long long)tod.minutes().count(), (long long)tod.seconds().count(), ms);
  }
  return buf;
}

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  const double p1 = lat1 * kDegToRad;
  const double p2 = lat2 * kDegToRad;
  const double dp = (lat2 - lat1) * kDegToRad;
  const double dl = (lon2 - lon1) * kDegToRad;
  const double sp = std::sin(dp / 2.0);
  const double sl = std::sin(dl / 2.0);
  double a = sp * sp + std::cos(p1) * std::cos(p2) * sl * sl;
  if (a > 1.0) a = 1.0;
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(a));
}

double normalize_longitude(double lon) {
  double wrapped = std::fmod(lon, 360.0);
  if (wrapped <= -180.0) wrapped += 360.0;
  if (wrapped > 180.0) wrapped -= 360.0;
  return wrapped;
}

}  // namespace shiptrack
