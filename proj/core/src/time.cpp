#include "foresight/time.hpp"

#include <cctype>
#include <cstdio>

#include "foresight/errors.hpp"

namespace foresight {
namespace {

int read_digits(std::string_view text, std::size_t& pos, std::size_t count) {
  if (pos + count > text.size()) throw ParseError("truncated timestamp: " + std::string(text));
  int value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = text[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw ParseError("bad digit in timestamp: " + std::string(text));
    value = value * 10 + (c - '0');
  }
  pos += count;
  return value;
}

void expect(std::string_view text, std::size_t& pos, char c) {
  if (pos >= text.size() || text[pos] != c)
    throw ParseError("malformed timestamp: " + std::string(text));
  ++pos;
}

}  // namespace

Instant parse_rfc3339(std::string_view text) {
  using namespace std::chrono;
  std::size_t pos = 0;
  const int y = read_digits(text, pos, 4);
  expect(text, pos, '-');
  const int mo = read_digits(text, pos, 2);
  expect(text, pos, '-');
  const int d = read_digits(text, pos, 2);
  if (pos >= text.size() || (text[pos] != 'T' && text[pos] != 't' && text[pos] != ' '))
    throw ParseError("malformed timestamp: " + std::string(text));
  ++pos;
  const int hh = read_digits(text, pos, 2);
  expect(text, pos, ':');
  const int mm = read_digits(text, pos, 2);
  expect(text, pos, ':');
  const int ss = read_digits(text, pos, 2);
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) throw ParseError("empty fraction in timestamp: " + std::string(text));
  }
  int offset_seconds = 0;
  if (pos >= text.size()) throw ParseError("timestamp lacks UTC offset: " + std::string(text));
  if (text[pos] == 'Z' || text[pos] == 'z') {
    ++pos;
  } else if (text[pos] == '+' || text[pos] == '-') {
    const int sign = text[pos] == '-' ? -1 : 1;
    ++pos;
    const int oh = read_digits(text, pos, 2);
    expect(text, pos, ':');
    const int om = read_digits(text, pos, 2);
    offset_seconds = sign * (oh * 3600 + om * 60);
  } else {
    throw ParseError("malformed UTC offset: " + std::string(text));
  }
  if (pos != text.size()) throw ParseError("trailing characters in timestamp: " + std::string(text));

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60)
    throw ParseError("out-of-range timestamp: " + std::string(text));
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss} - seconds{offset_seconds};
}

std::string format_rfc3339(Instant t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss<seconds> tod{t - day_start};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

}  // namespace foresight
