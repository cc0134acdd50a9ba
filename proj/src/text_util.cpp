#include "qrec/text_util.hpp"

#include <algorithm>
#include <cctype>

namespace qrec {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::tolower(x) == std::tolower(y);
         });
}

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string default_display_text(std::string_view identifier) {
  std::string out = to_lower(identifier);
  std::replace(out.begin(), out.end(), '_', ' ');
  return trim(out);
}

namespace {

bool digits(std::string_view s, std::size_t pos, std::size_t n, int& value) {
  if (pos + n > s.size()) return false;
  value = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    value = value * 10 + (s[i] - '0');
  }
  return true;
}

int days_in_month(int year, int month) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  return month == 2 && leap ? 29 : kDays[month - 1];
}

}  // namespace

bool parse_iso8601(std::string_view s) {
  int year = 0, month = 0, day = 0;
  if (s.size() < 10 || !digits(s, 0, 4, year) || s[4] != '-' || !digits(s, 5, 2, month) ||
      s[7] != '-' || !digits(s, 8, 2, day)) {
    return false;
  }
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) return false;
  if (s.size() == 10) return true;

  if (s[10] != 'T' && s[10] != ' ') return false;
  int hour = 0, minute = 0, second = 0;
  if (!digits(s, 11, 2, hour) || s.size() < 16 || s[13] != ':' || !digits(s, 14, 2, minute)) {
    return false;
  }
  if (hour > 23 || minute > 59) return false;
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    if (!digits(s, pos + 1, 2, second) || second > 60) return false;
    pos += 3;
    if (pos < s.size() && s[pos] == '.') {
      std::size_t start = ++pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      if (pos == start) return false;
    }
  }
  if (pos == s.size()) return true;
  if (s[pos] == 'Z') return pos + 1 == s.size();
  if (s[pos] == '+' || s[pos] == '-') {
    int oh = 0, om = 0;
    if (!digits(s, pos + 1, 2, oh) || oh > 23) return false;
    if (pos + 3 == s.size()) return true;
    std::size_t mpos = s[pos + 3] == ':' ? pos + 4 : pos + 3;
    return digits(s, mpos, 2, om) && om <= 59 && mpos + 2 == s.size();
  }
  return false;
}

std::string pluralize_last_word(std::string_view phrase) {
  std::string out(phrase);
  if (out.empty()) return out;
  auto ends_with = [&](std::string_view suffix) {
    return out.size() >= suffix.size() &&
           out.compare(out.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  char last = static_cast<char>(std::tolower(static_cast<unsigned char>(out.back())));
  if (!std::isalpha(static_cast<unsigned char>(last)) || last == 's') return out;
  // "directed by" stays as is; the phrase does not end in a noun.
  auto space = out.find_last_of(' ');
  std::string tail = to_lower(space == std::string::npos ? out : out.substr(space + 1));
  for (std::string_view word : {"by", "of", "to", "from", "in", "on", "at", "per", "for", "with"}) {
    if (tail == word) return out;
  }
  if (ends_with("x") || ends_with("z") || ends_with("ch") || ends_with("sh")) return out + "es";
  if (last == 'y' && out.size() >= 2 &&
      std::string_view("aeiou").find(static_cast<char>(std::tolower(
          static_cast<unsigned char>(out[out.size() - 2])))) == std::string_view::npos) {
    out.pop_back();
    return out + "ies";
  }
  return out + "s";
}

}  // namespace qrec
