#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace selfsim {

/// 17 significant digits: enough to round-trip any double, and byte-stable
/// for the determinism contract of the CLI outputs.
inline std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

/// Minimal ordered JSON object writer. Fields appear exactly in emission
/// order; numbers use fmt17.
class JsonObjectWriter {
 public:
  explicit JsonObjectWriter(std::ostream& out) : out_(out) { out_ << '{'; }

  JsonObjectWriter& field(std::string_view key, double value) {
    sep();
    quote(key);
    out_ << ':' << fmt17(value);
    return *this;
  }
  JsonObjectWriter& field(std::string_view key, std::int64_t value) {
    sep();
    quote(key);
    out_ << ':' << value;
    return *this;
  }
  JsonObjectWriter& field(std::string_view key, int value) {
    return field(key, static_cast<std::int64_t>(value));
  }
  JsonObjectWriter& field(std::string_view key, std::string_view value) {
    sep();
    quote(key);
    out_ << ':';
    quote(value);
    return *this;
  }
  JsonObjectWriter& field_bool(std::string_view key, bool value) {
    sep();
    quote(key);
    out_ << ':' << (value ? "true" : "false");
    return *this;
  }
  JsonObjectWriter& field_array(std::string_view key, std::span<const double> values) {
    sep();
    quote(key);
    out_ << ":[";
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << fmt17(values[i]);
    }
    out_ << ']';
    return *this;
  }
  JsonObjectWriter& field_array(std::string_view key, std::span<const std::int64_t> values) {
    sep();
    quote(key);
    out_ << ":[";
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << values[i];
    }
    out_ << ']';
    return *this;
  }

  void close() { out_ << "}\n"; }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  void quote(std::string_view s) {
    out_ << '"';
    for (char c : s) {
      if (c == '"' || c == '\\') out_ << '\\';
      out_ << c;
    }
    out_ << '"';
  }

  std::ostream& out_;
  bool first_ = true;
};

}  // namespace selfsim
