#pragma once

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace bellcert {

/// Minimal ordered JSON value for report emission. Numbers are printed with
/// %.17g so seeded runs produce byte-identical files that round-trip
/// losslessly.
class JsonValue {
 public:
  using Object = std::vector<std::pair<std::string, JsonValue>>;
  using Array = std::vector<JsonValue>;

  JsonValue() : value_(nullptr) {}
  JsonValue(std::nullptr_t) : value_(nullptr) {}
  JsonValue(bool b) : value_(b) {}
  JsonValue(double d) : value_(d) {}
  JsonValue(int i) : value_(static_cast<double>(i)) {}
  JsonValue(long long i) : value_(static_cast<double>(i)) {}
  JsonValue(unsigned long long i) : value_(static_cast<double>(i)) {}
  JsonValue(const char* s) : value_(std::string(s)) {}
  JsonValue(std::string s) : value_(std::move(s)) {}
  JsonValue(Array a) : value_(std::move(a)) {}
  JsonValue(Object o) : value_(std::move(o)) {}

  static JsonValue object() { return JsonValue(Object{}); }
  static JsonValue array() { return JsonValue(Array{}); }

  JsonValue& set(const std::string& key, JsonValue v) {
    std::get<Object>(value_).emplace_back(key, std::move(v));
    return *this;
  }
  JsonValue& push(JsonValue v) {
    std::get<Array>(value_).push_back(std::move(v));
    return *this;
  }

  std::string dump(int indent = 0) const {
    std::string out;
    write(out, indent, 0);
    if (indent > 0) out.push_back('\n');
    return out;
  }

 private:
  std::variant<std::nullptr_t, bool, double, std::string, Array, Object> value_;

  static void escape(std::string& out, const std::string& s) {
    out.push_back('"');
    for (char c : s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out.push_back(c);
      }
    }
    out.push_back('"');
  }

  void write(std::string& out, int indent, int depth) const {
    const std::string pad(indent > 0 ? static_cast<std::size_t>(indent) * (depth + 1) : 0, ' ');
    const std::string closepad(indent > 0 ? static_cast<std::size_t>(indent) * depth : 0, ' ');
    const char* nl = indent > 0 ? "\n" : "";
    if (std::holds_alternative<std::nullptr_t>(value_)) {
      out += "null";
    } else if (std::holds_alternative<bool>(value_)) {
      out += std::get<bool>(value_) ? "true" : "false";
    } else if (std::holds_alternative<double>(value_)) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(value_));
      out += buf;
    } else if (std::holds_alternative<std::string>(value_)) {
      escape(out, std::get<std::string>(value_));
    } else if (std::holds_alternative<Array>(value_)) {
      const auto& arr = std::get<Array>(value_);
      if (arr.empty()) {
        out += "[]";
        return;
      }
      out += "[";
      out += nl;
      for (std::size_t i = 0; i < arr.size(); ++i) {
        out += pad;
        arr[i].write(out, indent, depth + 1);
        if (i + 1 < arr.size()) out += ",";
        out += nl;
      }
      out += closepad + "]";
    } else {
      const auto& obj = std::get<Object>(value_);
      if (obj.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += nl;
      for (std::size_t i = 0; i < obj.size(); ++i) {
        out += pad;
        escape(out, obj[i].first);
        out += indent > 0 ? ": " : ":";
        obj[i].second.write(out, indent, depth + 1);
        if (i + 1 < obj.size()) out += ",";
        out += nl;
      }
      out += closepad + "}";
    }
  }
};

}  // namespace bellcert
