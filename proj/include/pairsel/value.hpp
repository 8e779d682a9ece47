#pragma once

/// Neutral encoding of program inputs and outputs: a small tree of Python-style
/// literals, with a parser, a canonical printer, and the structural equality
/// used for clustering. The canonical text form is repr()-compatible so that
/// values round-trip through the Python execution harness unchanged.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "pairsel/errors.hpp"

namespace pairsel {

using BigInt = boost::multiprecision::cpp_int;

enum class ValueKind { Null, Bool, Int, Float, Str, List, Tuple, Map, Raw };

class Value {
public:
    struct MapEntry;
    using Items = std::vector<Value>;
    using MapEntries = std::vector<MapEntry>;

    Value() : kind_(ValueKind::Null) {}

    static Value null() { return Value(); }
    static Value boolean(bool b) { return Value(ValueKind::Bool, b); }
    static Value integer(BigInt v) { return Value(ValueKind::Int, std::move(v)); }
    static Value integer(long long v) { return Value(ValueKind::Int, BigInt(v)); }
    static Value real(double v) { return Value(ValueKind::Float, v); }
    static Value str(std::string s) { return Value(ValueKind::Str, std::move(s)); }
    static Value raw(std::string bytes) { return Value(ValueKind::Raw, std::move(bytes)); }
    static Value list(Items items) { return Value(ValueKind::List, std::move(items)); }
    static Value tuple(Items items) { return Value(ValueKind::Tuple, std::move(items)); }
    static Value map(MapEntries entries);

    ValueKind kind() const { return kind_; }
    bool is_scalar() const {
        return kind_ == ValueKind::Null || kind_ == ValueKind::Bool || kind_ == ValueKind::Int ||
               kind_ == ValueKind::Float || kind_ == ValueKind::Str;
    }

    bool as_bool() const { return std::get<bool>(data_); }
    const BigInt& as_int() const { return std::get<BigInt>(data_); }
    double as_float() const { return std::get<double>(data_); }
    const std::string& as_str() const { return std::get<std::string>(data_); }
    const std::string& raw_bytes() const { return std::get<std::string>(data_); }
    const Items& items() const { return std::get<Items>(data_); }
    const MapEntries& entries() const { return std::get<MapEntries>(data_); }

    friend bool operator==(const Value& a, const Value& b);
    friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

private:
    template <typename T>
    Value(ValueKind kind, T&& payload) : kind_(kind), data_(std::forward<T>(payload)) {}

    ValueKind kind_;
    std::variant<std::monostate, bool, BigInt, double, std::string, Items, MapEntries> data_;
};

struct Value::MapEntry {
    Value key;
    Value value;
};

inline Value Value::map(MapEntries entries) {
    for (const auto& e : entries) {
        if (!e.key.is_scalar())
            throw DomainError("map keys must be scalar");
    }
    return Value(ValueKind::Map, std::move(entries));
}

// Strict structural identity (kind-sensitive; Int(5) != Float(5.0), Tuple != List).
// NaN compares equal to NaN so identity is reflexive.
inline bool operator==(const Value& a, const Value& b) {
    if (a.kind_ != b.kind_)
        return false;
    switch (a.kind_) {
    case ValueKind::Null:
        return true;
    case ValueKind::Bool:
        return a.as_bool() == b.as_bool();
    case ValueKind::Int:
        return a.as_int() == b.as_int();
    case ValueKind::Float: {
        double x = a.as_float(), y = b.as_float();
        if (std::isnan(x) || std::isnan(y))
            return std::isnan(x) && std::isnan(y);
        return x == y;
    }
    case ValueKind::Str:
    case ValueKind::Raw:
        return std::get<std::string>(a.data_) == std::get<std::string>(b.data_);
    case ValueKind::List:
    case ValueKind::Tuple: {
        const auto& xs = a.items();
        const auto& ys = b.items();
        if (xs.size() != ys.size())
            return false;
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (!(xs[i] == ys[i]))
                return false;
        return true;
    }
    case ValueKind::Map: {
        const auto& xs = a.entries();
        const auto& ys = b.entries();
        if (xs.size() != ys.size())
            return false;
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (!(xs[i].key == ys[i].key) || !(xs[i].value == ys[i].value))
                return false;
        return true;
    }
    }
    return false;
}

namespace detail {

inline BigInt binomial(int n, int k) {
    if (k < 0 || k > n)
        return 0;
    k = std::min(k, n - k);
    BigInt num = 1, den = 1;
    for (int i = 0; i < k; ++i) {
        num *= n - i;
        den *= i + 1;
    }
    return num / den;
}

inline void append_escaped(std::string& out, std::string_view s) {
    static const char* hex = "0123456789abcdef";
    for (unsigned char c : s) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '\'': out += "\\'"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (c < 0x20) {
                out += "\\x";
                out += hex[c >> 4];
                out += hex[c & 0xf];
            } else {
                out += static_cast<char>(c);
            }
        }
    }
}

inline std::string format_double(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v < 0 ? "-inf" : "inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v); // shortest round-trip
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eE") == std::string::npos)
        s += ".0"; // keep floats distinguishable from ints when re-parsed
    return s;
}

} // namespace detail

// Canonical text rendering: the inverse of parse_value_literal and the exact
// text used inside oracle prompts and reports. Raw renders verbatim.
inline std::string render(const Value& v) {
    std::string out;
    switch (v.kind()) {
    case ValueKind::Null:
        return "None";
    case ValueKind::Bool:
        return v.as_bool() ? "True" : "False";
    case ValueKind::Int:
        return v.as_int().str();
    case ValueKind::Float:
        return detail::format_double(v.as_float());
    case ValueKind::Str:
        out += '\'';
        detail::append_escaped(out, v.as_str());
        out += '\'';
        return out;
    case ValueKind::Raw:
        return v.raw_bytes();
    case ValueKind::List:
    case ValueKind::Tuple: {
        const bool tup = v.kind() == ValueKind::Tuple;
        out += tup ? '(' : '[';
        const auto& xs = v.items();
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (i)
                out += ", ";
            out += render(xs[i]);
        }
        if (tup && xs.size() == 1)
            out += ','; // one-tuple
        out += tup ? ')' : ']';
        return out;
    }
    case ValueKind::Map: {
        out += '{';
        const auto& es = v.entries();
        for (std::size_t i = 0; i < es.size(); ++i) {
            if (i)
                out += ", ";
            out += render(es[i].key);
            out += ": ";
            out += render(es[i].value);
        }
        out += '}';
        return out;
    }
    }
    return out;
}

namespace detail {

class LiteralParser {
public:
    explicit LiteralParser(std::string_view text) : s_(text) {}

    Value parse_complete() {
        Value v = parse_value();
        skip_ws();
        if (pos_ != s_.size())
            fail("end of input");
        return v;
    }

    // Parses one literal starting at `pos`; returns it and advances `pos`
    // past the literal (used by the name=value reply grammar).
    Value parse_prefix(std::size_t& pos) {
        pos_ = pos;
        Value v = parse_value();
        pos = pos_;
        return v;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
    int depth_ = 0;

    [[noreturn]] void fail(const std::string& expected) { throw ParseError(pos_, expected); }

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' ||
                                    s_[pos_] == '\r'))
            ++pos_;
    }

    bool at_end() const { return pos_ >= s_.size(); }
    char peek() const { return s_[pos_]; }

    bool match_word(std::string_view w) {
        if (s_.substr(pos_, w.size()) != w)
            return false;
        std::size_t after = pos_ + w.size();
        if (after < s_.size()) {
            char c = s_[after];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_')
                return false;
        }
        pos_ = after;
        return true;
    }

    bool match_word_ci(std::string_view w) {
        if (pos_ + w.size() > s_.size())
            return false;
        for (std::size_t i = 0; i < w.size(); ++i)
            if (std::tolower(static_cast<unsigned char>(s_[pos_ + i])) != w[i])
                return false;
        std::size_t after = pos_ + w.size();
        if (after < s_.size()) {
            char c = s_[after];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_')
                return false;
        }
        pos_ = after;
        return true;
    }

    Value parse_value() {
        skip_ws();
        if (at_end())
            fail("a value literal");
        if (++depth_ > 128)
            fail("literal nesting below depth limit");
        Value v = parse_value_inner();
        --depth_;
        return v;
    }

    Value parse_value_inner() {
        char c = peek();
        if (c == '\'' || c == '"')
            return parse_string();
        if (c == '[')
            return parse_sequence(']');
        if (c == '(')
            return parse_paren();
        if (c == '{')
            return parse_map();
        if (match_word("None") || match_word("null"))
            return Value::null();
        if (match_word("True") || match_word("true"))
            return Value::boolean(true);
        if (match_word("False") || match_word("false"))
            return Value::boolean(false);
        if (c == '+' || c == '-' || c == '.' || std::isdigit(static_cast<unsigned char>(c)) ||
            std::isalpha(static_cast<unsigned char>(c)))
            return parse_number();
        fail("a value literal");
    }

    Value parse_number() {
        std::size_t start = pos_;
        bool neg = false;
        if (peek() == '+' || peek() == '-') {
            neg = peek() == '-';
            ++pos_;
        }
        if (!at_end() && std::isalpha(static_cast<unsigned char>(peek()))) {
            if (match_word_ci("inf") || match_word_ci("infinity"))
                return Value::real(neg ? -std::numeric_limits<double>::infinity()
                                       : std::numeric_limits<double>::infinity());
            if (match_word_ci("nan"))
                return Value::real(std::numeric_limits<double>::quiet_NaN());
            pos_ = start;
            fail("a number");
        }
        std::size_t digits_start = pos_;
        bool has_dot = false, has_exp = false;
        while (!at_end()) {
            char c = peek();
            if (std::isdigit(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '.' && !has_dot && !has_exp) {
                has_dot = true;
                ++pos_;
            } else if ((c == 'e' || c == 'E') && !has_exp && pos_ > digits_start) {
                has_exp = true;
                ++pos_;
                if (!at_end() && (peek() == '+' || peek() == '-'))
                    ++pos_;
            } else {
                break;
            }
        }
        std::string_view tok = s_.substr(start, pos_ - start);
        std::string_view body = s_.substr(digits_start, pos_ - digits_start);
        if (body.empty() || body == ".") {
            pos_ = start;
            fail("a number");
        }
        if (!has_dot && !has_exp) {
            std::string t(tok);
            if (!t.empty() && t.front() == '+')
                t.erase(t.begin());
            try {
                return Value::integer(BigInt(t));
            } catch (const std::exception&) {
                pos_ = start;
                fail("an integer");
            }
        }
        double d = 0;
        std::string t(tok);
        if (!t.empty() && t.front() == '+')
            t.erase(t.begin());
        auto res = std::from_chars(t.data(), t.data() + t.size(), d);
        if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
            pos_ = start;
            fail("a floating-point number");
        }
        return Value::real(d);
    }

    unsigned hex_digit(char c) {
        if (c >= '0' && c <= '9')
            return static_cast<unsigned>(c - '0');
        if (c >= 'a' && c <= 'f')
            return static_cast<unsigned>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F')
            return static_cast<unsigned>(c - 'A' + 10);
        fail("a hex digit");
    }

    void append_codepoint(std::string& out, unsigned cp) {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xc0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3f));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xe0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
            out += static_cast<char>(0x80 | (cp & 0x3f));
        } else {
            out += static_cast<char>(0xf0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
            out += static_cast<char>(0x80 | (cp & 0x3f));
        }
    }

    Value parse_string() {
        char quote = peek();
        ++pos_;
        std::string out;
        while (true) {
            if (at_end())
                fail("closing quote");
            char c = s_[pos_++];
            if (c == quote)
                break;
            if (c != '\\') {
                out += c;
                continue;
            }
            if (at_end())
                fail("an escape sequence");
            char e = s_[pos_++];
            switch (e) {
            case '\\': out += '\\'; break;
            case '\'': out += '\''; break;
            case '"': out += '"'; break;
            case 'n': out += '\n'; break;
            case 'r': out += '\r'; break;
            case 't': out += '\t'; break;
            case '0': out += '\0'; break;
            case 'a': out += '\a'; break;
            case 'b': out += '\b'; break;
            case 'f': out += '\f'; break;
            case 'v': out += '\v'; break;
            case 'x': {
                if (pos_ + 2 > s_.size())
                    fail("two hex digits");
                unsigned v = hex_digit(s_[pos_]) * 16 + hex_digit(s_[pos_ + 1]);
                pos_ += 2;
                out += static_cast<char>(v);
                break;
            }
            case 'u': {
                if (pos_ + 4 > s_.size())
                    fail("four hex digits");
                unsigned v = 0;
                for (int i = 0; i < 4; ++i)
                    v = v * 16 + hex_digit(s_[pos_ + static_cast<std::size_t>(i)]);
                pos_ += 4;
                append_codepoint(out, v);
                break;
            }
            default:
                --pos_;
                fail("a valid escape sequence");
            }
        }
        return Value::str(std::move(out));
    }

    Value parse_sequence(char close) {
        ++pos_; // '['
        Value::Items items;
        skip_ws();
        if (!at_end() && peek() == close) {
            ++pos_;
            return Value::list(std::move(items));
        }
        while (true) {
            items.push_back(parse_value());
            skip_ws();
            if (at_end())
                fail("',' or ']'");
            if (peek() == ',') {
                ++pos_;
                skip_ws();
                if (!at_end() && peek() == close) { // trailing comma
                    ++pos_;
                    return Value::list(std::move(items));
                }
                continue;
            }
            if (peek() == close) {
                ++pos_;
                return Value::list(std::move(items));
            }
            fail("',' or ']'");
        }
    }

    // Python semantics: "()" is the empty tuple, "(x)" is just x, a comma
    // makes a tuple.
    Value parse_paren() {
        ++pos_; // '('
        skip_ws();
        if (!at_end() && peek() == ')') {
            ++pos_;
            return Value::tuple({});
        }
        Value::Items items;
        items.push_back(parse_value());
        skip_ws();
        bool saw_comma = false;
        while (true) {
            if (at_end())
                fail("',' or ')'");
            if (peek() == ')') {
                ++pos_;
                break;
            }
            if (peek() != ',')
                fail("',' or ')'");
            saw_comma = true;
            ++pos_;
            skip_ws();
            if (!at_end() && peek() == ')') {
                ++pos_;
                break;
            }
            items.push_back(parse_value());
            skip_ws();
        }
        if (!saw_comma)
            return std::move(items.front());
        return Value::tuple(std::move(items));
    }

    Value parse_map() {
        ++pos_; // '{'
        Value::MapEntries entries;
        skip_ws();
        if (!at_end() && peek() == '}') {
            ++pos_;
            return Value::map(std::move(entries));
        }
        while (true) {
            Value key = parse_value();
            if (!key.is_scalar())
                fail("a scalar map key");
            skip_ws();
            if (at_end() || peek() != ':')
                fail("':'");
            ++pos_;
            Value val = parse_value();
            entries.push_back({std::move(key), std::move(val)});
            skip_ws();
            if (at_end())
                fail("',' or '}'");
            if (peek() == ',') {
                ++pos_;
                skip_ws();
                if (!at_end() && peek() == '}') {
                    ++pos_;
                    return Value::map(std::move(entries));
                }
                continue;
            }
            if (peek() == '}') {
                ++pos_;
                return Value::map(std::move(entries));
            }
            fail("',' or '}'");
        }
    }
};

} // namespace detail

// Parses a single literal: number, quoted string, boolean, None/null, or a
// bracketed list/tuple/dict of literals. Whitespace-insensitive outside quotes.
inline Value parse_value_literal(std::string_view text) {
    return detail::LiteralParser(text).parse_complete();
}

namespace detail {

// Per-line trailing-whitespace strip; trailing blank lines are dropped so a
// final newline does not split clusters.
inline std::vector<std::string_view> normalized_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        std::string_view line = nl == std::string_view::npos ? text.substr(start)
                                                             : text.substr(start, nl - start);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
            line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos)
            break;
        start = nl + 1;
    }
    while (!lines.empty() && lines.back().empty())
        lines.pop_back();
    return lines;
}

} // namespace detail

inline constexpr double kFloatEqualityTolerance = 1e-6;

// Output equality for clustering: numeric Int/Float compare within an absolute
// tolerance, Tuple and List of equal contents are equal, Map is
// order-insensitive, Raw is byte-exact after per-line trailing-whitespace
// strip. Reflexive and symmetric, not transitive across the float tolerance.
inline bool value_equal(const Value& a, const Value& b) {
    const ValueKind ka = a.kind(), kb = b.kind();
    const bool a_num = ka == ValueKind::Int || ka == ValueKind::Float;
    const bool b_num = kb == ValueKind::Int || kb == ValueKind::Float;
    if (a_num && b_num) {
        if (ka == ValueKind::Int && kb == ValueKind::Int)
            return a.as_int() == b.as_int();
        double x = ka == ValueKind::Int ? a.as_int().convert_to<double>() : a.as_float();
        double y = kb == ValueKind::Int ? b.as_int().convert_to<double>() : b.as_float();
        if (std::isnan(x) || std::isnan(y))
            return std::isnan(x) && std::isnan(y);
        if (std::isinf(x) || std::isinf(y))
            return x == y;
        return std::fabs(x - y) <= kFloatEqualityTolerance;
    }
    const bool a_seq = ka == ValueKind::List || ka == ValueKind::Tuple;
    const bool b_seq = kb == ValueKind::List || kb == ValueKind::Tuple;
    if (a_seq && b_seq) {
        const auto& xs = a.items();
        const auto& ys = b.items();
        if (xs.size() != ys.size())
            return false;
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (!value_equal(xs[i], ys[i]))
                return false;
        return true;
    }
    if (ka != kb)
        return false;
    switch (ka) {
    case ValueKind::Null:
        return true;
    case ValueKind::Bool:
        return a.as_bool() == b.as_bool();
    case ValueKind::Str:
        return a.as_str() == b.as_str();
    case ValueKind::Raw:
        return detail::normalized_lines(a.raw_bytes()) == detail::normalized_lines(b.raw_bytes());
    case ValueKind::Map: {
        const auto& xs = a.entries();
        const auto& ys = b.entries();
        if (xs.size() != ys.size())
            return false;
        std::vector<bool> used(ys.size(), false);
        for (const auto& ex : xs) {
            bool found = false;
            for (std::size_t j = 0; j < ys.size(); ++j) {
                if (used[j])
                    continue;
                if (value_equal(ex.key, ys[j].key) && value_equal(ex.value, ys[j].value)) {
                    used[j] = true;
                    found = true;
                    break;
                }
            }
            if (!found)
                return false;
        }
        return true;
    }
    default:
        return false;
    }
}

} // namespace pairsel
