#include "paramsynth/rational.hpp"

#include <charconv>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace paramsynth {

namespace {

using boost::multiprecision::cpp_int;

bool all_digits(std::string_view s) {
    if (s.empty())
        return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            return false;
    return true;
}

/// Leading zeros would select octal in cpp_int's string constructor.
cpp_int from_digits(std::string_view digits) {
    auto first = digits.find_first_not_of('0');
    if (first == std::string_view::npos)
        return 0;
    return cpp_int(std::string(digits.substr(first)));
}

std::optional<cpp_int> parse_integer(std::string_view s) {
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    if (!all_digits(s))
        return std::nullopt;
    cpp_int value = from_digits(s);
    return negative ? cpp_int(-value) : value;
}

cpp_int pow10(unsigned exponent) {
    cpp_int r = 1;
    for (unsigned i = 0; i < exponent; ++i)
        r *= 10;
    return r;
}

} // namespace

std::optional<Rational> parse_rational(std::string_view text) {
    if (text.empty())
        return std::nullopt;

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        auto num = parse_integer(text.substr(0, slash));
        auto den_text = text.substr(slash + 1);
        if (!num || !all_digits(den_text))
            return std::nullopt;
        cpp_int den = from_digits(den_text);
        if (den == 0)
            return std::nullopt;
        return Rational(*num, den);
    }

    bool negative = false;
    if (text.front() == '-' || text.front() == '+') {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }

    long exponent = 0;
    if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
        auto exp_text = text.substr(e + 1);
        auto exp_value = parse_integer(exp_text);
        if (!exp_value || abs(*exp_value) > 4096)
            return std::nullopt;
        exponent = exp_value->convert_to<long>();
        text = text.substr(0, e);
    }

    std::string_view int_part = text;
    std::string_view frac_part;
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        int_part = text.substr(0, dot);
        frac_part = text.substr(dot + 1);
        if (!frac_part.empty() && !all_digits(frac_part))
            return std::nullopt;
    }
    if (int_part.empty() && frac_part.empty())
        return std::nullopt;
    if (!int_part.empty() && !all_digits(int_part))
        return std::nullopt;

    std::string digits = std::string(int_part) + std::string(frac_part);
    cpp_int mantissa = from_digits(digits);
    exponent -= static_cast<long>(frac_part.size());

    Rational value = exponent >= 0 ? Rational(mantissa * pow10(static_cast<unsigned>(exponent)))
                                   : Rational(mantissa, pow10(static_cast<unsigned>(-exponent)));
    return negative ? Rational(-value) : value;
}

std::string to_string(const Rational& value) {
    if (denominator(value) == 1)
        return numerator(value).str();
    return numerator(value).str() + "/" + denominator(value).str();
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

Rational from_double(double value) {
    if (!std::isfinite(value))
        throw std::invalid_argument("cannot convert non-finite double to rational");
    return Rational(value);
}

std::string format_decimal(double value) {
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc{})
        throw std::runtime_error("decimal formatting failed");
    return std::string(buffer, end);
}

Rational decimal_rational(double value) {
    auto parsed = parse_rational(format_decimal(value));
    if (!parsed)
        throw std::invalid_argument("value has no finite decimal form");
    return *parsed;
}

} // namespace paramsynth
