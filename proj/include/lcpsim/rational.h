#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lcpsim {

/** Non-negative exact fraction used for thresholds, ratios and probabilities. */
struct Rational
{
    std::int64_t num = 0;
    std::int64_t den = 1;

    constexpr Rational() = default;
    constexpr Rational(std::int64_t n, std::int64_t d) : num(n), den(d)
    {
    }

    /** ceil(this * n). */
    std::int64_t
    ceilTimes(std::int64_t n) const
    {
        return (num * n + den - 1) / den;
    }

    /** True iff value >= this * n, evaluated without rounding. */
    bool
    reachedBy(std::int64_t value, std::int64_t n) const
    {
        return value * den >= num * n;
    }

    friend bool
    operator==(Rational const& a, Rational const& b)
    {
        return a.num * b.den == b.num * a.den;
    }

    friend bool
    operator<(Rational const& a, Rational const& b)
    {
        return a.num * b.den < b.num * a.den;
    }

    friend bool
    operator<=(Rational const& a, Rational const& b)
    {
        return !(b < a);
    }

    std::string
    str() const
    {
        if (den == 1)
            return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }

    /** Parses "a/b" or a plain integer. Throws std::invalid_argument. */
    static Rational
    parse(std::string_view text)
    {
        auto toInt = [&](std::string_view s) -> std::int64_t {
            if (s.empty())
                throw std::invalid_argument(
                    "malformed fraction '" + std::string(text) + "'");
            std::int64_t v = 0;
            for (char c : s)
            {
                if (c < '0' || c > '9')
                    throw std::invalid_argument(
                        "malformed fraction '" + std::string(text) + "'");
                v = v * 10 + (c - '0');
                if (v > (std::int64_t{1} << 40))
                    throw std::invalid_argument(
                        "fraction out of range '" + std::string(text) + "'");
            }
            return v;
        };
        auto const slash = text.find('/');
        if (slash == std::string_view::npos)
            return {toInt(text), 1};
        auto const d = toInt(text.substr(slash + 1));
        if (d == 0)
            throw std::invalid_argument(
                "zero denominator in '" + std::string(text) + "'");
        return {toInt(text.substr(0, slash)), d};
    }
};

}  // namespace lcpsim
