#include "bwsim/fxp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bwsim::fxp {

std::string QFormat::name() const {
    return "Q" + std::to_string(int_bits) + "." + std::to_string(frac_bits);
}

QFormat QFormat::parse(const std::string& s) {
    auto dot = s.find('.');
    if (s.size() < 4 || (s[0] != 'Q' && s[0] != 'q') || dot == std::string::npos)
        throw std::invalid_argument("bad Q-format '" + s + "'");
    QFormat f;
    try {
        std::size_t n1 = 0, n2 = 0;
        f.int_bits = std::stoi(s.substr(1, dot - 1), &n1);
        f.frac_bits = std::stoi(s.substr(dot + 1), &n2);
        if (n1 != dot - 1 || n2 != s.size() - dot - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw std::invalid_argument("bad Q-format '" + s + "'");
    }
    if (f.int_bits < 0 || f.frac_bits < 0 || f.width() > 62)
        throw std::invalid_argument("bad Q-format '" + s + "'");
    return f;
}

FxSample::FxSample(std::int64_t raw, QFormat fmt) : raw_(raw), fmt_(fmt) {
    if (raw < fmt.raw_min() || raw > fmt.raw_max())
        throw std::out_of_range("raw " + std::to_string(raw) + " outside " + fmt.name());
}

double FxSample::to_real() const { return std::ldexp(static_cast<double>(raw_), -fmt_.frac_bits); }

std::int64_t saturate_raw(std::int64_t raw, QFormat fmt, std::uint64_t* saturations) {
    if (raw > fmt.raw_max()) {
        if (saturations) ++*saturations;
        return fmt.raw_max();
    }
    if (raw < fmt.raw_min()) {
        if (saturations) ++*saturations;
        return fmt.raw_min();
    }
    return raw;
}

FxSample quantize(double value, QFormat fmt, Rounding mode, std::uint64_t* saturations) {
    if (!std::isfinite(value)) throw std::invalid_argument("quantize: non-finite value");
    double scaled = std::ldexp(value, fmt.frac_bits);
    // ties round up, i.e. toward +inf
    double r = mode == Rounding::truncate ? std::floor(scaled) : std::floor(scaled + 0.5);
    std::int64_t raw;
    if (r >= static_cast<double>(fmt.raw_max())) {
        raw = r > static_cast<double>(fmt.raw_max()) ? fmt.raw_max() + 1 : fmt.raw_max();
    } else if (r <= static_cast<double>(fmt.raw_min())) {
        raw = r < static_cast<double>(fmt.raw_min()) ? fmt.raw_min() - 1 : fmt.raw_min();
    } else {
        raw = static_cast<std::int64_t>(r);
    }
    return {saturate_raw(raw, fmt, saturations), fmt};
}

FxSample mul_qq(FxSample a, FxSample b) {
    QFormat out{a.format().int_bits + b.format().int_bits + 1,
                a.format().frac_bits + b.format().frac_bits};
    if (out.width() > 62) throw std::invalid_argument("mul_qq: result wider than 62 bits");
    return {a.raw() * b.raw(), out};
}

FxSample saturate_truncate(FxSample a, QFormat target, std::uint64_t* saturations) {
    int drop = a.format().frac_bits - target.frac_bits;
    if (drop < 0) throw std::invalid_argument("saturate_truncate: target has more frac bits");
    std::int64_t shifted = a.raw() >> drop;  // arithmetic shift, floors negatives
    return {saturate_raw(shifted, target, saturations), target};
}

FxSample align(FxSample a, QFormat target, std::uint64_t* saturations) {
    int up = target.frac_bits - a.format().frac_bits;
    if (up < 0) throw std::invalid_argument("align: target has fewer frac bits");
    return {saturate_raw(a.raw() * (std::int64_t{1} << up), target, saturations), target};
}

FxSample add_sat(FxSample a, FxSample b, std::uint64_t* saturations) {
    if (a.format() != b.format()) throw std::invalid_argument("add_sat: format mismatch");
    return {saturate_raw(a.raw() + b.raw(), a.format(), saturations), a.format()};
}

}  // namespace bwsim::fxp
