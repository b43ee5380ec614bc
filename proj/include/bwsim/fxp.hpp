#pragma once

#include <cstdint>
#include <string>

namespace bwsim::fxp {

struct QFormat {
    int int_bits = 0;
    int frac_bits = 0;

    constexpr int width() const { return 1 + int_bits + frac_bits; }
    constexpr std::int64_t raw_max() const { return (std::int64_t{1} << (width() - 1)) - 1; }
    constexpr std::int64_t raw_min() const { return -(std::int64_t{1} << (width() - 1)); }
    constexpr bool operator==(const QFormat&) const = default;

    std::string name() const;  // "Q2.9"
    static QFormat parse(const std::string& s);
};

inline constexpr QFormat kQ2_9{2, 9};
inline constexpr QFormat kQ7_9{7, 9};
inline constexpr QFormat kQ10_18{10, 18};

enum class Rounding { truncate, nearest };

class FxSample {
public:
    FxSample() = default;
    // throws std::out_of_range if raw does not fit fmt
    FxSample(std::int64_t raw, QFormat fmt);

    std::int64_t raw() const { return raw_; }
    QFormat format() const { return fmt_; }
    double to_real() const;

    bool operator==(const FxSample&) const = default;

private:
    std::int64_t raw_ = 0;
    QFormat fmt_ = kQ2_9;
};

// Saturation never throws; each clamp bumps *saturations when given.
std::int64_t saturate_raw(std::int64_t raw, QFormat fmt, std::uint64_t* saturations = nullptr);

FxSample quantize(double value, QFormat fmt, Rounding mode = Rounding::truncate,
                  std::uint64_t* saturations = nullptr);

// Exact. Result is Q(a.int + b.int + 1).(a.frac + b.frac).
FxSample mul_qq(FxSample a, FxSample b);

// Arithmetic right shift to target.frac_bits, then clamp.
FxSample saturate_truncate(FxSample a, QFormat target, std::uint64_t* saturations = nullptr);

// Lossless move to a format with at least as many frac bits; clamps on int overflow.
FxSample align(FxSample a, QFormat target, std::uint64_t* saturations = nullptr);

// Both operands must share a format; result saturates in that format.
FxSample add_sat(FxSample a, FxSample b, std::uint64_t* saturations = nullptr);

inline double to_real(FxSample s) { return s.to_real(); }

}  // namespace bwsim::fxp
