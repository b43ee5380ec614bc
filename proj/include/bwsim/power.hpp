#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace bwsim::power {

struct OperatingPoint {
    std::string variant;  // e.g. "bin32"
    int n_ch = 32;
    double v_core = 1.2;
    double f_hz = 0;
    double p_core_active_w = 0;  // full SoP utilization, 7x7 mode
    double p_leak_w = 0;         // floor drawn when no SoP is busy
    double area_mge = 0;  // 0 when unknown
    std::string label;
    bool interpolated = false;
};

struct IoModel {
    double p_io_ref_w = 0.328;
    double f_ref_hz = 400e6;
    double p_io(double f_hz) const { return p_io_ref_w * f_hz / f_ref_hz; }
};

struct Calibration {
    std::vector<OperatingPoint> points;
    IoModel io;
    // p_leak = idle_fraction * p_core_active unless a point gives p_leak_mw
    double idle_fraction = 0.0;
    // core power of a native mode relative to 7x7 at equal utilization
    std::map<int, double> mode_ratio{{7, 1.0}};

    const OperatingPoint* find(const std::string& variant, double vdd) const;
    // Exact match, else log-linear interpolation in voltage between the two nearest
    // points of the variant (a warning is appended). Outside the range -> ConfigError.
    OperatingPoint lookup(const std::string& variant, double vdd,
                          std::vector<std::string>* warnings = nullptr) const;
    std::vector<OperatingPoint> variant_points(const std::string& variant) const;  // by descending vdd
    double mode_power_ratio(int native_kernel) const;
};

// Line records, '#' comments:
//   idle_fraction <x>
//   io p_ref_mw=<mW> f_ref_mhz=<MHz>
//   mode_ratio <native kernel> <ratio>
//   point variant=<name> n_ch=<n> vdd=<V> f_mhz=<MHz> p_core_mw=<mW>
//         [area_mge=<MGE>] [p_leak_mw=<mW>] [label=<word>]
Calibration parse_calibration(std::istream& is);
Calibration load_calibration(const std::string& path);

double core_power(const OperatingPoint& pt, double utilization, double mode_ratio = 1.0);
double device_power(const OperatingPoint& pt, const IoModel& io, double utilization,
                    double mode_ratio = 1.0);
// J; throughput in Op/s, power in W
double energy_per_frame(double ops, double throughput, double power_w);

}  // namespace bwsim::power
