#include "bwsim/power.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bwsim/types.hpp"

namespace bwsim::power {

namespace {

constexpr double kVddTol = 1e-9;

double to_double(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used == s.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("bad number '" + s + "' for " + key);
}

std::map<std::string, std::string> key_values(const std::vector<std::string>& toks, std::size_t from,
                                              int lineno) {
    std::map<std::string, std::string> kv;
    for (std::size_t i = from; i < toks.size(); ++i) {
        auto eq = toks[i].find('=');
        if (eq == std::string::npos || eq == 0)
            throw ParseError("line " + std::to_string(lineno) + ": expected key=value, got '" + toks[i] + "'");
        kv[toks[i].substr(0, eq)] = toks[i].substr(eq + 1);
    }
    return kv;
}

std::string take(std::map<std::string, std::string>& kv, const std::string& key, int lineno) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("line " + std::to_string(lineno) + ": missing " + key);
    auto v = it->second;
    kv.erase(it);
    return v;
}

}  // namespace

const OperatingPoint* Calibration::find(const std::string& variant, double vdd) const {
    for (const auto& p : points)
        if (p.variant == variant && std::abs(p.v_core - vdd) < kVddTol) return &p;
    return nullptr;
}

std::vector<OperatingPoint> Calibration::variant_points(const std::string& variant) const {
    std::vector<OperatingPoint> v;
    for (const auto& p : points)
        if (p.variant == variant) v.push_back(p);
    std::stable_sort(v.begin(), v.end(),
                     [](const OperatingPoint& a, const OperatingPoint& b) { return a.v_core > b.v_core; });
    return v;
}

OperatingPoint Calibration::lookup(const std::string& variant, double vdd,
                                   std::vector<std::string>* warnings) const {
    if (auto* p = find(variant, vdd)) return *p;
    auto pts = variant_points(variant);
    if (pts.empty()) throw ConfigError("unknown architecture variant '" + variant + "'");
    const OperatingPoint* hi = nullptr;
    const OperatingPoint* lo = nullptr;
    for (const auto& p : pts) {
        if (p.v_core > vdd) hi = &p;
        if (p.v_core < vdd && !lo) lo = &p;
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "%g", vdd);
    if (!hi || !lo)
        throw ConfigError("vdd " + std::string(buf) + " V outside the calibrated range of '" + variant + "'");
    double t = (vdd - lo->v_core) / (hi->v_core - lo->v_core);
    auto lerp_log = [t](double a, double b) {
        if (a <= 0 || b <= 0) return a + t * (b - a);
        return std::exp(std::log(a) + t * (std::log(b) - std::log(a)));
    };
    OperatingPoint p = *lo;
    p.v_core = vdd;
    p.f_hz = lerp_log(lo->f_hz, hi->f_hz);
    p.p_core_active_w = lerp_log(lo->p_core_active_w, hi->p_core_active_w);
    p.p_leak_w = lerp_log(lo->p_leak_w, hi->p_leak_w);
    p.label = "interpolated";
    p.interpolated = true;
    if (warnings)
        warnings->push_back("vdd " + std::string(buf) + " V of '" + variant +
                            "' not calibrated; interpolated log-linearly");
    return p;
}

double Calibration::mode_power_ratio(int native_kernel) const {
    auto it = mode_ratio.find(native_kernel);
    if (it == mode_ratio.end())
        throw ConfigError("no power ratio for native kernel " + std::to_string(native_kernel));
    return it->second;
}

Calibration parse_calibration(std::istream& is) {
    Calibration cal;
    cal.mode_ratio.clear();
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::vector<std::string> t;
        for (std::string w; ls >> w;) t.push_back(w);
        if (t.empty()) continue;
        const auto at = "line " + std::to_string(lineno) + ": ";
        if (t[0] == "idle_fraction") {
            if (t.size() != 2) throw ParseError(at + "idle_fraction takes one value");
            cal.idle_fraction = to_double(t[1], t[0]);
            if (cal.idle_fraction < 0 || cal.idle_fraction > 1)
                throw ParseError(at + "idle_fraction outside [0,1]");
        } else if (t[0] == "io") {
            auto kv = key_values(t, 1, lineno);
            cal.io.p_io_ref_w = to_double(take(kv, "p_ref_mw", lineno), "p_ref_mw") * 1e-3;
            cal.io.f_ref_hz = to_double(take(kv, "f_ref_mhz", lineno), "f_ref_mhz") * 1e6;
            if (!kv.empty()) throw ParseError(at + "unknown io key '" + kv.begin()->first + "'");
            if (cal.io.p_io_ref_w < 0 || cal.io.f_ref_hz <= 0) throw ParseError(at + "bad io model");
        } else if (t[0] == "mode_ratio") {
            if (t.size() != 3) throw ParseError(at + "mode_ratio takes <native kernel> <ratio>");
            int k = int(to_double(t[1], "kernel"));
            double r = to_double(t[2], "ratio");
            if (r <= 0) throw ParseError(at + "ratio must be positive");
            cal.mode_ratio[k] = r;
        } else if (t[0] == "point") {
            auto kv = key_values(t, 1, lineno);
            OperatingPoint p;
            p.variant = take(kv, "variant", lineno);
            p.n_ch = int(to_double(take(kv, "n_ch", lineno), "n_ch"));
            p.v_core = to_double(take(kv, "vdd", lineno), "vdd");
            p.f_hz = to_double(take(kv, "f_mhz", lineno), "f_mhz") * 1e6;
            p.p_core_active_w = to_double(take(kv, "p_core_mw", lineno), "p_core_mw") * 1e-3;
            p.area_mge = kv.count("area_mge") ? to_double(take(kv, "area_mge", lineno), "area_mge") : 0.0;
            p.p_leak_w = kv.count("p_leak_mw") ? to_double(take(kv, "p_leak_mw", lineno), "p_leak_mw") * 1e-3
                                               : -1.0;
            if (kv.count("label")) p.label = take(kv, "label", lineno);
            if (!kv.empty()) throw ParseError(at + "unknown point key '" + kv.begin()->first + "'");
            if (p.n_ch < 1 || p.v_core <= 0 || p.f_hz <= 0 || p.p_core_active_w < 0 || p.area_mge < 0)
                throw ParseError(at + "operating point values out of range");
            if (cal.find(p.variant, p.v_core))
                throw ParseError(at + "duplicate point for " + p.variant);
            cal.points.push_back(p);
        } else {
            throw ParseError(at + "unknown record '" + t[0] + "'");
        }
    }
    for (auto& p : cal.points) {
        if (p.p_leak_w < 0) p.p_leak_w = cal.idle_fraction * p.p_core_active_w;
        if (p.p_leak_w > p.p_core_active_w) throw ParseError("p_leak above active power for " + p.variant);
    }
    if (!cal.mode_ratio.count(7)) cal.mode_ratio[7] = 1.0;
    return cal;
}

Calibration load_calibration(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open calibration '" + path + "'");
    try {
        return parse_calibration(is);
    } catch (const ConfigError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

double core_power(const OperatingPoint& pt, double utilization, double mode_ratio) {
    if (!(utilization >= 0.0 && utilization <= 1.0)) throw ConfigError("utilization outside [0,1]");
    return mode_ratio * (pt.p_leak_w + utilization * (pt.p_core_active_w - pt.p_leak_w));
}

double device_power(const OperatingPoint& pt, const IoModel& io, double utilization, double mode_ratio) {
    return core_power(pt, utilization, mode_ratio) + io.p_io(pt.f_hz);
}

double energy_per_frame(double ops, double throughput, double power_w) {
    if (!(throughput > 0)) throw ConfigError("throughput must be positive");
    return ops / throughput * power_w;
}

}  // namespace bwsim::power
