// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdarg>
#include <limits>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bwsim/cli.hpp"
#include "bwsim/core.hpp"
#include "bwsim/fxp.hpp"
#include "bwsim/golden.hpp"
#include "bwsim/metrics.hpp"
#include "bwsim/netmodel.hpp"
#include "bwsim/power.hpp"
#include "convert.hpp"
#include "oracle.hpp"

using namespace bwsim;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

void criterion(int id, const char* name, double time_limit_s, const std::function<Outcome()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = time_limit_s <= 0 || dt < time_limit_s;
    bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("[%s] %2d %s: %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), dt,
                in_time ? "" : ", over time limit");
    std::fflush(stdout);
}

power::Calibration calibration() {
    return power::load_calibration(cli::default_data_dir() + "/calibration.txt");
}

double peak_at(int n_ch, double f) {
    core::AccelConfig cfg;
    cfg.n_ch = n_ch;
    return metrics::peak_throughput(cfg, core::sop_mode(cfg, 7), f);
}

// histogram of active SCM banks gathered while running criterion 6
std::vector<std::uint64_t> bank_histogram;
std::uint64_t traced_cycles = 0;

}  // namespace

int main() {
    const auto cal = calibration();

    criterion(1, "peak throughput 32x32, 7x7, 480 MHz", 1.0, [] {
        double p = peak_at(32, 480e6);
        bool ok = p == 1505.28e9;
        return Outcome{ok, fmt("%.2f GOp/s = %.1f TOp/s (target 1505.28 GOp/s, exact)", p * 1e-9, p * 1e-12)};
    });

    criterion(2, "8x8 binary core operating points", 1.0, [&] {
        struct Row {
            double vdd, gops, topsw;
        } rows[] = {{1.2, 377, 9.61}, {0.8, 149, 29.05}, {0.6, 15, 58.56}};
        Outcome o;
        for (auto r : rows) {
            auto pt = cal.lookup("bin8", r.vdd);
            double th = peak_at(8, pt.f_hz);
            double he = th / power::core_power(pt, 1.0);
            double e1 = rel_err(th * 1e-9, r.gops), e2 = rel_err(he * 1e-12, r.topsw);
            o.pass = o.pass && e1 <= 0.02 && e2 <= 0.02;
            o.detail += fmt("%s%.1fV %.1f GOp/s (%.0f, %.1f%%) %.2f TOp/s/W (%.2f, %.1f%%)", o.detail.empty() ? "" : "; ",
                            r.vdd, th * 1e-9, r.gops, e1 * 100, he * 1e-12, r.topsw, e2 * 100);
        }
        o.detail += "; tol 2%";
        return o;
    });

    criterion(3, "flagship energy and area efficiency", 1.0, [&] {
        auto lo = cal.lookup("bin32", 0.6);
        auto hi = cal.lookup("bin32", 1.2);
        double th_lo = peak_at(32, lo.f_hz), th_hi = peak_at(32, hi.f_hz);
        auto e_lo = metrics::efficiencies(th_lo, power::core_power(lo, 1.0), lo.area_mge);
        auto e_hi = metrics::efficiencies(th_hi, power::core_power(hi, 1.0), hi.area_mge);
        double a = rel_err(e_lo.energy * 1e-12, 61.2), b = rel_err(e_hi.area * 1e-9, 1132);
        return Outcome{a <= 0.01 && b <= 0.01,
                       fmt("H_E %.2f TOp/s/W at 0.6 V (Theta %.2f GOp/s, P %.0f uW; target 61.2, %.2f%%), "
                           "H_A %.0f GOp/s/MGE at 1.2 V (target 1132, %.2f%%); tol 1%%",
                           e_lo.energy * 1e-12, th_lo * 1e-9, power::core_power(lo, 1.0) * 1e6, a * 100,
                           e_hi.area * 1e-9, b * 100)};
    });

    criterion(4, "device efficiency, 7x7, 1.2 V", 1.0, [&] {
        struct Row {
            const char* variant;
            int n_ch;
            double target;
        } rows[] = {{"bin8", 8, 856}, {"bin16", 16, 1611}, {"bin32", 32, 2756}};
        Outcome o;
        for (auto r : rows) {
            auto pt = cal.lookup(r.variant, 1.2);
            double he = peak_at(r.n_ch, pt.f_hz) / power::device_power(pt, cal.io, 1.0) * 1e-9;
            double e = rel_err(he, r.target);
            o.pass = o.pass && e <= 0.05;
            o.detail += fmt("%s%dx%d %.0f GOp/s/W (%.0f, %.1f%%)", o.detail.empty() ? "" : "; ", r.n_ch, r.n_ch, he,
                            r.target, e * 100);
        }
        o.detail += "; tol 5%";
        return o;
    });

    criterion(5, "network tables, analytic", 10.0, [&] {
        struct Row {
            const char* net;
            double vdd, eneff, theta, fps, energy_uj;
        } rows[] = {
            {"bc-cifar10", 0.6, 56.7, 19.1, 1000 / 63.2, 21},  {"resnet18", 0.6, 48.1, 16.2, 1000 / 221.5, 73},
            {"vgg19", 0.6, 55.9, 18.9, 1000 / 2069.2, 684},    {"bc-cifar10", 1.2, 8.6, 525.4, 1000 / 2.3, 137},
            {"resnet18", 1.2, 7.3, 446.4, 1000 / 8.0, 478},    {"vgg19", 1.2, 8.5, 519.8, 1000 / 75.1, 4482},
        };
        core::AccelConfig cfg;
        Outcome o;
        double worst = 0;
        std::string worst_at;
        for (auto r : rows) {
            auto net = netmodel::load_network(cli::resolve_network(r.net));
            auto rep = netmodel::evaluate_network(net, cfg, cal.lookup("bin32", r.vdd), cal);
            double got[] = {rep.energy_efficiency() * 1e-12, rep.throughput() * 1e-9, rep.fps(), rep.energy_j * 1e6};
            double want[] = {r.eneff, r.theta, r.fps, r.energy_uj};
            const char* what[] = {"EnEff", "Theta", "FPS", "energy"};
            std::string line = fmt("%s@%.1fV", r.net, r.vdd);
            for (int i = 0; i < 4; ++i) {
                double e = rel_err(got[i], want[i]);
                if (e > worst) {
                    worst = e;
                    worst_at = fmt("%s %s@%.1fV", what[i], r.net, r.vdd);
                }
                o.pass = o.pass && e <= 0.10;
                line += fmt(" %s %.4g/%.4g", what[i], got[i], want[i]);
            }
            std::printf("       %s\n", line.c_str());
        }
        o.detail = fmt("6 rows x 4 metrics, worst %.1f%% (%s); tol 10%%", worst * 100, worst_at.c_str());
        return o;
    });

    criterion(6, "bit-exact simulator vs golden, random layers", 60.0, [] {
        core::AccelConfig cfg;
        std::mt19937_64 rng(20240601);
        const int n_layers = 1200;
        long mismatches = 0, samples = 0, oracle_mismatch = 0;
        int per_k[8] = {}, per_pad[2] = {};
        for (int t = 0; t < n_layers; ++t) {
            int k = 1 + int(rng() % 7);
            Padding pad = (k % 2 == 1 && rng() % 2) ? Padding::zero_pad : Padding::valid;
            int n_in = 1 + int(rng() % 8), n_out = 1 + int(rng() % 8);
            int h = k + int(rng() % (17 - k)), w = k + int(rng() % (17 - k));
            LayerSpec l{"r", n_in, n_out, h, w, k, pad};
            auto xt = oracle::random_tensor(rng, n_in, h, w);
            auto wt = oracle::random_weights(rng, n_out, n_in, k);
            std::vector<golden::ChannelAffine> aff;
            std::vector<std::pair<int, int>> raw_aff;
            for (int o = 0; o < n_out; ++o) {
                int a = int(rng() % 4096) - 2048, b = int(rng() % 4096) - 2048;
                aff.push_back({{a, fxp::kQ2_9}, {b, fxp::kQ2_9}});
                raw_aff.push_back({a, b});
            }
            auto x = testutil::to_map(xt);
            auto fs = testutil::to_filters(wt, k);
            core::SimOptions opt;
            opt.record_bank_sets = true;
            auto sim = core::simulate_layer_block(cfg, l, x, fs, aff, {}, opt);
            auto ref = golden::conv_layer_golden(x, fs, aff, pad);
            // golden itself against the nested-loop oracle
            auto osum = oracle::conv(xt, wt, k, pad == Padding::zero_pad ? (k - 1) / 2 : 0);
            for (int o = 0; o < n_out; ++o)
                for (int r = 0; r < ref.height(); ++r)
                    for (int c = 0; c < ref.width(); ++c) {
                        ++samples;
                        mismatches += sim.output.raw(o, r, c) != ref.raw(o, r, c);
                        oracle_mismatch += ref.raw(o, r, c) !=
                                           oracle::scale_bias(osum.at(o, r, c), raw_aff[o].first, raw_aff[o].second);
                    }
            for (const auto& bs : sim.bank_sets) {
                int n = bs.active();
                if (std::size_t(n) >= bank_histogram.size()) bank_histogram.resize(n + 1, 0);
                ++bank_histogram[n];
                ++traced_cycles;
            }
            ++per_k[k];
            ++per_pad[pad == Padding::zero_pad];
        }
        return Outcome{mismatches == 0 && oracle_mismatch == 0,
                       fmt("%d layers (k1..7: %d %d %d %d %d %d %d; zero_pad %d, valid %d), %ld samples, "
                           "%ld simulator mismatches, %ld golden-vs-oracle mismatches",
                           n_layers, per_k[1], per_k[2], per_k[3], per_k[4], per_k[5], per_k[6], per_k[7], per_pad[1],
                           per_pad[0], samples, mismatches, oracle_mismatch)};
    });

    criterion(7, "11x11 split-kernel exactness", 30.0, [] {
        core::AccelConfig cfg;
        std::mt19937_64 rng(1105);
        int filters = 0, layers = 0;
        long bad = 0, samples = 0;
        while (filters < 120) {
            int n_in = 1 + int(rng() % 3), n_out = 1 + int(rng() % 4);
            Padding pad = rng() % 2 ? Padding::zero_pad : Padding::valid;
            int h = 11 + int(rng() % 10), w = 11 + int(rng() % 10);
            LayerSpec l{"s", n_in, n_out, h, w, 11, pad};
            auto xt = oracle::random_tensor(rng, n_in, h, w);
            auto wt = oracle::random_weights(rng, n_out, n_in, 11);
            auto ref = oracle::conv(xt, wt, 11, pad == Padding::zero_pad ? 5 : 0);
            auto r = netmodel::simulate_layer(cfg, l, testutil::to_map(xt), testutil::to_filters(wt, 11),
                                              golden::identity_affine(n_out));
            for (std::size_t i = 0; i < ref.v.size(); ++i) {
                ++samples;
                bad += r.sums.v[i] != ref.v[i];
            }
            for (int o = 0; o < n_out; ++o)
                for (int y = 0; y < ref.h; ++y)
                    for (int c = 0; c < ref.w; ++c) bad += r.output.raw(o, y, c) != oracle::scale_bias(ref.at(o, y, c), 512, 0);
            filters += n_in * n_out;
            ++layers;
        }
        return Outcome{bad == 0, fmt("%d random 11x11 filters in %d layers, %ld sums checked against direct "
                                     "convolution, %ld mismatches",
                                     filters, layers, samples, bad)};
    });

    criterion(8, "cycle model vs analytic throughput", 0, [] {
        core::AccelConfig cfg;
        std::mt19937_64 rng(88);
        Outcome o;
        double worst = 0;
        for (int hw : {64, 128})
            for (auto shape : {std::array<int, 3>{32, 32, 7}, std::array<int, 3>{32, 64, 3}}) {
                LayerSpec l{"c8", shape[0], shape[1], hw, hw, shape[2], Padding::zero_pad};
                auto x = testutil::to_map(oracle::random_tensor(rng, l.n_in, hw, hw));
                auto fs = testutil::to_filters(oracle::random_weights(rng, l.n_out, l.n_in, l.h_k), l.h_k);
                auto r = netmodel::simulate_layer(cfg, l, x, fs, {});
                auto mode = core::sop_mode(cfg, l.h_k);
                const double f = 480e6;
                double ops = metrics::count_ops(l, metrics::OpCount::output_pixels);
                double measured = ops / (double(r.cycles.total_cycles()) / f);
                int opc = mode.outputs_per_cycle(cfg);
                double analytic = metrics::peak_throughput(cfg, mode, f) *
                                  metrics::eta_tile(l.out_h(), cfg.h_max(l.n_in), l.h_k) *
                                  metrics::eta_ch_idle(l.n_in, (l.n_out + opc - 1) / opc);
                double e = rel_err(measured, analytic);
                worst = std::max(worst, e);
                o.pass = o.pass && e <= 0.05;
                std::printf("       %dx%d %d->%d k=%d: measured %.1f GOp/s, analytic %.1f GOp/s, %.2f%%\n", hw, hw,
                            l.n_in, l.n_out, l.h_k, measured * 1e-9, analytic * 1e-9, e * 100);
            }
        o.detail = fmt("worst %.2f%%; tol 5%%", worst * 100);
        return o;
    });

    criterion(9, "SCM active banks per cycle", 0, [] {
        int max_active = 0;
        for (std::size_t i = 0; i < bank_histogram.size(); ++i)
            if (bank_histogram[i]) max_active = int(i);
        std::string h;
        for (std::size_t i = 0; i < bank_histogram.size(); ++i)
            h += fmt("%s%zu:%llu", i ? " " : "", i, (unsigned long long)bank_histogram[i]);
        return Outcome{traced_cycles > 0 && max_active <= 7,
                       fmt("max %d over %llu traced cycles (limit 7); histogram [%s]", max_active,
                           (unsigned long long)traced_cycles, h.c_str())};
    });

    criterion(10, "fixed-point properties", 0, [] {
        using namespace bwsim::fxp;
        long rt_fail = 0, mul_fail = 0, mono_fail = 0, dir_fail = 0;
        for (std::int64_t raw = kQ2_9.raw_min(); raw <= kQ2_9.raw_max(); ++raw) {
            FxSample s(raw, kQ2_9);
            rt_fail += quantize(s.to_real(), kQ2_9, Rounding::truncate).raw() != raw;
        }
        std::mt19937_64 rng(10);
        std::uniform_int_distribution<std::int64_t> a7(kQ7_9.raw_min(), kQ7_9.raw_max()),
            a2(kQ2_9.raw_min(), kQ2_9.raw_max()), a18(kQ10_18.raw_min(), kQ10_18.raw_max());
        for (int i = 0; i < 100000; ++i) {
            FxSample a(a7(rng), kQ7_9), b(a2(rng), kQ2_9);
            auto p = mul_qq(a, b);
            // both products are exact in double (< 2^53)
            mul_fail += p.to_real() != a.to_real() * b.to_real() || p.raw() != a.raw() * b.raw();
        }
        std::vector<std::int64_t> xs(100000);
        for (auto& x : xs) x = a18(rng);
        std::sort(xs.begin(), xs.end());
        std::int64_t prev = std::numeric_limits<std::int64_t>::min();
        for (auto x : xs) {
            std::uint64_t sat = 0;
            auto t = saturate_truncate(FxSample(x, kQ10_18), kQ2_9, &sat);
            mono_fail += t.raw() < prev;
            prev = t.raw();
            if (!sat) dir_fail += t.to_real() > FxSample(x, kQ10_18).to_real();
        }
        // and exhaustively across the unsaturated Q10.18 span that maps onto Q2.9
        prev = std::numeric_limits<std::int64_t>::min();
        for (std::int64_t x = -(std::int64_t{1} << 21) - 4096; x < (std::int64_t{1} << 21) + 4096; ++x) {
            auto t = saturate_truncate(FxSample(x, kQ10_18), kQ2_9);
            mono_fail += t.raw() < prev;
            prev = t.raw();
        }
        return Outcome{rt_fail + mul_fail + mono_fail + dir_fail == 0,
                       fmt("round trip 4096 values: %ld failures; mul_qq 1e5 pairs: %ld; truncation monotonicity: %ld; "
                           "truncation direction: %ld",
                           rt_fail, mul_fail, mono_fail, dir_fail)};
    });

    std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
