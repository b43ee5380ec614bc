#include "bwsim/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "bwsim/core.hpp"
#include "bwsim/metrics.hpp"
#include "bwsim/netmodel.hpp"
#include "bwsim/power.hpp"

#ifndef BWSIM_DATA_DIR
#define BWSIM_DATA_DIR "data"
#endif

namespace fs = std::filesystem;

namespace bwsim::cli {

namespace {

std::string resolve(const std::string& base, const std::string& p) {
    if (p == "random" || p == "identity" || fs::path(p).is_absolute()) return p;
    return (fs::path(base) / p).lexically_normal().string();
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot write '" + p.string() + "'");
    return os;
}

}  // namespace

std::string default_data_dir() {
    if (const char* d = std::getenv("BWSIM_DATA_DIR")) return d;
    return BWSIM_DATA_DIR;
}

LayerFixture parse_layer_fixture(std::istream& is, const std::string& base_dir) {
    LayerFixture fx;
    bool have_layer = false;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::string key, val, extra;
        if (!(ls >> key)) continue;
        const auto at = "line " + std::to_string(lineno) + ": ";
        if (key == "layer") {
            std::string pad;
            auto& l = fx.layer;
            if (!(ls >> l.name >> l.n_in >> l.n_out >> l.h_im >> l.w_im >> l.h_k >> pad) || (ls >> extra))
                throw ParseError(at + "expected: layer <name> <n_in> <n_out> <h_im> <w_im> <h_k> <same|valid>");
            l.padding = parse_padding(pad);
            have_layer = true;
            continue;
        }
        if (!(ls >> val) || (ls >> extra)) throw ParseError(at + key + " takes one value");
        if (key == "input")
            fx.input = resolve(base_dir, val);
        else if (key == "filters")
            fx.filters = resolve(base_dir, val);
        else if (key == "affine")
            fx.affine = resolve(base_dir, val);
        else
            throw ParseError(at + "unknown record '" + key + "'");
    }
    if (!have_layer) throw ParseError("layer fixture has no 'layer' record");
    if (fx.input == "identity" || fx.filters == "identity")
        throw ParseError("'identity' only applies to affine");
    if (fx.layer.h_k > golden::BinaryFilter::kMaxSize)
        throw ConfigError("kernel size " + std::to_string(fx.layer.h_k) + " not supported");
    return fx;
}

LayerFixture load_layer_fixture(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open layer fixture '" + path + "'");
    try {
        return parse_layer_fixture(is, fs::path(path).parent_path().string());
    } catch (const ConfigError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

LayerData materialize(const LayerFixture& fx, std::uint64_t seed) {
    const auto& l = fx.layer;
    l.validate();
    std::mt19937_64 rng(seed);
    auto q29 = std::uniform_int_distribution<int>(int(fxp::kQ2_9.raw_min()), int(fxp::kQ2_9.raw_max()));
    auto bit = std::uniform_int_distribution<int>(0, 1);
    LayerData d;

    if (fx.input == "random") {
        d.input = golden::FeatureMap(l.n_in, l.h_im, l.w_im);
        for (int c = 0; c < l.n_in; ++c)
            for (int r = 0; r < l.h_im; ++r)
                for (int x = 0; x < l.w_im; ++x) d.input.set_raw(c, r, x, q29(rng));
    } else {
        d.input = golden::load_feature_map(fx.input);
    }
    if (d.input.format() != fxp::kQ2_9) throw ConfigError("input tensor must be Q2.9");
    if (d.input.channels() != l.n_in || d.input.height() != l.h_im || d.input.width() != l.w_im)
        throw ConfigError("input tensor shape does not match layer '" + l.name + "'");

    if (fx.filters == "random") {
        d.filters = golden::FilterSet(l.n_out, l.n_in, l.h_k);
        for (int o = 0; o < l.n_out; ++o)
            for (int n = 0; n < l.n_in; ++n)
                for (int a = 0; a < l.h_k; ++a)
                    for (int b = 0; b < l.h_k; ++b) d.filters.at(o, n).set_bit(a, b, std::uint8_t(bit(rng)));
    } else {
        d.filters = golden::load_filters(fx.filters);
    }
    if (d.filters.n_out() != l.n_out || d.filters.n_in() != l.n_in || d.filters.kernel() != l.h_k)
        throw ConfigError("filter shape does not match layer '" + l.name + "'");

    if (fx.affine == "identity") {
        d.affine = golden::identity_affine(l.n_out);
    } else if (fx.affine == "random") {
        for (int o = 0; o < l.n_out; ++o)
            d.affine.push_back({{q29(rng), fxp::kQ2_9}, {q29(rng), fxp::kQ2_9}});
    } else {
        d.affine = golden::load_affine(fx.affine);
    }
    if (d.affine.size() != std::size_t(l.n_out))
        throw ConfigError("affine count does not match layer '" + l.name + "'");
    return d;
}

std::string resolve_network(const std::string& name_or_path) {
    if (fs::exists(name_or_path) && fs::is_regular_file(name_or_path)) return name_or_path;
    auto bundled = fs::path(default_data_dir()) / "networks" / (name_or_path + ".net");
    if (fs::exists(bundled)) return bundled.string();
    throw ConfigError("unknown network '" + name_or_path + "'");
}

namespace {

struct Common {
    std::string config;
    std::string calibration;
};

core::AccelConfig load_cfg(const Common& c) {
    return c.config.empty() ? core::AccelConfig{} : core::load_accel_config(c.config);
}

power::Calibration load_cal(const Common& c) {
    return power::load_calibration(c.calibration.empty() ? default_data_dir() + "/calibration.txt"
                                                         : c.calibration);
}

struct SimulateArgs {
    std::string layer;
    std::string out;
    std::string expect;
    std::uint64_t seed = 1;
    bool verify = false;
    bool split = false;
    bool trace = false;
    bool strict = false;
    bool shifted = false;
};

int cmd_simulate(const Common& c, const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    auto cfg = load_cfg(c);
    auto fx = load_layer_fixture(a.layer);
    const int k = fx.layer.h_k;
    if (k == 11 && !a.split) throw ConfigError("kernel 11x11 needs --split");
    if (k > 7 && k != 11) throw ConfigError("kernel " + std::to_string(k) + "x" + std::to_string(k) + " not supported");
    if (a.trace && a.out.empty()) throw ConfigError("--trace needs --out");
    auto d = materialize(fx, a.seed);

    core::SimOptions opt;
    opt.sum_mode = a.strict ? golden::SumSaturation::per_channel : golden::SumSaturation::at_readout;
    opt.addressing = a.shifted ? core::ColumnAddressing::shifted : core::ColumnAddressing::circular;
    std::ofstream trace;
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        if (a.trace) {
            trace = open_out(fs::path(a.out) / "trace.txt");
            opt.trace = &trace;
        }
    }
    auto res = netmodel::simulate_layer(cfg, fx.layer, d.input, d.filters, d.affine, opt);

    out << "layer " << fx.layer.name << " blocks " << res.blocks << '\n';
    core::write_cycle_report(out, res.cycles);
    out << "saturations channel_sum " << res.saturation.channel_sum << " output " << res.saturation.output << '\n';

    std::vector<std::string> artifacts;
    if (!a.out.empty()) {
        fs::path dir(a.out);
        {
            auto os = open_out(dir / "output.bwt");
            golden::write_feature_map(os, res.output);
        }
        {
            auto os = open_out(dir / "cycles.txt");
            core::write_cycle_report(os, res.cycles);
        }
        artifacts = {"output.bwt", "cycles.txt"};
        if (a.trace) artifacts.push_back("trace.txt");
        auto mf = open_out(dir / "manifest.txt");
        mf << "command simulate\nlayer " << a.layer << "\nconfig " << (c.config.empty() ? "default" : c.config)
           << "\nseed " << a.seed << "\nout " << a.out << '\n';
        for (const auto& s : artifacts) mf << "artifact " << s << '\n';
    }

    if (!a.expect.empty()) {
        auto want = golden::load_feature_map(a.expect);
        if (!(want == res.output)) {
            err << "error: output differs from " << a.expect << '\n';
            return kMismatch;
        }
        out << "expect ok\n";
    }

    if (a.verify) {
        golden::FeatureMap ref =
            golden::conv_layer_golden(d.input, d.filters, d.affine, fx.layer.padding, opt.sum_mode);
        std::size_t bad = 0;
        std::string first;
        for (int o = 0; o < ref.channels(); ++o)
            for (int r = 0; r < ref.height(); ++r)
                for (int x = 0; x < ref.width(); ++x)
                    if (ref.raw(o, r, x) != res.output.raw(o, r, x) && bad++ == 0)
                        first = "channel " + std::to_string(o) + " row " + std::to_string(r) + " col " +
                                std::to_string(x) + ": sim " + std::to_string(res.output.raw(o, r, x)) +
                                " golden " + std::to_string(ref.raw(o, r, x));
        if (bad) {
            err << "error: verify mismatch, " << bad << " samples differ, first at " << first << '\n';
            return kMismatch;
        }
        out << "verify ok " << ref.data().size() << " samples\n";
    }
    return kOk;
}

struct NetworkArgs {
    std::string network;
    std::string variant = "bin32";
    double vdd = 1.2;
    std::string format = "table";
    std::string out;
};

int cmd_network(const Common& c, const NetworkArgs& a, std::ostream& out, std::ostream& err) {
    auto cfg = load_cfg(c);
    auto cal = load_cal(c);
    auto net = netmodel::load_network(resolve_network(a.network));
    std::vector<std::string> warnings;
    auto pt = cal.lookup(a.variant, a.vdd, &warnings);
    for (const auto& w : warnings) err << "warning: " << w << '\n';
    if (pt.n_ch != cfg.n_ch) cfg.n_ch = pt.n_ch;
    auto rep = netmodel::evaluate_network(net, cfg, pt, cal);
    std::ostringstream text;
    if (a.format == "csv")
        netmodel::write_report_csv(text, rep);
    else
        netmodel::write_report_table(text, rep);
    if (a.out.empty()) {
        out << text.str();
    } else {
        auto os = open_out(a.out);
        os << text.str();
    }
    return kOk;
}

struct SweepArgs {
    std::string variant = "bin32";
    std::vector<double> vdd;
    std::string out;
};

int cmd_sweep(const Common& c, const SweepArgs& a, std::ostream& out, std::ostream& err) {
    auto cfg = load_cfg(c);
    auto cal = load_cal(c);
    std::vector<power::OperatingPoint> pts;
    if (a.vdd.empty()) {
        pts = cal.variant_points(a.variant);
        if (pts.empty()) throw ConfigError("unknown architecture variant '" + a.variant + "'");
    } else {
        std::vector<std::string> warnings;
        for (double v : a.vdd) pts.push_back(cal.lookup(a.variant, v, &warnings));
        for (const auto& w : warnings) err << "warning: " << w << '\n';
    }
    std::ostringstream text;
    text << "variant,vdd_v,f_mhz,peak_gops,p_core_mw,p_device_mw,eneff_core_topsw,eneff_device_gopsw,"
            "area_eff_gopsmge,interpolated\n";
    char buf[256];
    for (const auto& p : pts) {
        cfg.n_ch = p.n_ch;
        const double peak = metrics::peak_throughput(cfg, core::sop_mode(cfg, 7), p.f_hz);
        const double pc = power::core_power(p, 1.0);
        const double pd = power::device_power(p, cal.io, 1.0);
        std::snprintf(buf, sizeof buf, "%s,%.2f,%.3f,%.1f,%.3f,%.1f,%.2f,%.0f,%s,%s\n", p.variant.c_str(), p.v_core,
                      p.f_hz * 1e-6, peak * 1e-9, pc * 1e3, pd * 1e3, peak / pc * 1e-12, peak / pd * 1e-9,
                      p.area_mge > 0 ? std::to_string(int(peak * 1e-9 / p.area_mge + 0.5)).c_str() : "",
                      p.interpolated ? "yes" : "no");
        text << buf;
    }
    if (a.out.empty()) {
        out << text.str();
    } else {
        auto os = open_out(a.out);
        os << text.str();
    }
    return kOk;
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"bit-true simulator and performance model of a binary-weight CNN accelerator", "bwsim"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config, "accelerator config file (default: 32x32)");
    app.add_option("--calibration", common.calibration, "operating point calibration file");

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "run one layer through the cycle-level simulator");
    sim->add_option("layer", sa.layer, "layer fixture")->required();
    sim->add_option("--seed", sa.seed, "seed for random fixture entries");
    sim->add_option("--out", sa.out, "output directory");
    sim->add_flag("--verify", sa.verify, "compare against the golden model (exit 2 on mismatch)");
    sim->add_option("--expect", sa.expect, "compare the output with a stored tensor (exit 2 on mismatch)");
    sim->add_flag("--split", sa.split, "allow 11x11 kernels via four sub-kernels");
    sim->add_flag("--trace", sa.trace, "write trace.txt (needs --out)");
    sim->add_flag("--strict-sums", sa.strict, "saturate the channel sum after every input channel");
    sim->add_flag("--shifted", sa.shifted, "move image columns instead of rotating weights");

    NetworkArgs na;
    auto* net = app.add_subcommand("network", "evaluate a network at an operating point");
    net->add_option("network,--network", na.network, "network fixture or bundled name");
    net->add_option("--variant", na.variant, "architecture variant in the calibration file");
    net->add_option("--vdd", na.vdd, "core supply voltage");
    net->add_option("--format", na.format, "csv or table")->check(CLI::IsMember({"csv", "table"}));
    net->add_option("--out", na.out, "write the report to a file");

    SweepArgs wa;
    auto* sweep = app.add_subcommand("sweep", "peak throughput and efficiency per operating point");
    sweep->add_option("--variant", wa.variant, "architecture variant");
    sweep->add_option("--vdd", wa.vdd, "voltages (default: all calibrated)")->delimiter(',');
    sweep->add_option("--out", wa.out, "write the CSV to a file");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << one_line(e.what()) << '\n';
        return kInvalid;
    }
    if (*net && na.network.empty()) {
        err << "error: network needs a fixture or name\n";
        return kInvalid;
    }

    try {
        if (*sim) return cmd_simulate(common, sa, out, err);
        if (*net) return cmd_network(common, na, out, err);
        return cmd_sweep(common, wa, out, err);
    } catch (const std::exception& e) {
        err << "error: " << one_line(e.what()) << '\n';
        return kInvalid;
    }
}

}  // namespace bwsim::cli
