#include "bwsim/netmodel.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "bwsim/metrics.hpp"

namespace bwsim::netmodel {

void NetworkSpec::validate() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].validate();
        if (i > 0 && layers[i - 1].n_out != layers[i].n_in)
            throw ConfigError("network '" + name + "': layer '" + layers[i].name + "' expects " +
                              std::to_string(layers[i].n_in) + " input channels, previous layer gives " +
                              std::to_string(layers[i - 1].n_out));
    }
}

NetworkSpec parse_network(std::istream& is) {
    NetworkSpec net;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        const auto at = "line " + std::to_string(lineno) + ": ";
        if (key == "network") {
            if (!(ls >> net.name)) throw ParseError(at + "network needs a name");
        } else if (key == "source") {
            std::getline(ls, net.source);
            net.source.erase(0, net.source.find_first_not_of(' '));
        } else if (key == "image") {
            if (!(ls >> net.image) || net.image < 1) throw ParseError(at + "image needs a positive size");
        } else if (key == "layer") {
            LayerSpec l;
            std::string pad, extra;
            if (!(ls >> l.name >> l.n_in >> l.n_out >> l.h_im >> l.w_im >> l.h_k >> pad) || (ls >> extra))
                throw ParseError(at + "expected: layer <name> <n_in> <n_out> <h_im> <w_im> <h_k> <same|valid>");
            l.padding = parse_padding(pad);
            try {
                l.validate();
            } catch (const ConfigError& e) {
                throw ParseError(at + e.what());
            }
            net.layers.push_back(l);
        } else {
            throw ParseError(at + "unknown record '" + key + "'");
        }
    }
    if (net.name.empty()) throw ParseError("network fixture has no 'network' record");
    net.validate();
    return net;
}

NetworkSpec load_network(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open network fixture '" + path + "'");
    try {
        return parse_network(is);
    } catch (const ConfigError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

BlockPlan plan_blocks(const LayerSpec& layer, const core::AccelConfig& cfg) {
    layer.validate();
    BlockPlan plan;
    plan.layer = layer;
    plan.mode = core::sop_mode(cfg, layer.h_k);
    const int in_sz = cfg.n_ch;
    const int out_sz = plan.mode.max_out_block(cfg.n_ch);
    const int h_max = cfg.h_max(std::min(layer.n_in, in_sz));
    if (h_max < layer.h_k) throw ConfigError("image memory cannot hold a kernel's rows");
    plan.in_blocks = (layer.n_in + in_sz - 1) / in_sz;
    plan.out_blocks = (layer.n_out + out_sz - 1) / out_sz;
    plan.tiles = (layer.out_h() + h_max - 1) / h_max;
    for (int t = 0; t < plan.tiles; ++t)
        for (int ob = 0; ob < plan.out_blocks; ++ob)
            for (int ib = 0; ib < plan.in_blocks; ++ib)
                plan.entries.push_back({ib * in_sz, std::min(layer.n_in, (ib + 1) * in_sz), ob * out_sz,
                                        std::min(layer.n_out, (ob + 1) * out_sz), t * h_max,
                                        std::min(layer.out_h(), (t + 1) * h_max)});
    plan.offchip_ops = double(plan.in_blocks - 1) * layer.out_h() * layer.out_w() * layer.n_out;
    return plan;
}

SplitKernel split_kernel_11(const golden::BinaryFilter& filter) {
    if (filter.size() != 11)
        throw ConfigError("split_kernel_11 needs an 11x11 kernel, got " + std::to_string(filter.size()));
    SplitKernel sk;
    const int spec[4][3] = {{6, 0, 0}, {6, 5, 5}, {5, 0, 6}, {5, 6, 0}};  // size, row, col
    for (int i = 0; i < 4; ++i) {
        auto& p = sk.parts[i];
        p.filter = golden::BinaryFilter(spec[i][0]);
        p.row_offset = spec[i][1];
        p.col_offset = spec[i][2];
        for (int a = 0; a < spec[i][0]; ++a)
            for (int b = 0; b < spec[i][0]; ++b)
                p.filter.set_bit(a, b, filter.bit(a + p.row_offset, b + p.col_offset));
    }
    sk.parts[0].filter.set(SplitKernel::center, SplitKernel::center, 1);
    return sk;
}

golden::PartialSums offchip_accumulate(std::span<const golden::PartialSums> blocks) {
    if (blocks.empty()) throw ConfigError("nothing to accumulate");
    golden::PartialSums acc = blocks[0];
    for (std::size_t i = 1; i < blocks.size(); ++i) {
        const auto& b = blocks[i];
        if (b.channels != acc.channels || b.h != acc.h || b.w != acc.w)
            throw ConfigError("partial sum blocks differ in shape");
        for (std::size_t j = 0; j < acc.v.size(); ++j) acc.v[j] += b.v[j];
    }
    return acc;
}

namespace {

golden::FeatureMap crop(const golden::FeatureMap& fm, int r0, int r1, int c0, int c1) {
    golden::FeatureMap out(fm.channels(), r1 - r0, c1 - c0, fm.format());
    for (int n = 0; n < fm.channels(); ++n)
        for (int r = r0; r < r1; ++r)
            for (int c = c0; c < c1; ++c) out.set_raw(n, r - r0, c - c0, fm.raw(n, r, c));
    return out;
}

golden::FeatureMap zero_pad(const golden::FeatureMap& fm, int p) {
    golden::FeatureMap out(fm.channels(), fm.height() + 2 * p, fm.width() + 2 * p, fm.format());
    for (int n = 0; n < fm.channels(); ++n)
        for (int r = 0; r < fm.height(); ++r)
            for (int c = 0; c < fm.width(); ++c) out.set_raw(n, r + p, c + p, fm.raw(n, r, c));
    return out;
}

void apply_scale_bias(const core::AccelConfig& cfg, const LayerSpec& layer, const core::SopMode& mode,
                      std::span<const golden::ChannelAffine> affine, LayerSimResult& res) {
    const int out_sz = mode.max_out_block(cfg.n_ch);
    res.output = golden::FeatureMap(layer.n_out, res.sums.h, res.sums.w);
    std::vector<std::int64_t> px;
    for (int ob = 0; ob < layer.n_out; ob += out_sz) {
        int oe = std::min(layer.n_out, ob + out_sz);
        auto aff = affine.subspan(ob, oe - ob);
        for (int r = 0; r < res.sums.h; ++r)
            for (int c = 0; c < res.sums.w; ++c) {
                px.clear();
                for (int o = ob; o < oe; ++o) px.push_back(res.sums.at(o, r, c));
                for (const auto& beat : core::scale_bias_stream(cfg, mode, px, aff, &res.saturation))
                    res.output.set_raw(ob + beat.channel, r, c, beat.value.raw());
            }
    }
}

LayerSimResult simulate_split(const core::AccelConfig& cfg, const LayerSpec& layer,
                              const golden::FeatureMap& input, const golden::FilterSet& filters,
                              std::span<const golden::ChannelAffine> affine, const core::SimOptions& opt) {
    const int p = layer.padding == Padding::zero_pad ? 5 : 0;
    golden::FeatureMap padded = p ? zero_pad(input, p) : input;
    const int out_h = layer.out_h(), out_w = layer.out_w();

    std::vector<SplitKernel> splits;
    for (int o = 0; o < layer.n_out; ++o)
        for (int n = 0; n < layer.n_in; ++n) splits.push_back(split_kernel_11(filters.at(o, n)));

    LayerSimResult res;
    std::vector<golden::PartialSums> parts;
    for (int i = 0; i < 4; ++i) {
        const auto& ref = splits[0].parts[i];
        const int s = ref.filter.size();
        golden::FilterSet sub(layer.n_out, layer.n_in, s);
        for (int o = 0; o < layer.n_out; ++o)
            for (int n = 0; n < layer.n_in; ++n)
                sub.at(o, n) = splits[std::size_t(o) * layer.n_in + n].parts[i].filter;
        golden::FeatureMap view = crop(padded, ref.row_offset, ref.row_offset + out_h + s - 1, ref.col_offset,
                                       ref.col_offset + out_w + s - 1);
        LayerSpec sl{layer.name + "/part" + std::to_string(i), layer.n_in, layer.n_out, view.height(),
                     view.width(), s, Padding::valid};
        auto r = simulate_layer(cfg, sl, view, sub, {}, opt);
        res.cycles += r.cycles;
        res.saturation += r.saturation;
        res.blocks += r.blocks;
        parts.push_back(std::move(r.sums));
    }
    res.sums = offchip_accumulate(parts);
    const int c = SplitKernel::center;
    for (int r = 0; r < out_h; ++r)
        for (int x = 0; x < out_w; ++x) {
            std::int64_t id = 0;
            for (int n = 0; n < layer.n_in; ++n) id += padded.raw(n, r + c, x + c);
            for (int o = 0; o < layer.n_out; ++o) res.sums.at(o, r, x) -= id;
        }
    if (!affine.empty()) apply_scale_bias(cfg, layer, core::sop_mode(cfg, 6), affine, res);
    return res;
}

// Sub-layers actually run for a layer: itself, or the four split parts of an 11x11.
std::vector<LayerSpec> executed_layers(const LayerSpec& layer) {
    if (layer.h_k != 11) return {layer};
    std::vector<LayerSpec> v;
    for (int s : {6, 6, 5, 5})
        v.push_back({layer.name, layer.n_in, layer.n_out, layer.out_h() + s - 1, layer.out_w() + s - 1, s,
                     Padding::valid});
    return v;
}

}  // namespace

LayerSimResult simulate_layer(const core::AccelConfig& cfg, const LayerSpec& layer,
                              const golden::FeatureMap& input, const golden::FilterSet& filters,
                              std::span<const golden::ChannelAffine> affine, const core::SimOptions& opt) {
    layer.validate();
    if (input.channels() != layer.n_in || input.height() != layer.h_im || input.width() != layer.w_im)
        throw ConfigError("input does not match layer '" + layer.name + "'");
    if (filters.n_in() != layer.n_in || filters.n_out() != layer.n_out || filters.kernel() != layer.h_k)
        throw ConfigError("filters do not match layer '" + layer.name + "'");
    if (!affine.empty() && affine.size() != std::size_t(layer.n_out))
        throw ConfigError("need one scale/bias pair per output channel");
    if (layer.h_k == 11) return simulate_split(cfg, layer, input, filters, affine, opt);

    BlockPlan plan = plan_blocks(layer, cfg);
    if (plan.in_blocks > 1 && opt.sum_mode == golden::SumSaturation::per_channel)
        throw ConfigError("per-channel saturation needs a single input-channel block");
    LayerSimResult res;
    res.sums = golden::PartialSums(layer.n_out, layer.out_h(), layer.out_w());
    const bool on_chip_affine = !affine.empty() && plan.in_blocks == 1;
    if (on_chip_affine) res.output = golden::FeatureMap(layer.n_out, layer.out_h(), layer.out_w());

    std::map<int, golden::FeatureMap> in_slices;
    for (const auto& e : plan.entries) {
        auto it = in_slices.find(e.in_begin);
        if (it == in_slices.end())
            it = in_slices.emplace(e.in_begin, input.slice_channels(e.in_begin, e.in_end)).first;
        LayerSpec bl = layer;
        bl.n_in = e.in_end - e.in_begin;
        bl.n_out = e.out_end - e.out_begin;
        auto fs = filters.slice(e.out_begin, e.out_end, e.in_begin, e.in_end);
        auto aff = on_chip_affine ? affine.subspan(e.out_begin, e.out_end - e.out_begin)
                                  : std::span<const golden::ChannelAffine>{};
        auto br = core::simulate_layer_block(cfg, bl, it->second, fs, aff, {e.row_begin, e.row_end}, opt);
        for (int o = 0; o < bl.n_out; ++o)
            for (int r = 0; r < br.sums.h; ++r)
                for (int c = 0; c < br.sums.w; ++c) {
                    res.sums.at(e.out_begin + o, br.row_offset + r, c) += br.sums.at(o, r, c);
                    if (on_chip_affine)
                        res.output.set_raw(e.out_begin + o, br.row_offset + r, c, br.output.raw(o, r, c));
                }
        res.cycles += br.cycles;
        res.saturation += br.saturation;
        ++res.blocks;
    }
    if (!affine.empty() && !on_chip_affine) apply_scale_bias(cfg, layer, plan.mode, affine, res);
    return res;
}

PerfReport evaluate_network(const NetworkSpec& net, const core::AccelConfig& cfg,
                            const power::OperatingPoint& pt, const power::Calibration& cal) {
    net.validate();
    PerfReport rep;
    rep.network = net.name;
    rep.variant = pt.variant;
    rep.vdd = pt.v_core;
    rep.f_hz = pt.f_hz;
    rep.p_max_w = pt.p_core_active_w;
    rep.image = net.image ? net.image : net.layers.empty() ? 0 : net.layers.front().h_im;
    if (pt.n_ch != cfg.n_ch)
        throw ConfigError("operating point '" + pt.label + "' is for n_ch " + std::to_string(pt.n_ch) +
                          ", accelerator has " + std::to_string(cfg.n_ch));

    for (const auto& layer : net.layers) {
        LayerPerf lp;
        lp.layer = layer;
        lp.ops = metrics::count_ops(layer, metrics::OpCount::output_pixels);
        double idle_weighted = 0;
        bool first = true;
        for (const auto& sub : executed_layers(layer)) {
            BlockPlan plan = plan_blocks(sub, cfg);
            lp.offchip_ops += plan.offchip_ops;
            const auto& mode = plan.mode;
            const int opc = mode.outputs_per_cycle(cfg);
            const double peak = metrics::peak_throughput(cfg, mode, pt.f_hz);
            const double ratio = cal.mode_power_ratio(mode.native);
            const double e_tile = metrics::eta_tile(sub.out_h(), cfg.h_max(std::min(sub.n_in, cfg.n_ch)), sub.h_k);
            const double e_border = metrics::eta_border(sub);
            if (first) lp.eta_tile = e_tile;
            first = false;
            // channel blocks; tiles are covered by eta_tile
            for (const auto& e : plan.entries) {
                if (e.row_begin != 0) continue;
                LayerSpec bl = sub;
                bl.n_in = e.in_end - e.in_begin;
                bl.n_out = e.out_end - e.out_begin;
                const double e_idle = metrics::eta_ch_idle(bl.n_in, (bl.n_out + opc - 1) / opc);
                const double e_occ = metrics::eta_occupancy(bl.n_out, mode, cfg.n_ch);
                const double etas[] = {e_tile, e_idle, e_occ, e_border};
                const double t = metrics::count_ops(bl, metrics::OpCount::output_pixels) /
                                 metrics::real_throughput(peak, etas);
                const double util = e_idle * e_occ;
                lp.time_s += t;
                lp.energy_j += t * power::core_power(pt, util, ratio);
                idle_weighted += t * e_idle;
                ++lp.blocks;
            }
        }
        if (layer.h_k == 11)  // three part additions and one identity subtraction per output sample
            lp.offchip_ops += 4.0 * layer.out_h() * layer.out_w() * layer.n_out;
        lp.eta_ch_idle = lp.time_s > 0 ? idle_weighted / lp.time_s : 1;
        lp.utilization = lp.time_s > 0 ? lp.energy_j / lp.time_s / pt.p_core_active_w : 0;
        rep.ops += lp.ops;
        rep.time_s += lp.time_s;
        rep.energy_j += lp.energy_j;
        rep.layers.push_back(lp);
    }
    return rep;
}

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

void write_report_csv(std::ostream& os, const PerfReport& r) {
    os << "network,layer,n_in,n_out,h_im,w_im,h_k,padding,blocks,ops_gop,throughput_gops,time_ms,"
          "utilization,energy_uj,eneff_tops_w\n";
    for (const auto& l : r.layers) {
        const auto& s = l.layer;
        os << r.network << ',' << s.name << ',' << s.n_in << ',' << s.n_out << ',' << s.h_im << ',' << s.w_im
           << ',' << s.h_k << ',' << to_string(s.padding) << ',' << l.blocks << ',' << fmt("%.4f", l.ops * 1e-9)
           << ',' << fmt("%.2f", l.throughput() * 1e-9) << ',' << fmt("%.4f", l.time_s * 1e3) << ','
           << fmt("%.3f", l.utilization) << ',' << fmt("%.3f", l.energy_j * 1e6) << ','
           << fmt("%.2f", l.energy_j > 0 ? l.ops / l.energy_j * 1e-12 : 0) << '\n';
    }
    if (!r.layers.empty())
        os << r.network << ",total,,,,,,,," << fmt("%.4f", r.ops * 1e-9) << ',' << fmt("%.2f", r.throughput() * 1e-9)
           << ',' << fmt("%.4f", r.time_s * 1e3) << ',' << fmt("%.3f", r.utilization()) << ','
           << fmt("%.3f", r.energy_j * 1e6) << ',' << fmt("%.2f", r.energy_efficiency() * 1e-12) << '\n';
}

void write_report_table(std::ostream& os, const PerfReport& r) {
    char line[256];
    std::snprintf(line, sizeof line, "%s @ %.2f V, %.3f MHz (%s)\n", r.network.c_str(), r.vdd, r.f_hz * 1e-6,
                  r.variant.c_str());
    os << line;
    std::snprintf(line, sizeof line, "%-12s %5s %5s %5s %3s %6s %9s %9s %10s %6s %10s\n", "layer", "n_in", "n_out",
                  "h_im", "k", "blocks", "GOp", "GOp/s", "ms", "P~", "uJ");
    os << line;
    for (const auto& l : r.layers) {
        std::snprintf(line, sizeof line, "%-12s %5d %5d %5d %3d %6d %9.4f %9.2f %10.4f %6.3f %10.3f\n",
                      l.layer.name.c_str(), l.layer.n_in, l.layer.n_out, l.layer.h_im, l.layer.h_k, l.blocks,
                      l.ops * 1e-9, l.throughput() * 1e-9, l.time_s * 1e3, l.utilization, l.energy_j * 1e6);
        os << line;
    }
    os << '\n';
    std::snprintf(line, sizeof line, "%-14s %8s %12s %10s %10s %10s\n", "network", "img", "EnEff", "Theta",
                  "FPS", "Energy");
    os << line;
    std::snprintf(line, sizeof line, "%-14s %8s %12s %10s %10s %10s\n", "", "", "[TOp/s/W]", "[GOp/s]", "[1/s]",
                  "[uJ]");
    os << line;
    if (r.layers.empty()) return;
    std::string img = std::to_string(r.image) + "^2";
    std::snprintf(line, sizeof line, "%-14s %8s %12.1f %10.1f %10.1f %10.0f\n", r.network.c_str(), img.c_str(),
                  r.energy_efficiency() * 1e-12, r.throughput() * 1e-9, r.fps(), r.energy_j * 1e6);
    os << line;
}

}  // namespace bwsim::netmodel
