#include "bwsim/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace bwsim::metrics {

double count_ops(const LayerSpec& layer, OpCount convention) {
    layer.validate();
    double k2 = double(layer.h_k) * layer.h_k;
    double positions = convention == OpCount::output_pixels
                           ? double(layer.out_h()) * layer.out_w()
                           : double(layer.h_im - layer.h_k + 1) * (layer.w_im - layer.h_k + 1);
    if (positions <= 0) return 0.0;
    return 2.0 * layer.n_out * layer.n_in * k2 * positions;
}

double peak_throughput(const core::AccelConfig& cfg, const core::SopMode& mode, double f_hz) {
    if (!(f_hz > 0)) throw ConfigError("frequency must be positive");
    return 2.0 * mode.active_multipliers() * cfg.n_ch * f_hz;
}

double eta_tile(int h_im, int h_max, int h_k) {
    if (h_max < h_k)
        throw ConfigError("h_max " + std::to_string(h_max) + " smaller than kernel " + std::to_string(h_k));
    if (h_im < 1) throw ConfigError("image height must be positive");
    int tiles = (h_im + h_max - 1) / h_max;
    return double(h_im) / (h_im + double(tiles - 1) * (h_k - 1));
}

double eta_ch_idle(int n_in_block, int n_out_block) {
    if (n_in_block < 1 || n_out_block < 1) throw ConfigError("channel counts must be positive");
    return std::min(1.0, double(n_in_block) / n_out_block);
}

double eta_border(const LayerSpec& layer) {
    layer.validate();
    if (layer.padding == Padding::zero_pad) return 1.0;
    double k1 = layer.h_k - 1;
    return 1.0 - (k1 / layer.w_im) * (k1 / layer.h_im);
}

double eta_occupancy(int n_out_block, const core::SopMode& mode, int n_ch) {
    return std::min(1.0, double(n_out_block) / mode.max_out_block(n_ch));
}

double real_throughput(double peak, std::span<const double> etas) {
    double t = peak;
    for (double e : etas) {
        if (!(e > 0.0 && e <= 1.0)) throw ConfigError("efficiency factor outside (0,1]");
        t *= e;
    }
    return t;
}

Efficiency efficiencies(double throughput, double power_w, double area_mge) {
    if (!(power_w > 0) || !(area_mge > 0)) throw ConfigError("power and area must be positive");
    return {throughput / power_w, throughput / area_mge};
}

EfficiencyReport analyze_layer(const core::AccelConfig& cfg, const LayerSpec& layer, double f_hz,
                               double power_w, double area_mge, OpCount convention) {
    core::SopMode mode = core::sop_mode(cfg, layer.h_k);
    if (layer.n_in > cfg.n_ch || layer.n_out > mode.max_out_block(cfg.n_ch))
        throw ConfigError("layer '" + layer.name + "' does not fit one channel block");
    EfficiencyReport r;
    r.ops = count_ops(layer, convention);
    r.peak = peak_throughput(cfg, mode, f_hz);
    r.eta_tile = eta_tile(layer.out_h(), cfg.h_max(layer.n_in), layer.h_k);
    int opc = mode.outputs_per_cycle(cfg);
    r.eta_ch_idle = eta_ch_idle(layer.n_in, (layer.n_out + opc - 1) / opc);
    r.eta_border = eta_border(layer);
    double etas[] = {r.eta_tile, r.eta_ch_idle, r.eta_border, eta_occupancy(layer.n_out, mode, cfg.n_ch)};
    r.real = real_throughput(r.peak, etas);
    auto e = efficiencies(r.real, power_w, area_mge);
    r.h_e = e.energy;
    r.h_a = e.area;
    return r;
}

}  // namespace bwsim::metrics
