#pragma once

#include <cstdint>
#include <span>

#include "bwsim/core.hpp"
#include "bwsim/types.hpp"

namespace bwsim::metrics {

// valid_positions: (h-k+1)(w-k+1) positions; output_pixels: positions actually produced
// (h*w for zero-padded layers, same as valid_positions for valid ones)
enum class OpCount { valid_positions, output_pixels };

double count_ops(const LayerSpec& layer, OpCount convention = OpCount::valid_positions);

// Op/s
double peak_throughput(const core::AccelConfig& cfg, const core::SopMode& mode, double f_hz);

double eta_tile(int h_im, int h_max, int h_k);
double eta_ch_idle(int n_in_block, int n_out_block);
double eta_border(const LayerSpec& layer);
// fraction of the SoP units with an output channel to serve
double eta_occupancy(int n_out_block, const core::SopMode& mode, int n_ch);

double real_throughput(double peak, std::span<const double> etas);

struct Efficiency {
    double energy = 0;  // Op/s/W
    double area = 0;    // Op/s/MGE
};

Efficiency efficiencies(double throughput, double power_w, double area_mge);

struct EfficiencyReport {
    double ops = 0;
    double peak = 0;  // Op/s
    double real = 0;  // Op/s
    double eta_tile = 1, eta_ch_idle = 1, eta_border = 1;
    double h_e = 0;   // Op/s/W
    double h_a = 0;   // Op/s/MGE
};

// Layer run as a single full block (n_in <= n_ch, n_out within the mode's output block).
EfficiencyReport analyze_layer(const core::AccelConfig& cfg, const LayerSpec& layer, double f_hz,
                               double power_w, double area_mge,
                               OpCount convention = OpCount::valid_positions);

}  // namespace bwsim::metrics
