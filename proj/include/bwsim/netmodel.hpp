#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bwsim/core.hpp"
#include "bwsim/golden.hpp"
#include "bwsim/power.hpp"
#include "bwsim/types.hpp"

namespace bwsim::netmodel {

struct NetworkSpec {
    std::string name;
    std::string source;
    int image = 0;  // network input size; 0 -> first layer's h_im
    std::vector<LayerSpec> layers;

    void validate() const;  // layer shapes and channel chaining
};

// Line records, '#' comments:
//   network <name>
//   source <free text>
//   image <input size>
//   layer <name> <n_in> <n_out> <h_im> <w_im> <h_k> <same|valid>
NetworkSpec parse_network(std::istream& is);
NetworkSpec load_network(const std::string& path);

struct BlockEntry {
    int in_begin = 0, in_end = 0;
    int out_begin = 0, out_end = 0;
    int row_begin = 0, row_end = 0;  // output rows
};

struct BlockPlan {
    LayerSpec layer;
    core::SopMode mode;
    int in_blocks = 0, out_blocks = 0, tiles = 0;
    std::vector<BlockEntry> entries;  // tile, output block, input block order
    double offchip_ops = 0;           // (in_blocks - 1) adds per output sample
};

// throws ConfigError for kernels the accelerator cannot run directly
BlockPlan plan_blocks(const LayerSpec& layer, const core::AccelConfig& cfg);

struct SplitPart {
    golden::BinaryFilter filter;
    int row_offset = 0;
    int col_offset = 0;
};

// Four sub-kernels covering an 11x11 kernel; the centre tap (5,5) is covered by
// both 6x6 parts. The first 6x6 part always carries +1 there and the second the
// original weight, so one identity (the centre input pixel summed over input
// channels) is subtracted per output pixel.
struct SplitKernel {
    std::array<SplitPart, 4> parts;  // top-left 6x6, bottom-right 6x6, top-right 5x5, bottom-left 5x5
    int identity_corrections = 1;
    static constexpr int center = 5;
};

SplitKernel split_kernel_11(const golden::BinaryFilter& filter);

golden::PartialSums offchip_accumulate(std::span<const golden::PartialSums> blocks);

struct LayerSimResult {
    golden::FeatureMap output;
    golden::PartialSums sums;
    core::CycleReport cycles;
    golden::SaturationStats saturation;
    int blocks = 0;
};

// Bit-true run of a whole layer through channel blocks and tiles; 11x11 kernels
// go through split_kernel_11. Off-chip accumulation is exact; scale-bias runs
// once on the final sums.
LayerSimResult simulate_layer(const core::AccelConfig& cfg, const LayerSpec& layer,
                              const golden::FeatureMap& input, const golden::FilterSet& filters,
                              std::span<const golden::ChannelAffine> affine,
                              const core::SimOptions& opt = {});

struct LayerPerf {
    LayerSpec layer;
    int blocks = 0;
    double ops = 0;
    double offchip_ops = 0;
    double time_s = 0;
    double energy_j = 0;
    double eta_tile = 1;       // of the layer's first sub-layer
    double eta_ch_idle = 1;    // cycle-weighted over blocks
    double utilization = 0;    // P_eff / P_max
    double throughput() const { return time_s > 0 ? ops / time_s : 0; }
};

struct PerfReport {
    std::string network;
    std::string variant;
    double vdd = 0;
    double f_hz = 0;
    int image = 0;
    std::vector<LayerPerf> layers;
    double ops = 0;
    double time_s = 0;
    double energy_j = 0;
    double p_max_w = 0;

    double throughput() const { return time_s > 0 ? ops / time_s : 0; }
    double fps() const { return time_s > 0 ? 1.0 / time_s : 0; }
    double energy_efficiency() const { return energy_j > 0 ? ops / energy_j : 0; }
    double utilization() const { return time_s > 0 && p_max_w > 0 ? energy_j / time_s / p_max_w : 0; }
};

// Analytic evaluation: per channel block, time = ops / (peak * eta_tile * eta_ch_idle *
// eta_occupancy * eta_border), power = core_power(utilization = eta_ch_idle * eta_occupancy)
// scaled by the native mode's power ratio. Ops use output pixels. Off-chip work excluded.
PerfReport evaluate_network(const NetworkSpec& net, const core::AccelConfig& cfg,
                            const power::OperatingPoint& pt, const power::Calibration& cal);

void write_report_csv(std::ostream& os, const PerfReport& r);
void write_report_table(std::ostream& os, const PerfReport& r);

}  // namespace bwsim::netmodel
