#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bwsim/golden.hpp"
#include "bwsim/types.hpp"

namespace bwsim::core {

// kernel k runs on the native adder-tree layout `native` (zero-masked when k < native)
struct ModeEntry {
    int kernel = 0;
    int native = 0;
    int filters_per_sop = 1;
    bool operator==(const ModeEntry&) const = default;
};

struct AccelConfig {
    int n_ch = 32;
    int image_mem_rows = 1024;  // words per stripe column
    int image_mem_cols = 7;     // stripe width
    int scm_grid_cols = 6;      // bank grid: scm_grid_cols x scm_grid_rows banks
    int scm_grid_rows = 8;
    int scm_bank_words = 128;
    int output_streams = 2;
    int sop_lanes = 50;
    std::vector<ModeEntry> modes = default_modes();

    static std::vector<ModeEntry> default_modes();
    int scm_banks() const { return scm_grid_cols * scm_grid_rows; }
    int h_max(int n_in_block) const { return image_mem_rows / n_in_block; }
    std::uint64_t filter_bank_bits() const { return std::uint64_t(n_ch) * n_ch * 49; }
    void validate() const;  // throws ConfigError
};

// Text format, one "key value..." per line, '#' comments:
//   n_ch 32 | image_mem_rows 1024 | image_mem_cols 7 | scm_grid 6 8 | scm_bank_words 128
//   output_streams 2 | sop_lanes 50 | mode <kernel> <native> <filters_per_sop>
// Any "mode" line replaces the default mode table.
AccelConfig parse_accel_config(std::istream& is);
AccelConfig load_accel_config(const std::string& path);
void write_accel_config(std::ostream& os, const AccelConfig& cfg);

struct SopMode {
    int kernel = 7;
    int native = 7;
    int filters_per_sop = 1;

    int active_multipliers() const { return filters_per_sop * kernel * kernel; }
    int max_out_block(int n_ch) const { return filters_per_sop * n_ch; }
    int outputs_per_cycle(const AccelConfig& cfg) const {
        return filters_per_sop < cfg.output_streams ? filters_per_sop : cfg.output_streams;
    }
    // lane of filter slot f (0 or 1), window row/col
    int lane(int f, int row, int col) const { return f * 25 + row * native + col; }
};

// throws ConfigError for kernels without a mode entry
SopMode sop_mode(const AccelConfig& cfg, int k);

inline constexpr int kSopLanes = 50;
using LaneBits = std::array<std::uint8_t, kSopLanes>;

// Pixels on the multiplier lanes of one SoP; disabled lanes are silenced.
struct SopWindow {
    std::array<std::int32_t, kSopLanes> pixel{};
    std::array<std::uint8_t, kSopLanes> enabled{};
};

struct SopOutput {
    std::int64_t a = 0;  // filter slot 0 (lanes 0..24, or 0..48 for 7x7)
    std::int64_t b = 0;  // filter slot 1 (lanes 25..49), dual modes only
};

SopOutput sop_compute(const SopWindow& w, const LaneBits& bits, const SopMode& mode);

// Weights of one channel block, laid out per (SoP unit, input channel) on the lanes.
// Output channel o of the block lives on SoP o % n_ch, filter slot o / n_ch.
class FilterBankState {
public:
    FilterBankState() = default;

    int n_out() const { return n_out_; }
    int n_in() const { return n_in_; }
    int n_sop() const { return n_sop_; }
    const SopMode& mode() const { return mode_; }
    int shift_offset() const { return shift_; }
    std::uint64_t stored_bits() const { return std::uint64_t(n_out_) * n_in_ * mode_.kernel * mode_.kernel; }

    const LaneBits& lanes(int sop, int in) const { return bits_[std::size_t(sop) * n_in_ + in]; }
    // weight bit of block output o, input n at bank position (row, col)
    std::uint8_t bit(int o, int n, int row, int col) const;
    bool has_output(int sop, int f) const { return f * n_ch_ + sop < n_out_; }

    void shift();  // right circular column shift of every kernel

    friend FilterBankState load_filters(const AccelConfig&, const SopMode&, const golden::FilterSet&);

private:
    SopMode mode_;
    int n_ch_ = 0, n_out_ = 0, n_in_ = 0, n_sop_ = 0, shift_ = 0;
    std::vector<LaneBits> bits_;
};

// throws ConfigError on oversize block or kernel mismatch
FilterBankState load_filters(const AccelConfig& cfg, const SopMode& mode, const golden::FilterSet& block);
FilterBankState shift_weights(FilterBankState state);

// Bank access masks of one cycle (bit b = bank b).
struct BankSet {
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
    int active() const;
};

struct CycleReport {
    std::uint64_t preload_cycles = 0;
    std::uint64_t compute_cycles = 0;
    std::uint64_t idle_cycles = 0;
    std::uint64_t tile_overlap_cycles = 0;
    std::uint64_t scm_reads = 0;
    std::uint64_t scm_writes = 0;
    std::uint64_t pixels_in = 0;
    std::uint64_t pixels_out = 0;
    // sum over compute cycles of output channels served; utilization numerator
    std::uint64_t output_lane_cycles = 0;
    std::vector<std::uint64_t> active_bank_histogram;  // [n] = cycles with n active banks

    std::uint64_t total_cycles() const {
        return preload_cycles + compute_cycles + idle_cycles + tile_overlap_cycles;
    }
    int max_active_banks() const;
    CycleReport& operator+=(const CycleReport& o);
};

void write_cycle_report(std::ostream& os, const CycleReport& r);

// circular: fixed bank positions with weight shifts; shifted: image columns moved, weights fixed
enum class ColumnAddressing { circular, shifted };

struct SimOptions {
    golden::SumSaturation sum_mode = golden::SumSaturation::at_readout;
    ColumnAddressing addressing = ColumnAddressing::circular;
    std::ostream* trace = nullptr;   // "cycle unit action" lines
    bool record_bank_sets = false;
};

// Output rows [row_begin, row_end) of the layer; row_end < 0 means all rows.
struct BlockTile {
    int row_begin = 0;
    int row_end = -1;
};

struct BlockResult {
    int row_offset = 0;
    golden::PartialSums sums;        // exact, pre-affine, tile rows only
    golden::FeatureMap output;       // after scale-bias; empty when no affine given
    CycleReport cycles;
    golden::SaturationStats saturation;
    std::vector<BankSet> bank_sets;  // per cycle, if recorded
};

// `layer` describes the block: its n_in/n_out are the block's channel counts.
// `affine` empty -> only exact sums are produced.
BlockResult simulate_layer_block(const AccelConfig& cfg, const LayerSpec& layer,
                                 const golden::FeatureMap& input, const golden::FilterSet& filters,
                                 std::span<const golden::ChannelAffine> affine, BlockTile tile = {},
                                 const SimOptions& opt = {});

// Cycle fields of simulate_layer_block without running the datapath.
CycleReport estimate_block_cycles(const AccelConfig& cfg, const LayerSpec& layer, BlockTile tile = {});

// Zero outside the image.
std::int32_t zero_pad_view(const golden::FeatureMap& fm, int c, int row, int col);

// Image-bank window of one input channel placed on the lanes of `mode`.
// window[row * k + col]; positions outside k x k are masked.
SopWindow window_lanes(std::span<const std::int32_t> window, const SopMode& mode);

struct StreamBeat {
    int cycle = 0;    // relative to the pixel's first output cycle
    int channel = 0;  // block output channel
    fxp::FxSample value;
};

// One pixel's channel sums through the scale-bias unit in emission order:
// SoP by SoP, both filter slots of a SoP side by side, outputs_per_cycle per cycle.
std::vector<StreamBeat> scale_bias_stream(const AccelConfig& cfg, const SopMode& mode,
                                          std::span<const std::int64_t> sums,
                                          std::span<const golden::ChannelAffine> affine,
                                          golden::SaturationStats* sat = nullptr);

struct ScmActivity {
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
    int max_active = 0;
    std::vector<std::uint64_t> histogram;
};

ScmActivity scm_activity(std::span<const BankSet> per_cycle);

}  // namespace bwsim::core
