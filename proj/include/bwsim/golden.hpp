#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bwsim/fxp.hpp"
#include "bwsim/types.hpp"

namespace bwsim::golden {

// Square kernel of +-1 weights, stored as bits: -1 -> 0, +1 -> 1.
class BinaryFilter {
public:
    static constexpr int kMaxSize = 11;

    BinaryFilter() = default;
    explicit BinaryFilter(int size);  // all weights -1

    int size() const { return size_; }
    int weight(int row, int col) const { return bits_[idx(row, col)] ? 1 : -1; }
    std::uint8_t bit(int row, int col) const { return bits_[idx(row, col)]; }
    void set(int row, int col, int w);  // w must be +-1
    void set_bit(int row, int col, std::uint8_t b) { bits_[idx(row, col)] = b ? 1 : 0; }
    BinaryFilter negated() const;

    const std::vector<std::uint8_t>& bits() const { return bits_; }
    bool operator==(const BinaryFilter&) const = default;

private:
    std::size_t idx(int row, int col) const { return std::size_t(row) * size_ + col; }
    int size_ = 0;
    std::vector<std::uint8_t> bits_;
};

// n_out x n_in filters of one kernel size.
class FilterSet {
public:
    FilterSet() = default;
    FilterSet(int n_out, int n_in, int k);

    int n_out() const { return n_out_; }
    int n_in() const { return n_in_; }
    int kernel() const { return k_; }
    BinaryFilter& at(int out, int in) { return f_[std::size_t(out) * n_in_ + in]; }
    const BinaryFilter& at(int out, int in) const { return f_[std::size_t(out) * n_in_ + in]; }

    // channel sub-range [out0, out1) x [in0, in1)
    FilterSet slice(int out0, int out1, int in0, int in1) const;
    FilterSet negated() const;

    bool operator==(const FilterSet&) const = default;

private:
    int n_out_ = 0, n_in_ = 0, k_ = 0;
    std::vector<BinaryFilter> f_;
};

// channels x rows x cols of raw samples sharing one format (Q2.9 by default)
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int channels, int h, int w, fxp::QFormat fmt = fxp::kQ2_9);

    int channels() const { return c_; }
    int height() const { return h_; }
    int width() const { return w_; }
    fxp::QFormat format() const { return fmt_; }

    std::int32_t raw(int c, int r, int col) const { return v_[idx(c, r, col)]; }
    void set_raw(int c, int r, int col, std::int64_t raw);  // range-checked
    fxp::FxSample sample(int c, int r, int col) const { return {raw(c, r, col), fmt_}; }

    FeatureMap slice_channels(int c0, int c1) const;
    const std::vector<std::int32_t>& data() const { return v_; }

    bool operator==(const FeatureMap&) const = default;

private:
    std::size_t idx(int c, int r, int col) const { return (std::size_t(c) * h_ + r) * w_ + col; }
    int c_ = 0, h_ = 0, w_ = 0;
    fxp::QFormat fmt_ = fxp::kQ2_9;
    std::vector<std::int32_t> v_;
};

// Exact pre-affine channel sums; raw units share the activation frac bits (2^-9).
struct PartialSums {
    int channels = 0, h = 0, w = 0;
    std::vector<std::int64_t> v;

    PartialSums() = default;
    PartialSums(int c, int h_, int w_) : channels(c), h(h_), w(w_), v(std::size_t(c) * h_ * w_, 0) {}
    std::int64_t& at(int c, int r, int col) { return v[(std::size_t(c) * h + r) * w + col]; }
    std::int64_t at(int c, int r, int col) const { return v[(std::size_t(c) * h + r) * w + col]; }
    bool operator==(const PartialSums&) const = default;
};

struct ChannelAffine {
    fxp::FxSample scale{512, fxp::kQ2_9};
    fxp::FxSample bias{0, fxp::kQ2_9};

    static ChannelAffine identity() { return {}; }
    bool operator==(const ChannelAffine&) const = default;
};

struct SaturationStats {
    std::uint64_t channel_sum = 0;  // Q7.9 clamps
    std::uint64_t output = 0;       // Q2.9 clamps
    std::uint64_t total() const { return channel_sum + output; }
    SaturationStats& operator+=(const SaturationStats& o) {
        channel_sum += o.channel_sum;
        output += o.output;
        return *this;
    }
};

// When the channel sum is clamped to Q7.9.
enum class SumSaturation { at_readout, per_channel };

int binarize_det(double w);
double hard_sigmoid(double x);
int binarize_sto(double w, double u);

std::vector<ChannelAffine> identity_affine(int n_out);

// Exact sums over all input channels, no narrowing.
PartialSums conv_partial_sums(const FeatureMap& input, const FilterSet& filters, Padding padding);

// Q7.9 view -> x alpha (Q10.18) -> + beta<<9 -> Q2.9.
fxp::FxSample scale_bias(std::int64_t channel_sum_raw, const ChannelAffine& affine,
                         SaturationStats* sat = nullptr);

FeatureMap conv_layer_golden(const FeatureMap& input, const FilterSet& filters,
                             std::span<const ChannelAffine> affine, Padding padding,
                             SumSaturation mode = SumSaturation::at_readout,
                             SaturationStats* sat = nullptr);

// Fixture text formats. Readers throw ParseError.
void write_feature_map(std::ostream& os, const FeatureMap& fm);
FeatureMap read_feature_map(std::istream& is);
void write_filters(std::ostream& os, const FilterSet& fs);
FilterSet read_filters(std::istream& is);
void write_affine(std::ostream& os, std::span<const ChannelAffine> a);
std::vector<ChannelAffine> read_affine(std::istream& is);

FeatureMap load_feature_map(const std::string& path);
void save_feature_map(const std::string& path, const FeatureMap& fm);
FilterSet load_filters(const std::string& path);
std::vector<ChannelAffine> load_affine(const std::string& path);

}  // namespace bwsim::golden
