#include "bwsim/golden.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace bwsim::golden {

BinaryFilter::BinaryFilter(int size) : size_(size) {
    if (size < 1 || size > kMaxSize)
        throw ConfigError("filter size " + std::to_string(size) + " outside 1.." +
                          std::to_string(kMaxSize));
    bits_.assign(std::size_t(size) * size, 0);
}

void BinaryFilter::set(int row, int col, int w) {
    if (w != 1 && w != -1) throw std::invalid_argument("binary weight must be +1 or -1");
    bits_[idx(row, col)] = w > 0 ? 1 : 0;
}

BinaryFilter BinaryFilter::negated() const {
    BinaryFilter f = *this;
    for (auto& b : f.bits_) b ^= 1;
    return f;
}

FilterSet::FilterSet(int n_out, int n_in, int k) : n_out_(n_out), n_in_(n_in), k_(k) {
    if (n_out < 1 || n_in < 1) throw ConfigError("filter set needs positive channel counts");
    f_.assign(std::size_t(n_out) * n_in, BinaryFilter(k));
}

FilterSet FilterSet::slice(int out0, int out1, int in0, int in1) const {
    if (out0 < 0 || out1 > n_out_ || in0 < 0 || in1 > n_in_ || out0 >= out1 || in0 >= in1)
        throw ConfigError("filter slice out of range");
    FilterSet s(out1 - out0, in1 - in0, k_);
    for (int o = out0; o < out1; ++o)
        for (int i = in0; i < in1; ++i) s.at(o - out0, i - in0) = at(o, i);
    return s;
}

FilterSet FilterSet::negated() const {
    FilterSet s = *this;
    for (auto& f : s.f_) f = f.negated();
    return s;
}

FeatureMap::FeatureMap(int channels, int h, int w, fxp::QFormat fmt)
    : c_(channels), h_(h), w_(w), fmt_(fmt) {
    if (channels < 1 || h < 1 || w < 1) throw ConfigError("feature map dimensions must be positive");
    if (fmt.width() > 32) throw ConfigError("feature map format wider than 32 bits");
    v_.assign(std::size_t(channels) * h * w, 0);
}

void FeatureMap::set_raw(int c, int r, int col, std::int64_t raw) {
    if (raw < fmt_.raw_min() || raw > fmt_.raw_max())
        throw std::out_of_range("sample " + std::to_string(raw) + " outside " + fmt_.name());
    v_[idx(c, r, col)] = static_cast<std::int32_t>(raw);
}

FeatureMap FeatureMap::slice_channels(int c0, int c1) const {
    if (c0 < 0 || c1 > c_ || c0 >= c1) throw ConfigError("channel slice out of range");
    FeatureMap s(c1 - c0, h_, w_, fmt_);
    std::copy(v_.begin() + std::ptrdiff_t(idx(c0, 0, 0)), v_.begin() + std::ptrdiff_t(idx(c1, 0, 0)),
              s.v_.begin());
    return s;
}

int binarize_det(double w) { return w >= 0.0 ? 1 : -1; }

double hard_sigmoid(double x) { return std::clamp((x + 1.0) / 2.0, 0.0, 1.0); }

int binarize_sto(double w, double u) { return u < hard_sigmoid(w) ? 1 : -1; }

std::vector<ChannelAffine> identity_affine(int n_out) {
    return std::vector<ChannelAffine>(std::size_t(n_out), ChannelAffine::identity());
}

namespace {

void check_conv_args(const FeatureMap& input, const FilterSet& filters, Padding padding) {
    LayerSpec l{"golden", input.channels(), filters.n_out(), input.height(), input.width(),
                filters.kernel(), padding};
    if (filters.n_in() != input.channels())
        throw ConfigError("filters expect " + std::to_string(filters.n_in()) +
                          " input channels, image has " + std::to_string(input.channels()));
    l.validate();
}

// sum over one input channel's window
std::int64_t window_sum(const FeatureMap& in, const BinaryFilter& f, int n, int r0, int c0) {
    const int k = f.size();
    std::int64_t s = 0;
    for (int a = 0; a < k; ++a) {
        int r = r0 + a;
        if (r < 0 || r >= in.height()) continue;
        for (int b = 0; b < k; ++b) {
            int c = c0 + b;
            if (c < 0 || c >= in.width()) continue;
            std::int64_t x = in.raw(n, r, c);
            s += f.bit(a, b) ? x : -x;
        }
    }
    return s;
}

}  // namespace

PartialSums conv_partial_sums(const FeatureMap& input, const FilterSet& filters, Padding padding) {
    check_conv_args(input, filters, padding);
    LayerSpec l{"", input.channels(), filters.n_out(), input.height(), input.width(),
                filters.kernel(), padding};
    PartialSums out(filters.n_out(), l.out_h(), l.out_w());
    const int p = l.pad();
    for (int o = 0; o < filters.n_out(); ++o)
        for (int r = 0; r < out.h; ++r)
            for (int c = 0; c < out.w; ++c) {
                std::int64_t s = 0;
                for (int n = 0; n < input.channels(); ++n)
                    s += window_sum(input, filters.at(o, n), n, r - p, c - p);
                out.at(o, r, c) = s;
            }
    return out;
}

fxp::FxSample scale_bias(std::int64_t channel_sum_raw, const ChannelAffine& affine,
                         SaturationStats* sat) {
    std::uint64_t sum_sat = 0, out_sat = 0;
    fxp::FxSample sum(fxp::saturate_raw(channel_sum_raw, fxp::kQ7_9, &sum_sat), fxp::kQ7_9);
    fxp::FxSample prod = fxp::mul_qq(sum, affine.scale);  // Q10.18
    fxp::FxSample bias = fxp::align(affine.bias, prod.format());
    fxp::FxSample acc = fxp::add_sat(prod, bias);
    fxp::FxSample out = fxp::saturate_truncate(acc, fxp::kQ2_9, &out_sat);
    if (sat) {
        sat->channel_sum += sum_sat;
        sat->output += out_sat;
    }
    return out;
}

FeatureMap conv_layer_golden(const FeatureMap& input, const FilterSet& filters,
                             std::span<const ChannelAffine> affine, Padding padding,
                             SumSaturation mode, SaturationStats* sat) {
    check_conv_args(input, filters, padding);
    if (affine.size() != std::size_t(filters.n_out()))
        throw ConfigError("need one scale/bias pair per output channel");
    if (input.format() != fxp::kQ2_9) throw ConfigError("golden conv expects Q2.9 input");
    LayerSpec l{"", input.channels(), filters.n_out(), input.height(), input.width(),
                filters.kernel(), padding};
    FeatureMap out(filters.n_out(), l.out_h(), l.out_w());
    const int p = l.pad();
    SaturationStats local;
    for (int o = 0; o < filters.n_out(); ++o)
        for (int r = 0; r < out.height(); ++r)
            for (int c = 0; c < out.width(); ++c) {
                std::int64_t s = 0;
                for (int n = 0; n < input.channels(); ++n) {
                    s += window_sum(input, filters.at(o, n), n, r - p, c - p);
                    if (mode == SumSaturation::per_channel)
                        s = fxp::saturate_raw(s, fxp::kQ7_9, &local.channel_sum);
                }
                out.set_raw(o, r, c, scale_bias(s, affine[o], &local).raw());
            }
    if (sat) *sat += local;
    return out;
}

// ---- fixture files ----------------------------------------------------------
//
// bwtensor 1
// format Q2.9
// shape <channels> <rows> <cols>
// <raw integers, one image row per line, channels in order>
//
// bwfilters 1
// shape <n_out> <n_in> <k>
// <k lines of k chars in {0,1} per filter, filters ordered out-major>
//
// bwaffine 1
// count <n_out>
// <alpha_raw> <beta_raw>   (Q2.9 raw integers, one line per output channel)
//
// '#' starts a comment line.

namespace {

class TokenReader {
public:
    explicit TokenReader(std::istream& is) {
        std::string line;
        while (std::getline(is, line)) {
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream ls(line);
            std::string t;
            while (ls >> t) toks_.push_back(t);
        }
    }
    bool done() const { return pos_ >= toks_.size(); }
    std::string next(const char* what) {
        if (done()) throw ParseError(std::string("unexpected end of file, expected ") + what);
        return toks_[pos_++];
    }
    void expect(const std::string& word) {
        auto t = next(word.c_str());
        if (t != word) throw ParseError("expected '" + word + "', got '" + t + "'");
    }
    std::int64_t integer(const char* what) {
        auto t = next(what);
        try {
            std::size_t used = 0;
            long long v = std::stoll(t, &used);
            if (used != t.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ParseError(std::string("bad integer for ") + what + ": '" + t + "'");
        }
    }
    int positive(const char* what) {
        auto v = integer(what);
        if (v < 1 || v > (1 << 20)) throw ParseError(std::string(what) + " out of range");
        return int(v);
    }

private:
    std::vector<std::string> toks_;
    std::size_t pos_ = 0;
};

void expect_end(TokenReader& tr) {
    if (!tr.done()) throw ParseError("trailing data '" + tr.next("") + "'");
}

template <class F>
auto with_file(const std::string& path, F&& f) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open '" + path + "'");
    try {
        return f(is);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace

void write_feature_map(std::ostream& os, const FeatureMap& fm) {
    os << "bwtensor 1\nformat " << fm.format().name() << "\nshape " << fm.channels() << ' '
       << fm.height() << ' ' << fm.width() << '\n';
    for (int c = 0; c < fm.channels(); ++c)
        for (int r = 0; r < fm.height(); ++r) {
            for (int x = 0; x < fm.width(); ++x) os << (x ? " " : "") << fm.raw(c, r, x);
            os << '\n';
        }
}

FeatureMap read_feature_map(std::istream& is) {
    TokenReader tr(is);
    tr.expect("bwtensor");
    if (tr.integer("version") != 1) throw ParseError("unsupported bwtensor version");
    tr.expect("format");
    fxp::QFormat fmt;
    try {
        fmt = fxp::QFormat::parse(tr.next("format"));
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
    if (fmt.width() > 32) throw ParseError("tensor format wider than 32 bits");
    tr.expect("shape");
    int c = tr.positive("channels"), h = tr.positive("rows"), w = tr.positive("cols");
    FeatureMap fm(c, h, w, fmt);
    for (int n = 0; n < c; ++n)
        for (int r = 0; r < h; ++r)
            for (int x = 0; x < w; ++x) {
                auto v = tr.integer("sample");
                if (v < fmt.raw_min() || v > fmt.raw_max())
                    throw ParseError("sample " + std::to_string(v) + " outside " + fmt.name());
                fm.set_raw(n, r, x, v);
            }
    expect_end(tr);
    return fm;
}

void write_filters(std::ostream& os, const FilterSet& fs) {
    os << "bwfilters 1\nshape " << fs.n_out() << ' ' << fs.n_in() << ' ' << fs.kernel() << '\n';
    for (int o = 0; o < fs.n_out(); ++o)
        for (int i = 0; i < fs.n_in(); ++i)
            for (int a = 0; a < fs.kernel(); ++a) {
                for (int b = 0; b < fs.kernel(); ++b) os << char('0' + fs.at(o, i).bit(a, b));
                os << '\n';
            }
}

FilterSet read_filters(std::istream& is) {
    TokenReader tr(is);
    tr.expect("bwfilters");
    if (tr.integer("version") != 1) throw ParseError("unsupported bwfilters version");
    tr.expect("shape");
    int n_out = tr.positive("n_out"), n_in = tr.positive("n_in"), k = tr.positive("k");
    if (k > BinaryFilter::kMaxSize) throw ParseError("kernel size too large");
    FilterSet fs(n_out, n_in, k);
    for (int o = 0; o < n_out; ++o)
        for (int i = 0; i < n_in; ++i)
            for (int a = 0; a < k; ++a) {
                auto row = tr.next("filter row");
                if (int(row.size()) != k || row.find_first_not_of("01") != std::string::npos)
                    throw ParseError("filter row '" + row + "' is not " + std::to_string(k) +
                                     " binary digits");
                for (int b = 0; b < k; ++b) fs.at(o, i).set_bit(a, b, row[b] == '1');
            }
    expect_end(tr);
    return fs;
}

void write_affine(std::ostream& os, std::span<const ChannelAffine> a) {
    os << "bwaffine 1\ncount " << a.size() << '\n';
    for (const auto& x : a) os << x.scale.raw() << ' ' << x.bias.raw() << '\n';
}

std::vector<ChannelAffine> read_affine(std::istream& is) {
    TokenReader tr(is);
    tr.expect("bwaffine");
    if (tr.integer("version") != 1) throw ParseError("unsupported bwaffine version");
    tr.expect("count");
    int n = tr.positive("count");
    std::vector<ChannelAffine> a;
    for (int i = 0; i < n; ++i) {
        auto s = tr.integer("scale"), b = tr.integer("bias");
        try {
            a.push_back({fxp::FxSample(s, fxp::kQ2_9), fxp::FxSample(b, fxp::kQ2_9)});
        } catch (const std::out_of_range& e) {
            throw ParseError(e.what());
        }
    }
    expect_end(tr);
    return a;
}

FeatureMap load_feature_map(const std::string& path) {
    return with_file(path, [](std::istream& is) { return read_feature_map(is); });
}

void save_feature_map(const std::string& path, const FeatureMap& fm) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write '" + path + "'");
    write_feature_map(os, fm);
}

FilterSet load_filters(const std::string& path) {
    return with_file(path, [](std::istream& is) { return read_filters(is); });
}

std::vector<ChannelAffine> load_affine(const std::string& path) {
    return with_file(path, [](std::istream& is) { return read_affine(is); });
}

}  // namespace bwsim::golden
