#include "bwsim/core.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <fstream>
#include <ostream>
#include <sstream>

namespace bwsim::core {

std::vector<ModeEntry> AccelConfig::default_modes() {
    return {{1, 3, 2}, {2, 3, 2}, {3, 3, 2}, {4, 5, 2}, {5, 5, 2}, {6, 7, 1}, {7, 7, 1}};
}

void AccelConfig::validate() const {
    auto fail = [](const std::string& why) { throw ConfigError("accelerator config: " + why); };
    if (n_ch < 1 || n_ch > 1024) fail("n_ch must be in 1..1024");
    if (image_mem_rows < 1) fail("image_mem_rows must be positive");
    if (image_mem_cols < 1) fail("image_mem_cols must be positive");
    if (scm_grid_cols < 1 || scm_grid_rows < 1 || scm_banks() > 64)
        fail("SCM grid must hold 1..64 banks");
    if (scm_bank_words < 1) fail("scm_bank_words must be positive");
    if (output_streams < 1) fail("output_streams must be positive");
    if (sop_lanes != kSopLanes) fail("only 50-lane SoP units are modeled");
    if (modes.empty()) fail("empty mode table");
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const auto& m = modes[i];
        std::string tag = "mode " + std::to_string(m.kernel) + ": ";
        if (m.kernel < 1 || m.kernel > m.native) fail(tag + "kernel must be in 1..native");
        if (m.native > image_mem_cols) fail(tag + "native kernel wider than the image stripe");
        if (m.filters_per_sop == 1 && m.native * m.native > kSopLanes) fail(tag + "too many lanes");
        if (m.filters_per_sop == 2 && m.native > 5) fail(tag + "dual modes need native <= 5");
        if (m.filters_per_sop != 1 && m.filters_per_sop != 2) fail(tag + "filters_per_sop must be 1 or 2");
        for (std::size_t j = 0; j < i; ++j)
            if (modes[j].kernel == m.kernel) fail(tag + "duplicate entry");
    }
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream ls(line);
    std::vector<std::string> t;
    std::string w;
    while (ls >> w) t.push_back(w);
    return t;
}

int to_int(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("bad integer '" + s + "' for " + key);
}

}  // namespace

AccelConfig parse_accel_config(std::istream& is) {
    AccelConfig cfg;
    bool modes_seen = false;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        auto t = split_ws(line);
        if (t.empty()) continue;
        const std::string& key = t[0];
        auto need = [&](std::size_t n) {
            if (t.size() != n + 1)
                throw ParseError("line " + std::to_string(lineno) + ": '" + key + "' takes " +
                                 std::to_string(n) + " value(s)");
        };
        if (key == "n_ch") { need(1); cfg.n_ch = to_int(t[1], key); }
        else if (key == "image_mem_rows") { need(1); cfg.image_mem_rows = to_int(t[1], key); }
        else if (key == "image_mem_cols") { need(1); cfg.image_mem_cols = to_int(t[1], key); }
        else if (key == "scm_grid") {
            need(2);
            cfg.scm_grid_cols = to_int(t[1], key);
            cfg.scm_grid_rows = to_int(t[2], key);
        }
        else if (key == "scm_bank_words") { need(1); cfg.scm_bank_words = to_int(t[1], key); }
        else if (key == "output_streams") { need(1); cfg.output_streams = to_int(t[1], key); }
        else if (key == "sop_lanes") { need(1); cfg.sop_lanes = to_int(t[1], key); }
        else if (key == "mode") {
            need(3);
            if (!modes_seen) cfg.modes.clear();
            modes_seen = true;
            cfg.modes.push_back({to_int(t[1], key), to_int(t[2], key), to_int(t[3], key)});
        } else {
            throw ParseError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

AccelConfig load_accel_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open accelerator config '" + path + "'");
    try {
        return parse_accel_config(is);
    } catch (const ConfigError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_accel_config(std::ostream& os, const AccelConfig& cfg) {
    os << "n_ch " << cfg.n_ch << "\nimage_mem_rows " << cfg.image_mem_rows << "\nimage_mem_cols "
       << cfg.image_mem_cols << "\nscm_grid " << cfg.scm_grid_cols << ' ' << cfg.scm_grid_rows
       << "\nscm_bank_words " << cfg.scm_bank_words << "\noutput_streams " << cfg.output_streams
       << "\nsop_lanes " << cfg.sop_lanes << '\n';
    for (const auto& m : cfg.modes)
        os << "mode " << m.kernel << ' ' << m.native << ' ' << m.filters_per_sop << '\n';
}

SopMode sop_mode(const AccelConfig& cfg, int k) {
    for (const auto& m : cfg.modes)
        if (m.kernel == k) return {m.kernel, m.native, m.filters_per_sop};
    throw ConfigError("unsupported kernel size " + std::to_string(k));
}

SopOutput sop_compute(const SopWindow& w, const LaneBits& bits, const SopMode& mode) {
    SopOutput out;
    const int a_end = mode.filters_per_sop == 1 ? kSopLanes : 25;
    for (int l = 0; l < a_end; ++l) {
        std::int64_t x = w.enabled[l] ? w.pixel[l] : 0;
        out.a += bits[l] ? x : -x;
    }
    if (mode.filters_per_sop == 2) {
        for (int l = 25; l < kSopLanes; ++l) {
            std::int64_t x = w.enabled[l] ? w.pixel[l] : 0;
            out.b += bits[l] ? x : -x;
        }
    }
    return out;
}

std::uint8_t FilterBankState::bit(int o, int n, int row, int col) const {
    return lanes(o % n_ch_, n)[mode_.lane(o / n_ch_, row, col)];
}

void FilterBankState::shift() {
    const int k = mode_.kernel;
    for (auto& lb : bits_) {
        for (int f = 0; f < mode_.filters_per_sop; ++f)
            for (int r = 0; r < k; ++r) {
                std::uint8_t* row = lb.data() + mode_.lane(f, r, 0);
                std::rotate(row, row + (k - 1), row + k);  // new[c+1] = old[c]
            }
    }
    shift_ = (shift_ + 1) % k;
}

FilterBankState load_filters(const AccelConfig& cfg, const SopMode& mode, const golden::FilterSet& block) {
    if (block.kernel() != mode.kernel)
        throw ConfigError("filter kernel " + std::to_string(block.kernel()) + " does not match mode " +
                          std::to_string(mode.kernel));
    if (block.n_in() > cfg.n_ch || block.n_out() > mode.max_out_block(cfg.n_ch))
        throw ConfigError("filter block " + std::to_string(block.n_in()) + "x" +
                          std::to_string(block.n_out()) + " exceeds capacity " + std::to_string(cfg.n_ch) +
                          "x" + std::to_string(mode.max_out_block(cfg.n_ch)));
    FilterBankState s;
    s.mode_ = mode;
    s.n_ch_ = cfg.n_ch;
    s.n_out_ = block.n_out();
    s.n_in_ = block.n_in();
    s.n_sop_ = std::min(block.n_out(), cfg.n_ch);
    s.bits_.assign(std::size_t(s.n_sop_) * s.n_in_, LaneBits{});
    for (int o = 0; o < s.n_out_; ++o)
        for (int n = 0; n < s.n_in_; ++n) {
            auto& lb = s.bits_[std::size_t(o % cfg.n_ch) * s.n_in_ + n];
            for (int r = 0; r < mode.kernel; ++r)
                for (int c = 0; c < mode.kernel; ++c)
                    lb[mode.lane(o / cfg.n_ch, r, c)] = block.at(o, n).bit(r, c);
        }
    return s;
}

FilterBankState shift_weights(FilterBankState state) {
    state.shift();
    return state;
}

int BankSet::active() const { return std::popcount(reads | writes); }

int CycleReport::max_active_banks() const {
    for (int i = int(active_bank_histogram.size()) - 1; i >= 0; --i)
        if (active_bank_histogram[i]) return i;
    return 0;
}

CycleReport& CycleReport::operator+=(const CycleReport& o) {
    preload_cycles += o.preload_cycles;
    compute_cycles += o.compute_cycles;
    idle_cycles += o.idle_cycles;
    tile_overlap_cycles += o.tile_overlap_cycles;
    scm_reads += o.scm_reads;
    scm_writes += o.scm_writes;
    pixels_in += o.pixels_in;
    pixels_out += o.pixels_out;
    output_lane_cycles += o.output_lane_cycles;
    if (active_bank_histogram.size() < o.active_bank_histogram.size())
        active_bank_histogram.resize(o.active_bank_histogram.size(), 0);
    for (std::size_t i = 0; i < o.active_bank_histogram.size(); ++i)
        active_bank_histogram[i] += o.active_bank_histogram[i];
    return *this;
}

void write_cycle_report(std::ostream& os, const CycleReport& r) {
    os << "preload_cycles " << r.preload_cycles << "\ncompute_cycles " << r.compute_cycles
       << "\nidle_cycles " << r.idle_cycles << "\ntile_overlap_cycles " << r.tile_overlap_cycles
       << "\ntotal_cycles " << r.total_cycles() << "\nscm_reads " << r.scm_reads << "\nscm_writes "
       << r.scm_writes << "\npixels_in " << r.pixels_in << "\npixels_out " << r.pixels_out
       << "\nmax_active_banks " << r.max_active_banks() << "\nactive_bank_histogram";
    for (int i = 0; i <= r.max_active_banks() && i < int(r.active_bank_histogram.size()); ++i)
        os << ' ' << r.active_bank_histogram[i];
    os << '\n';
}

std::int32_t zero_pad_view(const golden::FeatureMap& fm, int c, int row, int col) {
    if (row < 0 || row >= fm.height() || col < 0 || col >= fm.width()) return 0;
    return fm.raw(c, row, col);
}

SopWindow window_lanes(std::span<const std::int32_t> window, const SopMode& mode) {
    const int k = mode.kernel;
    if (window.size() != std::size_t(k) * k) throw std::invalid_argument("window size != k*k");
    SopWindow w;
    for (int f = 0; f < mode.filters_per_sop; ++f)
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) {
                int l = mode.lane(f, r, c);
                w.pixel[l] = window[std::size_t(r) * k + c];
                w.enabled[l] = 1;
            }
    return w;
}

std::vector<StreamBeat> scale_bias_stream(const AccelConfig& cfg, const SopMode& mode,
                                          std::span<const std::int64_t> sums,
                                          std::span<const golden::ChannelAffine> affine,
                                          golden::SaturationStats* sat) {
    if (sums.size() != affine.size()) throw ConfigError("scale/bias count mismatch");
    const int n = int(sums.size());
    const int opc = mode.outputs_per_cycle(cfg);
    std::vector<StreamBeat> beats;
    for (int s = 0; s < std::min(n, cfg.n_ch); ++s)
        for (int f = 0; f < mode.filters_per_sop; ++f) {
            int o = f * cfg.n_ch + s;
            if (o >= n) continue;
            std::uint64_t sum_sat = 0, out_sat = 0;
            // channel summer readout, then the Q10.18 multiply-add
            fxp::FxSample cs(fxp::saturate_raw(sums[o], fxp::kQ7_9, &sum_sat), fxp::kQ7_9);
            fxp::FxSample scaled = fxp::mul_qq(cs, affine[o].scale);
            fxp::FxSample biased = fxp::add_sat(scaled, fxp::align(affine[o].bias, scaled.format()));
            fxp::FxSample q = fxp::saturate_truncate(biased, fxp::kQ2_9, &out_sat);
            if (sat) {
                sat->channel_sum += sum_sat;
                sat->output += out_sat;
            }
            beats.push_back({int(beats.size()) / opc, o, q});
        }
    return beats;
}

ScmActivity scm_activity(std::span<const BankSet> per_cycle) {
    ScmActivity a;
    for (const auto& b : per_cycle) {
        a.reads += std::popcount(b.reads);
        a.writes += std::popcount(b.writes);
        int n = b.active();
        if (std::size_t(n) >= a.histogram.size()) a.histogram.resize(n + 1, 0);
        ++a.histogram[n];
        a.max_active = std::max(a.max_active, n);
    }
    return a;
}

// ---- block simulation -------------------------------------------------------

namespace {

// Geometry of one tile of a block, shared by the simulator and the estimator.
struct TileGeometry {
    int k = 1, p = 0;
    int n_in = 1, n_out = 1;
    int w_im = 1, out_w = 1;
    int r0 = 0, r1 = 0;   // output rows
    int lo = 0, hi = 0;   // input rows held in the stripe
    int top_lo = 0, top_hi = 0;  // rows of a new column needed before its pass
    int stream_cycles = 1;       // output cycles per pixel
    bool first_tile = true;

    int rows() const { return r1 - r0; }
    int rows_stored() const { return hi - lo; }
    int top_rows() const { return top_hi - top_lo; }
    bool col_in(int c) const { return c >= 0 && c < w_im; }
    bool row_in(int r) const { return r >= lo && r < hi; }
    int new_col(int x) const { return x - p + k - 1; }
    // output rows of a pass whose bottom row comes from the stripe
    int streamed_rows() const {
        int first = r0 - p + k - 1;
        int last = std::min(r1 - 1 - p + k - 1, hi - 1);
        return std::max(0, last - first + 1);
    }
};

TileGeometry make_geometry(const AccelConfig& cfg, const LayerSpec& layer, const SopMode& mode,
                           BlockTile tile) {
    cfg.validate();
    layer.validate();
    if (layer.n_in > cfg.n_ch)
        throw ConfigError("input block of " + std::to_string(layer.n_in) + " channels exceeds n_ch " +
                          std::to_string(cfg.n_ch));
    if (layer.n_out > mode.max_out_block(cfg.n_ch))
        throw ConfigError("output block of " + std::to_string(layer.n_out) + " channels exceeds " +
                          std::to_string(mode.max_out_block(cfg.n_ch)));
    TileGeometry g;
    g.k = layer.h_k;
    g.p = layer.pad();
    g.n_in = layer.n_in;
    g.n_out = layer.n_out;
    g.w_im = layer.w_im;
    g.out_w = layer.out_w();
    g.r0 = tile.row_begin;
    g.r1 = tile.row_end < 0 ? layer.out_h() : tile.row_end;
    if (g.r0 < 0 || g.r1 > layer.out_h() || g.r0 >= g.r1) throw ConfigError("tile rows out of range");
    if (g.rows() > cfg.h_max(layer.n_in))
        throw ConfigError("tile of " + std::to_string(g.rows()) + " rows exceeds h_max " +
                          std::to_string(cfg.h_max(layer.n_in)));
    g.lo = std::max(0, g.r0 - g.p);
    g.hi = std::min(layer.h_im, g.r1 - 1 - g.p + g.k);
    g.top_lo = g.lo;
    g.top_hi = std::max(g.lo, std::min(g.hi, g.r0 - g.p + g.k - 1));
    int opc = mode.outputs_per_cycle(cfg);
    g.stream_cycles = (layer.n_out + opc - 1) / opc;
    g.first_tile = g.r0 == 0;
    return g;
}

class BlockSim {
public:
    BlockSim(const AccelConfig& cfg, const LayerSpec& layer, const golden::FeatureMap& input,
             const golden::FilterSet& filters, std::span<const golden::ChannelAffine> affine,
             BlockTile tile, const SimOptions& opt)
        : cfg_(cfg), mode_(sop_mode(cfg, layer.h_k)), g_(make_geometry(cfg, layer, mode_, tile)),
          in_(input), affine_(affine), opt_(opt) {
        if (input.channels() != layer.n_in || input.height() != layer.h_im || input.width() != layer.w_im)
            throw ConfigError("input feature map does not match the block shape");
        if (input.format() != fxp::kQ2_9) throw ConfigError("input must be Q2.9");
        if (filters.n_in() != layer.n_in || filters.n_out() != layer.n_out)
            throw ConfigError("filter set does not match the block shape");
        if (!affine.empty() && affine.size() != std::size_t(layer.n_out))
            throw ConfigError("need one scale/bias pair per output channel");
        fb_ = load_filters(cfg, mode_, filters);
        const int k = g_.k;
        slots_.assign(k, std::vector<std::int32_t>(std::size_t(g_.rows_stored()) * g_.n_in, 0));
        bank_.assign(std::size_t(g_.n_in) * k * k, 0);
        window_.assign(std::size_t(k) * k, 0);
        acc_.assign(g_.n_out, 0);
        res_.row_offset = g_.r0;
        res_.sums = golden::PartialSums(g_.n_out, g_.rows(), g_.out_w);
        if (!affine.empty()) res_.output = golden::FeatureMap(g_.n_out, g_.rows(), g_.out_w);
        res_.cycles.active_bank_histogram.assign(cfg.scm_banks() + 1, 0);
    }

    BlockResult run() {
        preload();
        for (int x = 0; x < g_.out_w; ++x) column_pass(x);
        return std::move(res_);
    }

private:
    enum class Phase { preload, overlap };

    int slot_of(int c) const { return ((c + g_.p) % g_.k + g_.k) % g_.k; }
    std::size_t word(int r, int n) const { return std::size_t(r - g_.lo) * g_.n_in + n; }
    int bank_of(int slot, std::size_t w) const {
        // column-major banking; rows past one stripe wrap onto the same banks
        return (slot % cfg_.scm_grid_cols) * cfg_.scm_grid_rows +
               int(w / cfg_.scm_bank_words) % cfg_.scm_grid_rows;
    }
    int pos_of(int x, int j) const {
        return opt_.addressing == ColumnAddressing::circular ? (x + j) % g_.k : j;
    }
    std::int32_t& bank(int n, int row, int pos) {
        return bank_[(std::size_t(n) * g_.k + row) * g_.k + pos];
    }

    void write_pixel(int c, int r, int n, BankSet& bs) {
        int s = slot_of(c);
        slots_[s][word(r, n)] = in_.raw(n, r, c);
        bs.writes |= std::uint64_t{1} << bank_of(s, word(r, n));
        ++res_.cycles.scm_writes;
        ++res_.cycles.pixels_in;
        if (opt_.trace) trace("imem", "write col=" + std::to_string(c) + " row=" + std::to_string(r) +
                                          " ch=" + std::to_string(n));
    }

    void end_cycle(const BankSet& bs) {
        ++res_.cycles.active_bank_histogram[bs.active()];
        if (opt_.record_bank_sets) res_.bank_sets.push_back(bs);
        ++cycle_;
    }

    void trace(const char* unit, const std::string& action) {
        *opt_.trace << cycle_ << ' ' << unit << ' ' << action << '\n';
    }

    void load_cycle(int c, int r, int n, Phase ph) {
        BankSet bs;
        write_pixel(c, r, n, bs);
        if (ph == Phase::preload) ++res_.cycles.preload_cycles;
        else ++res_.cycles.tile_overlap_cycles;
        end_cycle(bs);
    }

    void preload() {
        for (int j = 0; j + 1 < g_.k; ++j) {
            int c = j - g_.p;
            if (!g_.col_in(c)) continue;
            for (int r = g_.lo; r < g_.hi; ++r)
                for (int n = 0; n < g_.n_in; ++n) load_cycle(c, r, n, Phase::preload);
        }
        int c = g_.new_col(0);
        if (g_.col_in(c))
            for (int r = g_.top_lo; r < g_.top_hi; ++r)
                for (int n = 0; n < g_.n_in; ++n) load_cycle(c, r, n, Phase::preload);
    }

    struct Pending {
        int c, r, n;
    };

    void column_pass(int x) {
        const int k = g_.k;
        if (x > 0) {
            // top rows of the new column not absorbed by the previous pass
            Phase ph = g_.first_tile ? Phase::preload : Phase::overlap;
            while (!pending_.empty()) {
                auto pd = pending_.front();
                pending_.pop_front();
                load_cycle(pd.c, pd.r, pd.n, ph);
            }
            if (opt_.addressing == ColumnAddressing::circular) {
                fb_.shift();
                if (opt_.trace) trace("fbank", "shift offset=" + std::to_string(fb_.shift_offset()));
            }
        }
        if (x + 1 < g_.out_w && g_.col_in(g_.new_col(x + 1)))
            for (int r = g_.top_lo; r < g_.top_hi; ++r)
                for (int n = 0; n < g_.n_in; ++n) pending_.push_back({g_.new_col(x + 1), r, n});

        // image bank refill: window rows above the first bottom row
        for (int n = 0; n < g_.n_in; ++n)
            for (int t = 0; t + 1 < k; ++t) {
                int r = g_.r0 - g_.p + t;
                for (int j = 0; j < k; ++j) {
                    int c = x - g_.p + j;
                    std::int32_t v = 0;
                    if (g_.col_in(c) && g_.row_in(r)) {
                        v = slots_[slot_of(c)][word(r, n)];
                        ++res_.cycles.scm_reads;
                    }
                    bank(n, t + 1, pos_of(x, j)) = v;
                }
            }

        const int c_new = g_.new_col(x);
        for (int y = g_.r0; y < g_.r1; ++y) {
            const int r = y - g_.p + k - 1;
            for (int n = 0; n < g_.n_in; ++n) {
                BankSet bs;
                for (int row = 0; row + 1 < k; ++row)
                    for (int pos = 0; pos < k; ++pos) bank(n, row, pos) = bank(n, row + 1, pos);
                bool streamed = false;
                for (int j = 0; j < k; ++j) {
                    int c = x - g_.p + j;
                    std::int32_t v = 0;
                    if (g_.col_in(c) && g_.row_in(r)) {
                        if (c == c_new) {
                            v = in_.raw(n, r, c);  // bypass from the input stream
                            write_pixel(c, r, n, bs);
                            streamed = true;
                        } else {
                            int s = slot_of(c);
                            v = slots_[s][word(r, n)];
                            bs.reads |= std::uint64_t{1} << bank_of(s, word(r, n));
                            ++res_.cycles.scm_reads;
                        }
                    }
                    bank(n, k - 1, pos_of(x, j)) = v;
                }
                if (!streamed && !pending_.empty()) {
                    auto pd = pending_.front();
                    pending_.pop_front();
                    write_pixel(pd.c, pd.r, pd.n, bs);
                }
                sop_cycle(n);
                if (opt_.trace) trace("sop", "ch=" + std::to_string(n) + " row=" + std::to_string(y) +
                                                 " col=" + std::to_string(x));
                ++res_.cycles.compute_cycles;
                res_.cycles.output_lane_cycles += std::uint64_t(g_.n_out);
                end_cycle(bs);
            }
            emit_pixel(x, y);
            for (int i = g_.n_in; i < g_.stream_cycles; ++i) {
                if (opt_.trace) trace("idle", "stream");
                ++res_.cycles.idle_cycles;
                end_cycle({});
            }
        }
    }

    void sop_cycle(int n) {
        const int k = g_.k;
        for (int row = 0; row < k; ++row)
            for (int pos = 0; pos < k; ++pos) window_[std::size_t(row) * k + pos] = bank(n, row, pos);
        SopWindow w = window_lanes(window_, mode_);
        const bool strict = opt_.sum_mode == golden::SumSaturation::per_channel;
        for (int s = 0; s < fb_.n_sop(); ++s) {
            SopOutput o = sop_compute(w, fb_.lanes(s, n), mode_);
            accumulate(s, o.a, strict);
            if (fb_.has_output(s, 1)) accumulate(cfg_.n_ch + s, o.b, strict);
        }
    }

    void accumulate(int o, std::int64_t v, bool strict) {
        acc_[o] += v;
        if (strict) acc_[o] = fxp::saturate_raw(acc_[o], fxp::kQ7_9, &res_.saturation.channel_sum);
    }

    void emit_pixel(int x, int y) {
        for (int o = 0; o < g_.n_out; ++o) res_.sums.at(o, y - g_.r0, x) = acc_[o];
        if (!affine_.empty()) {
            for (const auto& beat : scale_bias_stream(cfg_, mode_, acc_, affine_, &res_.saturation)) {
                res_.output.set_raw(beat.channel, y - g_.r0, x, beat.value.raw());
                if (opt_.trace)
                    trace("out", "ch=" + std::to_string(beat.channel) + " beat=" + std::to_string(beat.cycle) +
                                     " raw=" + std::to_string(beat.value.raw()));
            }
        }
        res_.cycles.pixels_out += std::uint64_t(g_.n_out);
        std::fill(acc_.begin(), acc_.end(), 0);
    }

    const AccelConfig& cfg_;
    SopMode mode_;
    TileGeometry g_;
    const golden::FeatureMap& in_;
    std::span<const golden::ChannelAffine> affine_;
    const SimOptions& opt_;
    FilterBankState fb_;
    std::vector<std::vector<std::int32_t>> slots_;
    std::vector<std::int32_t> bank_;
    std::vector<std::int32_t> window_;
    std::vector<std::int64_t> acc_;
    std::deque<Pending> pending_;
    std::uint64_t cycle_ = 0;
    BlockResult res_;
};

}  // namespace

BlockResult simulate_layer_block(const AccelConfig& cfg, const LayerSpec& layer,
                                 const golden::FeatureMap& input, const golden::FilterSet& filters,
                                 std::span<const golden::ChannelAffine> affine, BlockTile tile,
                                 const SimOptions& opt) {
    return BlockSim(cfg, layer, input, filters, affine, tile, opt).run();
}

CycleReport estimate_block_cycles(const AccelConfig& cfg, const LayerSpec& layer, BlockTile tile) {
    const SopMode mode = sop_mode(cfg, layer.h_k);
    const TileGeometry g = make_geometry(cfg, layer, mode, tile);
    CycleReport r;
    const std::uint64_t n_in = g.n_in;
    const std::uint64_t pixels = std::uint64_t(g.out_w) * g.rows();

    std::uint64_t old_cols = 0;
    for (int j = 0; j + 1 < g.k; ++j) old_cols += g.col_in(j - g.p);
    r.preload_cycles = n_in * (old_cols * g.rows_stored() + (g.col_in(g.new_col(0)) ? g.top_rows() : 0));

    for (int x = 1; x < g.out_w; ++x) {
        if (!g.col_in(g.new_col(x))) continue;
        int slack = g.rows() - (g.col_in(g.new_col(x - 1)) ? g.streamed_rows() : 0);
        std::uint64_t extra = n_in * std::max(0, g.top_rows() - slack);
        (g.first_tile ? r.preload_cycles : r.tile_overlap_cycles) += extra;
    }
    r.compute_cycles = pixels * n_in;
    r.idle_cycles = pixels * std::uint64_t(std::max(0, g.stream_cycles - g.n_in));
    r.pixels_out = pixels * g.n_out;
    r.output_lane_cycles = r.compute_cycles * g.n_out;
    return r;
}

}  // namespace bwsim::core
