#pragma once

// Brute-force reference arithmetic for the tests. Works on plain integer
// vectors and does not call into the library.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<std::int64_t> v;
    Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(std::size_t(c_) * h_ * w_, 0) {}
    std::int64_t& at(int a, int r, int x) { return v[(std::size_t(a) * h + r) * w + x]; }
    std::int64_t at(int a, int r, int x) const { return v[(std::size_t(a) * h + r) * w + x]; }
};

// weights[o][n][row*k+col] in {-1,+1}
using Weights = std::vector<std::vector<std::vector<int>>>;

// Direct convolution with +-1 weights. pad = halo on each side.
inline Tensor conv(const Tensor& in, const Weights& wt, int k, int pad) {
    const int n_out = int(wt.size());
    const int oh = in.h + 2 * pad - k + 1, ow = in.w + 2 * pad - k + 1;
    Tensor out(n_out, oh, ow);
    for (int o = 0; o < n_out; ++o)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                std::int64_t s = 0;
                for (int n = 0; n < in.c; ++n)
                    for (int i = 0; i < k; ++i)
                        for (int j = 0; j < k; ++j) {
                            int r = y + i - pad, q = x + j - pad;
                            if (r < 0 || q < 0 || r >= in.h || q >= in.w) continue;
                            s += wt[o][n][i * k + j] * in.at(n, r, q);
                        }
                out.at(o, y, x) = s;
            }
    return out;
}

inline std::int64_t clamp_bits(std::int64_t v, int width) {
    const std::int64_t hi = (std::int64_t{1} << (width - 1)) - 1, lo = -(std::int64_t{1} << (width - 1));
    return std::clamp(v, lo, hi);
}

inline std::int64_t floor_shift(std::int64_t v, int s) {
    // floor division by 2^s without relying on >> of negatives
    const std::int64_t d = std::int64_t{1} << s;
    std::int64_t q = v / d;
    if (v % d != 0 && v < 0) --q;
    return q;
}

// sum in 2^-9 units -> 17-bit clamp -> x alpha (2^-18 units) -> + beta<<9 -> 29-bit clamp
// -> floor to 2^-9 -> 12-bit clamp
inline std::int64_t scale_bias(std::int64_t sum, std::int64_t alpha, std::int64_t beta) {
    std::int64_t s = clamp_bits(sum, 17);
    std::int64_t acc = clamp_bits(s * alpha + beta * 512, 29);
    return clamp_bits(floor_shift(acc, 9), 12);
}

// Same, clamping the running sum to 17 bits after every input channel.
inline Tensor conv_strict(const Tensor& in, const Weights& wt, int k, int pad) {
    const int n_out = int(wt.size());
    const int oh = in.h + 2 * pad - k + 1, ow = in.w + 2 * pad - k + 1;
    Tensor out(n_out, oh, ow);
    for (int o = 0; o < n_out; ++o)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                std::int64_t s = 0;
                for (int n = 0; n < in.c; ++n) {
                    for (int i = 0; i < k; ++i)
                        for (int j = 0; j < k; ++j) {
                            int r = y + i - pad, q = x + j - pad;
                            if (r < 0 || q < 0 || r >= in.h || q >= in.w) continue;
                            s += wt[o][n][i * k + j] * in.at(n, r, q);
                        }
                    s = clamp_bits(s, 17);
                }
                out.at(o, y, x) = s;
            }
    return out;
}

inline Weights random_weights(std::mt19937_64& rng, int n_out, int n_in, int k) {
    std::bernoulli_distribution b(0.5);
    Weights w(n_out, std::vector<std::vector<int>>(n_in, std::vector<int>(k * k)));
    for (auto& a : w)
        for (auto& f : a)
            for (auto& x : f) x = b(rng) ? 1 : -1;
    return w;
}

inline Tensor random_tensor(std::mt19937_64& rng, int c, int h, int w, int lo = -2048, int hi = 2047) {
    std::uniform_int_distribution<int> d(lo, hi);
    Tensor t(c, h, w);
    for (auto& x : t.v) x = d(rng);
    return t;
}

}  // namespace oracle
