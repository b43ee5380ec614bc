#include <doctest.h>

#include <random>
#include <sstream>

#include "bwsim/golden.hpp"
#include "convert.hpp"
#include "oracle.hpp"

using namespace bwsim;
using namespace bwsim::golden;

TEST_CASE("binarization") {
    CHECK(binarize_det(0.7) == 1);
    CHECK(binarize_det(-0.3) == -1);
    CHECK(binarize_det(0.0) == 1);
    CHECK(hard_sigmoid(1) == 1);
    CHECK(hard_sigmoid(-3) == 0);
    CHECK(hard_sigmoid(0) == 0.5);
    CHECK(binarize_sto(1, 0.999) == 1);
    CHECK(binarize_sto(-1, 0.0) == -1);
    CHECK(binarize_sto(0, 0.3) == 1);
    CHECK(binarize_sto(0, 0.7) == -1);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    int pos = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) pos += binarize_sto(0, u(rng)) == 1;
    CHECK(double(pos) / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("binary filter encoding") {
    BinaryFilter f(3);
    CHECK(f.weight(1, 1) == -1);
    f.set(0, 2, 1);
    CHECK(f.bit(0, 2) == 1);
    CHECK(f.negated().weight(0, 2) == -1);
    CHECK(f.negated().weight(1, 1) == 1);
    CHECK_THROWS(f.set(0, 0, 0));
    CHECK_THROWS(BinaryFilter(12));
}

TEST_CASE("identity and negation layers") {
    FeatureMap in(1, 4, 5);
    int v = -1500;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 5; ++c) in.set_raw(0, r, c, v += 137);
    FilterSet fs(1, 1, 1);
    fs.at(0, 0).set(0, 0, 1);
    auto aff = identity_affine(1);
    SaturationStats sat;
    CHECK(conv_layer_golden(in, fs, aff, Padding::valid, SumSaturation::at_readout, &sat) == in);
    CHECK(sat.total() == 0);
    auto neg = conv_layer_golden(in, fs.negated(), aff, Padding::valid);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 5; ++c) CHECK(neg.raw(0, r, c) == std::min(2047, -in.raw(0, r, c)));
}

TEST_CASE("constant image through all-ones 3x3") {
    for (int cval : {1, 100, 300, -400}) {
        FeatureMap in(1, 5, 5);
        for (int r = 0; r < 5; ++r)
            for (int c = 0; c < 5; ++c) in.set_raw(0, r, c, cval);
        FilterSet fs(1, 1, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) fs.at(0, 0).set(i, j, 1);
        auto out = conv_layer_golden(in, fs, identity_affine(1), Padding::valid);
        CHECK(out.height() == 3);
        CHECK(out.raw(0, 1, 1) == std::clamp(9 * cval, -2048, 2047));
    }
}

TEST_CASE("Q7.9 saturation on a saturated 7x7 stack") {
    FeatureMap in(32, 7, 7);
    for (int n = 0; n < 32; ++n)
        for (int r = 0; r < 7; ++r)
            for (int c = 0; c < 7; ++c) in.set_raw(n, r, c, 2047);
    FilterSet fs(1, 32, 7);
    for (int n = 0; n < 32; ++n)
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j) fs.at(0, n).set(i, j, 1);
    SaturationStats sat;
    conv_layer_golden(in, fs, identity_affine(1), Padding::valid, SumSaturation::at_readout, &sat);
    CHECK(sat.channel_sum > 0);
    SaturationStats zero;
    conv_layer_golden(FeatureMap(32, 7, 7), fs, identity_affine(1), Padding::valid, SumSaturation::at_readout,
                      &zero);
    CHECK(zero.total() == 0);
}

TEST_CASE("scale_bias arithmetic") {
    ChannelAffine a{{256, fxp::kQ2_9}, {512, fxp::kQ2_9}};
    CHECK(scale_bias(1024, a).to_real() == 2.0);
    ChannelAffine big{{2047, fxp::kQ2_9}, {0, fxp::kQ2_9}};
    SaturationStats sat;
    CHECK(scale_bias(fxp::kQ7_9.raw_max(), big, &sat).raw() == 2047);
    CHECK(sat.output == 1);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::int64_t> s(-200000, 200000);
    std::uniform_int_distribution<int> q(-2048, 2047);
    for (int i = 0; i < 20000; ++i) {
        std::int64_t sum = s(rng);
        int al = q(rng), be = q(rng);
        ChannelAffine x{{al, fxp::kQ2_9}, {be, fxp::kQ2_9}};
        REQUIRE(scale_bias(sum, x).raw() == oracle::scale_bias(sum, al, be));
    }
}

TEST_CASE("golden matches the nested-loop oracle") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 60; ++t) {
        int k = 1 + int(rng() % 7), n_in = 1 + int(rng() % 5), n_out = 1 + int(rng() % 4);
        int h = k + int(rng() % 6), w = k + int(rng() % 6);
        Padding pad = (k % 2 && rng() % 2) ? Padding::zero_pad : Padding::valid;
        auto x = oracle::random_tensor(rng, n_in, h, w);
        auto wt = oracle::random_weights(rng, n_out, n_in, k);
        int p = pad == Padding::zero_pad ? (k - 1) / 2 : 0;
        auto ref = oracle::conv(x, wt, k, p);
        auto sums = conv_partial_sums(testutil::to_map(x), testutil::to_filters(wt, k), pad);
        REQUIRE(sums.v == ref.v);
        // sign symmetry
        auto negs = conv_partial_sums(testutil::to_map(x), testutil::to_filters(wt, k).negated(), pad);
        for (std::size_t i = 0; i < ref.v.size(); ++i) REQUIRE(negs.v[i] == -ref.v[i]);
        // strict mode against its oracle
        std::vector<ChannelAffine> aff = identity_affine(n_out);
        auto strict = conv_layer_golden(testutil::to_map(x), testutil::to_filters(wt, k), aff, pad,
                                        SumSaturation::per_channel);
        auto sref = oracle::conv_strict(x, wt, k, p);
        for (int o = 0; o < n_out; ++o)
            for (int r = 0; r < sref.h; ++r)
                for (int c = 0; c < sref.w; ++c)
                    REQUIRE(strict.raw(o, r, c) == oracle::scale_bias(sref.at(o, r, c), 512, 0));
    }
}

TEST_CASE("zero-padded interior equals valid output") {
    std::mt19937_64 rng(8);
    for (int k : {3, 5, 7}) {
        auto x = oracle::random_tensor(rng, 2, 11, 9);
        auto fs = testutil::to_filters(oracle::random_weights(rng, 2, 2, k), k);
        auto in = testutil::to_map(x);
        auto same = conv_partial_sums(in, fs, Padding::zero_pad);
        auto valid = conv_partial_sums(in, fs, Padding::valid);
        int p = (k - 1) / 2;
        for (int o = 0; o < 2; ++o)
            for (int r = 0; r < valid.h; ++r)
                for (int c = 0; c < valid.w; ++c) CHECK(valid.at(o, r, c) == same.at(o, r + p, c + p));
    }
}

TEST_CASE("configuration errors") {
    FeatureMap in(2, 5, 5);
    FilterSet fs(1, 3, 3);
    CHECK_THROWS_AS(conv_partial_sums(in, fs, Padding::zero_pad), ConfigError);
    FilterSet even(1, 2, 4);
    CHECK_THROWS_AS(conv_partial_sums(in, even, Padding::zero_pad), ConfigError);
    CHECK_NOTHROW(conv_partial_sums(in, even, Padding::valid));
    CHECK_THROWS(in.set_raw(0, 0, 0, 5000));
}

TEST_CASE("fixture text round trip") {
    std::mt19937_64 rng(1);
    auto x = testutil::to_map(oracle::random_tensor(rng, 2, 3, 4));
    auto fs = testutil::to_filters(oracle::random_weights(rng, 3, 2, 5), 5);
    std::vector<ChannelAffine> aff{{{-7, fxp::kQ2_9}, {300, fxp::kQ2_9}}, {}};
    std::stringstream a, b, c;
    write_feature_map(a, x);
    write_filters(b, fs);
    write_affine(c, aff);
    CHECK(read_feature_map(a) == x);
    CHECK(read_filters(b) == fs);
    CHECK(read_affine(c) == aff);
    std::istringstream bad("bwtensor 1\nformat Q2.9\nshape 1 1 2\n5\n");
    CHECK_THROWS_AS(read_feature_map(bad), ParseError);
    std::istringstream badf("bwfilters 1\nshape 1 1 2\n01\n2x\n");
    CHECK_THROWS_AS(read_filters(badf), ParseError);
}
