#include "cpalab/error.h"
#include "cpalab/leakage.h"
#include "cpalab/random.h"

#include <gtest/gtest.h>

#include <array>
#include <vector>

using namespace cpalab;

TEST(HammingWeight, Examples) {
    EXPECT_EQ(hamming_weight(0).value, 0);
    EXPECT_EQ(hamming_weight(-1).value, 32);
    EXPECT_EQ(hamming_weight(11).value, 3);
}

TEST(HammingDistance, Examples) {
    EXPECT_EQ(hamming_distance(5, 5).value, 0);
    EXPECT_EQ(hamming_distance(5, 6).value, 2);
    EXPECT_EQ(hamming_distance(0, -1).value, 32);
}

TEST(HammingWeight, ComplementSumsTo32) {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const auto v = static_cast<std::int32_t>(rng.next());
        EXPECT_EQ(hamming_weight(v).value + hamming_weight(~v).value, 32);
    }
}

TEST(HammingDistance, IsAMetric) {
    Rng rng(8);
    for (int i = 0; i < 10000; ++i) {
        const auto a = static_cast<std::int32_t>(rng.next());
        const auto b = static_cast<std::int32_t>(rng.next());
        const auto c = static_cast<std::int32_t>(rng.next());
        EXPECT_EQ(hamming_distance(a, b), hamming_distance(b, a));
        EXPECT_EQ(hamming_distance(a, a).value, 0);
        if (a != b)
            EXPECT_GT(hamming_distance(a, b).value, 0);
        EXPECT_LE(hamming_distance(a, c).value, hamming_distance(a, b).value + hamming_distance(b, c).value);
    }
}

TEST(HammingWeight, ShiftPreservesWeightWithoutLostBits) {
    Rng rng(9);
    for (int i = 0; i < 10000; ++i) {
        const auto v = static_cast<std::int32_t>(rng.uniform_int(0, 0xFFFF));
        for (int k = 0; k <= 15; ++k)
            EXPECT_EQ(hamming_weight(v << k), hamming_weight(v));
    }
}

TEST(PeStep, Examples) {
    auto r = pe_step({}, 2, 3);
    EXPECT_EQ(r.state.accumulator, 6);
    EXPECT_EQ(r.state.tau, 1u);
    EXPECT_EQ(r.leakage.value, 2);

    r = pe_step(r.state, 1, 1);
    EXPECT_EQ(r.state.accumulator, 7);
    EXPECT_EQ(r.leakage.value, 1);

    r = pe_step({}, -1, 1);
    EXPECT_EQ(r.state.accumulator, -1);
    EXPECT_EQ(r.leakage.value, 32);
}

TEST(PeStep, FirstStoreLeaksWeightEvenFromDirtyAccumulator) {
    // tau 0 means nothing stored yet: the register counts as zero.
    const auto r = pe_step({123, 0}, 2, 3);
    EXPECT_EQ(r.leakage.value, 2);
}

TEST(PeStep, RangeErrorNamesOperand) {
    try {
        pe_step({}, 128, 1);
        FAIL();
    } catch (const RangeError &e) {
        EXPECT_NE(std::string(e.what()).find("weight"), std::string::npos);
    }
    try {
        pe_step({}, 1, -129);
        FAIL();
    } catch (const RangeError &e) {
        EXPECT_NE(std::string(e.what()).find("input"), std::string::npos);
    }
    ArrayConfig u;
    u.weight_encoding = Encoding::Unsigned;
    EXPECT_NO_THROW(pe_step({}, 255, 1, u));
    EXPECT_THROW(pe_step({}, -1, 1, u), RangeError);
}

TEST(PeStep, AccumulatorIsWrappingSum) {
    Rng rng(10);
    for (int run = 0; run < 200; ++run) {
        PEState s;
        std::int64_t sum = 0;
        for (int tau = 0; tau < 8; ++tau) {
            const auto w = static_cast<std::int32_t>(rng.uniform_int(-128, 127));
            const auto x = static_cast<std::int32_t>(rng.uniform_int(-128, 127));
            const auto prev = s.accumulator;
            const auto r = pe_step(s, w, x);
            sum += std::int64_t{w} * x;
            EXPECT_EQ(r.state.accumulator, static_cast<std::int32_t>(sum));
            EXPECT_EQ(r.leakage, tau == 0 ? hamming_weight(r.state.accumulator)
                                          : hamming_distance(prev, r.state.accumulator));
            s = r.state;
        }
    }
}

TEST(PeStep, NarrowRegisterWraps) {
    ArrayConfig c;
    c.register_bits = 8;
    const auto r = pe_step({}, 100, 2, c); // 200 wraps to -56 in 8 bits
    EXPECT_EQ(r.state.accumulator, -56);
    EXPECT_EQ(r.leakage.value, hamming_weight(200).value);
}

TEST(PeStep, ReplayIsDeterministic) {
    const std::array<std::int32_t, 4> w{3, -7, 100, -128};
    const std::array<std::int32_t, 4> x{-5, 12, 127, -1};
    std::vector<int> first, second;
    for (auto *out : {&first, &second}) {
        PEState s;
        for (int i = 0; i < 4; ++i) {
            const auto r = pe_step(s, w[i], x[i]);
            out->push_back(r.leakage.value);
            out->push_back(r.state.accumulator);
            s = r.state;
        }
    }
    EXPECT_EQ(first, second);
}

TEST(ArrayPower, Examples) {
    const std::vector<LeakageSample> one{{5}};
    EXPECT_EQ(array_power(one, 0.0), 5.0);
    const std::vector<LeakageSample> three{{2}, {3}, {4}};
    EXPECT_EQ(array_power(three, 0.0), 9.0);
}

TEST(ArrayPower, NoiseMean) {
    const std::vector<LeakageSample> two{{1}, {1}};
    Rng rng(11);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        sum += array_power(two, 1.0, &rng);
    EXPECT_NEAR(sum / n, 2.0, 0.02);
}

TEST(ArrayPower, NoiseNeedsGenerator) { EXPECT_THROW(array_power(std::vector<LeakageSample>{{1}}, 1.0), ParameterError); }

TEST(ArrayConfig, ValidateListsEveryField) {
    ArrayConfig c;
    c.n_pe = 0;
    c.weight_bits = 0;
    c.noise_sigma = -1;
    try {
        c.validate();
        FAIL();
    } catch (const ValidationError &e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("n_pe"), std::string::npos);
        EXPECT_NE(msg.find("weight_bits"), std::string::npos);
        EXPECT_NE(msg.find("noise_sigma"), std::string::npos);
    }
}

TEST(OperandRange, Encodings) {
    EXPECT_EQ(operand_range(8, Encoding::Signed).min, -128);
    EXPECT_EQ(operand_range(8, Encoding::Signed).max, 127);
    EXPECT_EQ(operand_range(8, Encoding::Unsigned).min, 0);
    EXPECT_EQ(operand_range(8, Encoding::Unsigned).max, 255);
    EXPECT_EQ(operand_range(8, Encoding::Signed).count(), 256u);
}
