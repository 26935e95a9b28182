#include "cpalab/cpa.h"
#include "cpalab/error.h"
#include "cpalab/random.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace cpalab;

namespace {

double two_pass(const std::vector<double> &h, const std::vector<double> &p) {
    double mh = 0.0, mp = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        mh += h[i];
        mp += p[i];
    }
    mh /= h.size();
    mp /= p.size();
    double shp = 0.0, shh = 0.0, spp = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        shp += (h[i] - mh) * (p[i] - mp);
        shh += (h[i] - mh) * (h[i] - mh);
        spp += (p[i] - mp) * (p[i] - mp);
    }
    return shp / std::sqrt(shh * spp);
}

ArrayConfig unsigned_config(unsigned n_pe = 1) {
    ArrayConfig c;
    c.n_pe = n_pe;
    c.weight_encoding = Encoding::Unsigned;
    c.input_encoding = Encoding::Unsigned;
    return c;
}

} // namespace

TEST(Pearson, Examples) {
    const std::vector<double> h{1, 4, 2, 8, 5, 7};
    EXPECT_DOUBLE_EQ(*pearson(h, h), 1.0);
    std::vector<double> p;
    for (double v : h)
        p.push_back(-2 * v + 7);
    EXPECT_NEAR(*pearson(h, p), -1.0, 1e-15);
}

TEST(Pearson, MatchesTwoPassOracle) {
    Rng rng(1);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 64;
        std::vector<double> h(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            h[i] = static_cast<double>(rng.uniform_int(0, 32));
            p[i] = 0.3 * h[i] + 5.0 * rng.normal();
        }
        ASSERT_NEAR(*pearson(h, p), two_pass(h, p), 1e-12);
    }
}

TEST(Pearson, AffineInvariance) {
    Rng rng(2);
    std::vector<double> h(500), p(500);
    for (std::size_t i = 0; i < h.size(); ++i) {
        h[i] = rng.normal();
        p[i] = h[i] + rng.normal();
    }
    const double base = *pearson(h, p);
    for (double alpha : {3.5, -0.25, 1000.0}) {
        std::vector<double> q;
        for (double v : p)
            q.push_back(alpha * v + 17.0);
        EXPECT_NEAR(*pearson(h, q), (alpha > 0 ? 1 : -1) * base, 1e-12);
    }
}

TEST(Pearson, UndefinedAndErrors) {
    EXPECT_FALSE(pearson(std::vector<double>{3, 3, 3}, std::vector<double>{1, 2, 3}).has_value());
    EXPECT_FALSE(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{0, 0, 0}).has_value());
    EXPECT_THROW(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), ParameterError);
    EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), ParameterError);
}

TEST(HypothesisSpace, SizesAndMapping) {
    const ArrayConfig c;
    const auto full = HypothesisSpace::full_enumeration(1, c);
    EXPECT_EQ(full.size(), 65536u);
    EXPECT_EQ(full.tuple(0), (std::vector<std::int32_t>{-128, -128}));
    EXPECT_EQ(full.tuple(1), (std::vector<std::int32_t>{-128, -127}));
    EXPECT_EQ(full.tuple(256), (std::vector<std::int32_t>{-127, -128}));
    for (std::uint64_t id : {0ull, 1ull, 777ull, 65535ull})
        EXPECT_EQ(full.find(full.tuple(id)), id);

    const auto known = HypothesisSpace::known_prefix({5, -3}, c);
    EXPECT_EQ(known.size(), 256u);
    EXPECT_EQ(known.tau(), 2u);
    EXPECT_EQ(known.tuple(128), (std::vector<std::int32_t>{5, -3, 0}));
    EXPECT_FALSE(known.find(std::vector<std::int32_t>{4, -3, 0}).has_value());
}

TEST(HypothesisSpace, CapSuggestsKnownPrefix) {
    const auto big = HypothesisSpace::full_enumeration(3, {});
    try {
        big.check_capacity();
        FAIL();
    } catch (const CapacityError &e) {
        EXPECT_NE(std::string(e.what()).find("known-prefix"), std::string::npos);
    }
    EXPECT_THROW(hypothesize_leakage(big, Matrix<std::int32_t>(2, 4)), CapacityError);
    const auto nine = HypothesisSpace::full_enumeration(8, {});
    EXPECT_EQ(nine.size(), std::numeric_limits<std::uint64_t>::max());
}

TEST(HypothesizeLeakage, Examples) {
    Matrix<std::int32_t> x(1, 1);
    x(0, 0) = 3;
    const auto space = HypothesisSpace::full_enumeration(0, {});
    const auto h = hypothesize_leakage(space, x);
    EXPECT_EQ(h(*space.find(std::vector<std::int32_t>{2}), 0), 2);
    EXPECT_EQ(h(*space.find(std::vector<std::int32_t>{0}), 0), 0);

    Rng rng(4);
    Matrix<std::int32_t> inputs(50, 2);
    for (auto &v : inputs.data())
        v = static_cast<std::int32_t>(rng.uniform_int(-128, 127));
    for (std::int32_t w0 : {-128, -1, 0, 77}) {
        const auto known = HypothesisSpace::known_prefix({w0}, {});
        const auto hk = hypothesize_leakage(known, inputs);
        for (std::int32_t w1 : {-128, -5, 0, 1, 127}) {
            for (std::size_t t = 0; t < 50; ++t) {
                const auto s0 = pe_step({}, w0, inputs(t, 0));
                const auto s1 = pe_step(s0.state, w1, inputs(t, 1));
                ASSERT_EQ(hk(*known.find(std::vector<std::int32_t>{w0, w1}), t), s1.leakage.value);
            }
        }
    }
}

TEST(Attack, SinglePeFirstStepCorrelatesPerfectly) {
    const ArrayConfig c;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto run = generate_run(c, UniformWeights{}, 8, 2000, seed);
        const auto space = HypothesisSpace::full_enumeration(0, c);
        const auto res = attack(run, space, 0, c);
        if (run.weights(0, 0) == 0) {
            EXPECT_TRUE(res.target_undefined());
            continue;
        }
        EXPECT_NEAR(*res.target_rho(), 1.0, 1e-12);
        EXPECT_TRUE(res.recovered());
        EXPECT_EQ(res.n_traces_used, 2000u);
    }
}

TEST(Attack, TwoWeightEnumerationRecoversTruth) {
    const ArrayConfig c;
    const auto run = generate_run(c, UniformWeights{}, 2, 2000, 11);
    const auto space = HypothesisSpace::full_enumeration(1, c);
    const auto res = attack(run, space, 1, c);
    ASSERT_EQ(res.coefficients.size(), 65536u);
    ASSERT_EQ(res.argmax.size(), 1u);
    EXPECT_EQ(space.tuple(res.argmax[0]), (std::vector<std::int32_t>{run.weights(0, 0), run.weights(0, 1)}));
    EXPECT_TRUE(res.recovered());
}

TEST(Attack, ShiftAliasesHaveIdenticalCoefficients) {
    const auto c = unsigned_config(3);
    const auto run = generate_run(c, UniformWeights{}, 1, 1000, 3);
    const auto space = HypothesisSpace::full_enumeration(0, c);
    const auto res = attack(run, space, 0, c);
    for (std::int32_t w = 1; w < 128; ++w)
        EXPECT_EQ(res.coefficients[*space.find(std::vector{w})], res.coefficients[*space.find(std::vector{2 * w})]);
}

TEST(Attack, FirstStepArgmaxIncludesAliasesOfTruth) {
    const auto c = unsigned_config();
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto run = generate_run(c, UniformWeights{}, 1, 1000, seed);
        run.weights(0, 0) = 12; // aliases 3, 6, 24, 48, 96, 192
        const auto leak = pe_leakage(run.weights.row(0), run.inputs, c);
        for (std::size_t t = 0; t < run.n_traces(); ++t)
            run.samples(t, 0) = leak(t, 0);
        const auto space = HypothesisSpace::full_enumeration(0, c);
        const auto res = attack(run, space, 0, c);
        std::vector<std::int32_t> arg;
        for (auto id : res.argmax)
            arg.push_back(space.tuple(id)[0]);
        EXPECT_EQ(arg, (std::vector<std::int32_t>{3, 6, 12, 24, 48, 96, 192}));
        EXPECT_TRUE(res.recovered());
        for (std::int32_t a : {3, 6, 24, 48, 96, 192})
            EXPECT_TRUE(res.alias[*space.find(std::vector{a})]);
        EXPECT_LT(res.best_incorrect, 1.0);
    }
}

TEST(Attack, FlagsOneCorrectTuplePerPe) {
    ArrayConfig c;
    c.n_pe = 6;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto run = generate_run(c, UniformWeights{}, 3, 200, seed);
        for (std::size_t tau : {std::size_t{0}, std::size_t{2}}) {
            const auto space = tau == 0 ? HypothesisSpace::full_enumeration(0, c) : default_space(run, tau, c);
            const auto res = attack(run, space, tau, c);
            std::set<std::vector<std::int32_t>> distinct;
            for (std::size_t pe = 0; pe < 6; ++pe) {
                const auto row = run.weights.row(pe);
                if (space.find(row))
                    distinct.insert(std::vector<std::int32_t>(row.begin(), row.begin() + tau + 1));
            }
            EXPECT_EQ(res.correct_indices.size(), distinct.size());
            EXPECT_LE(res.best_incorrect, *std::max_element(res.coefficients.begin(), res.coefficients.end()));
            for (double v : res.coefficients) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        }
    }
}

TEST(Attack, ZeroWeightCandidateIsUndefined) {
    const ArrayConfig c;
    const auto run = generate_run(c, UniformWeights{}, 1, 500, 2);
    const auto space = HypothesisSpace::full_enumeration(0, c);
    const auto res = attack(run, space, 0, c);
    const auto zero = *space.find(std::vector<std::int32_t>{0});
    EXPECT_TRUE(res.undefined[zero]);
    EXPECT_EQ(res.coefficients[zero], 0.0);
    for (auto id : res.argmax)
        EXPECT_NE(id, zero);
}

TEST(Attack, PositiveRescalingKeepsRanking) {
    ArrayConfig c;
    c.n_pe = 4;
    auto run = generate_run(c, UniformWeights{}, 2, 1000, 9);
    const auto space = default_space(run, 1, c);
    const auto before = attack(run, space, 1, c);
    for (auto &s : run.samples.data())
        s *= 4.0f;
    const auto after = attack(run, space, 1, c);
    EXPECT_EQ(before.argmax, after.argmax);
    for (std::size_t i = 0; i < before.coefficients.size(); ++i)
        EXPECT_NEAR(before.coefficients[i], after.coefficients[i], 1e-12);
}

TEST(Attack, ThreadCountDoesNotChangeResults) {
    ArrayConfig c;
    c.n_pe = 3;
    const auto run = generate_run(c, UniformWeights{}, 2, 800, 21);
    const auto space = HypothesisSpace::full_enumeration(1, c);
    AttackOptions one, four;
    four.threads = 4;
    const auto a = attack(run, space, 1, c, one);
    const auto b = attack(run, space, 1, c, four);
    EXPECT_EQ(a.coefficients, b.coefficients);
    EXPECT_EQ(a.argmax, b.argmax);
}

TEST(Attack, RejectsRunsWithoutInputs) {
    SimulationRun run;
    run.samples = Matrix<float>(10, 1);
    EXPECT_THROW(attack(run, HypothesisSpace::full_enumeration(0, {}), 0), UnusableForCpaError);
}

TEST(Progression, SinglePeConvergesAndMatchesAttack) {
    const ArrayConfig c;
    const auto run = generate_run(c, UniformWeights{}, 2, 2000, 13);
    const auto space = default_space(run, 1, c);
    const std::vector<std::size_t> cps{100, 500, 1000, 2000};
    const auto prog = trace_count_progression(run, space, 1, cps, c);
    ASSERT_EQ(prog.size(), 4u);
    for (std::size_t i = 1; i < prog.size(); ++i)
        EXPECT_GE(prog[i].rho_correct, 0.99);
    const auto full = attack(run, space, 1, c);
    EXPECT_EQ(prog.back().rho_correct, *full.target_rho());
    EXPECT_EQ(prog.back().best_incorrect, full.best_incorrect);
}

TEST(Progression, ConstantPrefixIsUndefined) {
    const ArrayConfig c;
    auto run = generate_run(c, UniformWeights{}, 1, 100, 14);
    run.inputs(1, 0) = run.inputs(0, 0);
    run.samples(1, 0) = run.samples(0, 0);
    const std::vector<std::size_t> cps{2, 100};
    const auto prog = trace_count_progression(run, HypothesisSpace::full_enumeration(0, c), 0, cps, c);
    EXPECT_TRUE(prog[0].undefined);
}

TEST(Progression, CheckpointBeyondTraces) {
    const ArrayConfig c;
    const auto run = generate_run(c, UniformWeights{}, 1, 100, 15);
    const std::vector<std::size_t> bad{50, 101};
    EXPECT_THROW(trace_count_progression(run, HypothesisSpace::full_enumeration(0, c), 0, bad, c), RangeError);
    const std::vector<std::size_t> unordered{50, 40};
    EXPECT_THROW(trace_count_progression(run, HypothesisSpace::full_enumeration(0, c), 0, unordered, c),
                 RangeError);
}

TEST(SuccessCurve, SinglePeIsPerfectAndCurvesDecrease) {
    const std::vector<std::size_t> taus{0, 7};
    std::vector<TraceCampaign> camps;
    for (unsigned n : {1u, 2u, 4u, 8u, 16u}) {
        ArrayConfig c;
        c.n_pe = n;
        camps.push_back(generate_campaign(c, UniformWeights{}, 8, 2000, 60, derive_seed(3, n)));
    }
    const auto pts = success_curve(camps, taus);
    ASSERT_EQ(pts.size(), 10u);
    for (std::size_t k = 0; k < 2; ++k) {
        std::vector<SuccessPoint> curve;
        for (const auto &p : pts)
            if (p.tau == taus[k])
                curve.push_back(p);
        // A run drawing weight 0 for the attacked step has an undefined rho, counted as 0.
        EXPECT_NEAR(curve[0].mean_correct, 1.0, 0.05);
        for (std::size_t i = 1; i < curve.size(); ++i)
            EXPECT_LE(curve[i].mean_correct,
                      curve[i - 1].mean_correct + 2 * std::hypot(curve[i].se_correct, curve[i - 1].se_correct))
                << "tau " << taus[k] << " n_pe " << curve[i].n_pe;
    }
}

TEST(SuccessCurve, AggregationModes) {
    ArrayConfig c;
    c.n_pe = 4;
    const std::vector<TraceCampaign> camps{generate_campaign(c, UniformWeights{}, 2, 500, 20, 5)};
    const std::vector<std::size_t> taus{1};
    SuccessOptions mm;
    mm.aggregation = IncorrectAggregation::MeanThenMax;
    const auto a = success_curve(camps, taus);
    const auto b = success_curve(camps, taus, mm);
    EXPECT_EQ(a[0].mean_correct, b[0].mean_correct);
    // The mean of per-run maxima bounds every per-candidate mean.
    EXPECT_GE(a[0].mean_incorrect, b[0].mean_incorrect);
}
