#include <doctest.h>

#include <random>

#include "support.hpp"
#include "vowelseg/error.hpp"

using namespace vowelseg;

namespace {

Model zero_model(bool classifier) {
    Model m;
    m.layout = FeatureMapLayout::build(classifier);
    m.weights.assign(m.layout.size(), 0.0);
    m.priors = {40.0, 100.0, 16.0, 2.5};
    return m;
}

std::size_t prior_index(const FeatureMapLayout& layout, PriorKind kind) {
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (auto* d = std::get_if<DurationPriorEntry>(&layout.entries()[i]); d && d->kind == kind) return i;
    }
    throw std::logic_error("no prior entry");
}

}  // namespace

TEST_CASE("task loss") {
    const LossParams p{1.0, 2.0};
    CHECK(task_loss({10, 30}, {10, 30}, p) == 0.0);
    CHECK(task_loss({10, 30}, {12, 35}, p) == 4.0);
    CHECK(task_loss({10, 30}, {11, 32}, p) == 0.0);
    CHECK(task_loss({10, 30}, {7, 26}, p) == 4.0);
    CHECK(task_loss({10, 30}, {12, 35}, {0.0, 0.0}) == 7.0);

    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> f(1, 200);
    for (int i = 0; i < 1000; ++i) {
        const OnsetOffsetPair a{f(rng), f(rng)}, b{f(rng), f(rng)};
        const LossParams lp{static_cast<double>(i % 3), static_cast<double>(i % 4)};
        CHECK(task_loss(a, b, lp) == task_loss(b, a, lp));
        CHECK(task_loss(a, b, lp) >= 0.0);
        CHECK(task_loss(a, b, lp) == vstest::naive_loss(a, b, lp.tau_b, lp.tau_e));
    }
}

TEST_CASE("zero weights pick the earliest admissible pair") {
    std::mt19937_64 rng(2);
    const auto seq = vstest::random_sequence(rng, 100);
    const auto m = zero_model(true);
    const auto d = decode(seq, m);
    CHECK(d.pair == OnsetOffsetPair{15, 20});
    CHECK(d.score == 0.0);
}

TEST_CASE("the duration prior alone selects its mode") {
    std::mt19937_64 rng(3);
    const auto seq = vstest::random_sequence(rng, 100, false);
    auto m = zero_model(false);
    m.weights[prior_index(m.layout, PriorKind::Normal)] = 1.0;
    const auto d = decode(seq, m);
    CHECK(d.pair.duration() == 40);
    CHECK(d.pair.onset == 15);
    CHECK(d.score == doctest::Approx(m.priors.normal_density(40.0)));
}

TEST_CASE("loss-augmented decoding") {
    std::mt19937_64 rng(4);
    const auto seq = vstest::random_sequence(rng, 90);
    auto m = vstest::random_model(rng, 90, true, true);
    m.constraints = {};
    const FramePrefixSums sums(seq);
    const OnsetOffsetPair target{30, 52};

    const auto plain = decode(sums, m);
    const auto zero_eps = decode_loss_augmented(sums, m, target, 0.0, {1.0, 2.0});
    CHECK(plain.pair == zero_eps.pair);
    CHECK(plain.score == doctest::Approx(zero_eps.score).epsilon(1e-12));

    auto z = zero_model(true);
    const auto pulled = decode_loss_augmented(seq, z, target, -1.0, {0.0, 0.0});
    CHECK(pulled.pair == target);
    CHECK(pulled.score == 0.0);
    // With tolerances the earliest zero-loss pair wins the tie.
    CHECK(decode_loss_augmented(seq, z, target, -1.0, {1.0, 2.0}).pair == OnsetOffsetPair{29, 50});
}

TEST_CASE("decoder equals the exhaustive oracle") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> eps(-3.0, 3.0);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t T = std::uniform_int_distribution<std::size_t>(30, 110)(rng);
        const bool clf = trial % 2 == 0;
        const auto seq = vstest::random_sequence(rng, T, clf);
        const auto m = vstest::random_model(rng, T, clf, trial % 3 != 0);
        const FramePrefixSums sums(seq);

        const auto fast = decode(sums, m);
        const auto slow = vstest::naive_decode(seq, m);
        CHECK(fast.pair == slow.pair);
        CHECK(std::abs(fast.score - slow.score) <= 1e-9);
        CHECK(std::abs(fast.score - score_pair(sums, m, fast.pair)) <= 1e-9);
        CHECK(m.constraints.admits(fast.pair, T));

        const int tb = std::uniform_int_distribution<int>(1, static_cast<int>(T) - 1)(rng);
        const OnsetOffsetPair target{tb, std::uniform_int_distribution<int>(tb + 1, static_cast<int>(T))(rng)};
        const double e = eps(rng);
        const auto fa = decode_loss_augmented(sums, m, target, e, m.loss_params);
        const auto sa = vstest::naive_decode(seq, m, target, e);
        CHECK(fa.pair == sa.pair);
        CHECK(std::abs(fa.score - sa.score) <= 1e-9);
    }
}

TEST_CASE("properties of the argmax") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t T = 80;
        const auto seq = vstest::random_sequence(rng, T);
        auto m = vstest::random_model(rng, T, true, false);
        m.constraints.max_duration = 0;
        const auto base = decode(seq, m);

        auto scaled = m;
        for (double& w : scaled.weights) w *= 3.7;
        CHECK(decode(seq, scaled).pair == base.pair);

        auto tighter = m;
        tighter.constraints.min_duration = m.constraints.min_duration + 10;
        const auto restricted = decode(seq, tighter);
        CHECK(restricted.score <= base.score + 1e-12);
        if (base.pair.duration() >= tighter.constraints.min_duration) CHECK(restricted.pair == base.pair);
    }
}

TEST_CASE("too short for the constraints") {
    std::mt19937_64 rng(7);
    const auto m = zero_model(true);
    // 14 + 5 + 10 frames around the pair need T >= 30.
    CHECK_THROWS_AS(decode(vstest::random_sequence(rng, 29), m), NoAdmissiblePair);
    CHECK(decode(vstest::random_sequence(rng, 30), m).pair == OnsetOffsetPair{15, 20});

    auto bad = m;
    bad.weights.pop_back();
    CHECK_THROWS(decode(vstest::random_sequence(rng, 60), bad));
}

TEST_CASE("constraint validation") {
    DecoderConstraints c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.admits({15, 20}, 30));
    CHECK_FALSE(c.admits({15, 19}, 30));
    CHECK_FALSE(c.admits({14, 20}, 30));
    CHECK_FALSE(c.admits({15, 21}, 30));
    c.margin_before = 3;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.max_duration = 2;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
