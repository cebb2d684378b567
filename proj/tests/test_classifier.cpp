#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "vowelseg/classifier.hpp"
#include "vowelseg/error.hpp"

using namespace vowelseg;

namespace {

constexpr std::size_t kDim = dsp::kMfccDim;

ClassInventory three_classes() { return ClassInventory::parse("# test\nsil other\naa vowel\n\nm nasal\n"); }

std::vector<LabeledFrame> blobs(std::mt19937_64& rng, std::size_t per_class, std::size_t classes) {
    std::normal_distribution<double> g(0.0, 0.3);
    std::vector<LabeledFrame> out;
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            LabeledFrame f;
            for (double& v : f.mfcc) v = g(rng);
            f.mfcc[c] += 5.0;
            f.label = c;
            out.push_back(f);
        }
    }
    return out;
}

double dot_row(const std::vector<double>& w, std::size_t c, const dsp::MfccFrame& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < kDim; ++i) s += w[c * kDim + i] * x[i];
    return s;
}

}  // namespace

TEST_CASE("inventory parsing") {
    const auto inv = three_classes();
    CHECK(inv.class_names == std::vector<std::string>{"sil", "aa", "m"});
    CHECK(inv.vowels == std::vector<std::size_t>{1});
    CHECK(inv.nasals == std::vector<std::size_t>{2});
    CHECK(inv.index_of("m") == 2);
    CHECK_THROWS_AS(inv.index_of("zz"), std::invalid_argument);
    CHECK_THROWS_AS(ClassInventory::parse("a vowel\na other\n"), std::invalid_argument);
    CHECK_THROWS_AS(ClassInventory::parse("a other\nb nasal\n"), std::invalid_argument);
    CHECK_THROWS_AS(ClassInventory::parse("a vowel\nb plosive\n"), FormatError);
}

TEST_CASE("score_frame is a per-class dot product") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<double> w(3 * kDim);
    for (double& v : w) v = g(rng);
    FrameClassifier clf(three_classes(), w);
    dsp::MfccFrame x;
    for (double& v : x) v = g(rng);
    const auto s = clf.score_frame(x);
    REQUIRE(s.size() == 3);
    for (std::size_t c = 0; c < 3; ++c) CHECK(s[c] == doctest::Approx(dot_row(w, c, x)).epsilon(1e-14));

    CHECK(FrameClassifier::argmax(std::vector<double>{1.0, 3.0, 3.0, 2.0}) == 1);
    CHECK_THROWS_AS(FrameClassifier::argmax(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(clf.score_frame(std::vector<double>(13)), std::invalid_argument);
    CHECK_THROWS_AS(FrameClassifier(three_classes(), std::vector<double>(5)), std::invalid_argument);
}

TEST_CASE("one-hot input selects a weight column") {
    std::vector<double> w(3 * kDim, 0.0);
    w[0 * kDim + 4] = 0.5;
    w[1 * kDim + 4] = 2.0;
    w[2 * kDim + 4] = -1.0;
    FrameClassifier clf(three_classes(), w);
    dsp::MfccFrame x{};
    x[4] = 1.0;
    const auto s = clf.score_frame(x);
    CHECK(s == std::vector<double>{0.5, 2.0, -1.0});
    CHECK(FrameClassifier::argmax(s) == 1);
}

TEST_CASE("separable blobs are learned") {
    std::mt19937_64 rng(3);
    const auto data = blobs(rng, 40, 3);
    const auto clf = train_pa_multiclass(data, three_classes(), {1.0, 5, 11});
    std::size_t correct = 0;
    for (const auto& f : data) correct += FrameClassifier::argmax(clf.score_frame(f.mfcc)) == f.label;
    CHECK(correct == data.size());
}

TEST_CASE("PA step") {
    SUBCASE("zero loss is a no-op") {
        std::vector<double> w(3 * kDim, 0.0);
        LabeledFrame f{};
        f.mfcc[0] = 1.0;
        f.label = 1;
        w[1 * kDim + 0] = 2.0;
        const auto before = w;
        const auto step = pa_multiclass_step(w, 3, f, 1.0);
        CHECK(step.loss == 0.0);
        CHECK(step.tau == 0.0);
        CHECK(w == before);
    }
    SUBCASE("unclipped step zeroes the hinge against the rival") {
        std::mt19937_64 rng(9);
        std::normal_distribution<double> g;
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> w(4 * kDim);
            for (double& v : w) v = 0.1 * g(rng);
            LabeledFrame f{};
            for (double& v : f.mfcc) v = g(rng);
            f.label = static_cast<std::size_t>(trial % 4);
            const auto step = pa_multiclass_step(w, 4, f, 1e9);
            if (step.loss == 0.0) continue;
            CHECK(step.rival != f.label);
            const double margin = dot_row(w, f.label, f.mfcc) - dot_row(w, step.rival, f.mfcc);
            CHECK(margin == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("aggressiveness is capped by C") {
        std::vector<double> w(2 * kDim, 0.0);
        LabeledFrame f{};
        f.mfcc[0] = 0.1;
        f.label = 0;
        const auto step = pa_multiclass_step(w, 2, f, 0.25);
        CHECK(step.loss == 1.0);
        CHECK(step.tau == 0.25);
        CHECK(w[0] == doctest::Approx(0.025));
        CHECK(w[kDim] == doctest::Approx(-0.025));
    }
}

TEST_CASE("averaged weights match a naive snapshot average") {
    std::mt19937_64 rng(21);
    const auto data = blobs(rng, 6, 3);
    const MulticlassPaOptions opt{0.7, 3, 99};
    const auto clf = train_pa_multiclass(data, three_classes(), opt);

    std::vector<double> w(3 * kDim, 0.0), sum(3 * kDim, 0.0);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(opt.seed);
    std::size_t steps = 0;
    for (std::size_t e = 0; e < opt.epochs; ++e) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t i : order) {
            pa_multiclass_step(w, 3, data[i], opt.C);
            for (std::size_t j = 0; j < w.size(); ++j) sum[j] += w[j];
            ++steps;
        }
    }
    for (std::size_t j = 0; j < w.size(); ++j) CHECK(clf.weights()[j] == doctest::Approx(sum[j] / steps).epsilon(1e-10));
}

TEST_CASE("training errors and determinism") {
    std::mt19937_64 rng(5);
    auto data = blobs(rng, 10, 3);
    CHECK_THROWS_AS(train_pa_multiclass(data, three_classes(), {0.0, 5, 0}), std::invalid_argument);
    CHECK_THROWS_AS(train_pa_multiclass(data, three_classes(), {1.0, 0, 0}), std::invalid_argument);
    std::vector<LabeledFrame> single(data.begin(), data.begin() + 10);
    CHECK_THROWS_AS(train_pa_multiclass(single, three_classes(), {1.0, 5, 0}), Error);
    auto bad = data;
    bad[0].label = 7;
    CHECK_THROWS_AS(train_pa_multiclass(bad, three_classes(), {1.0, 5, 0}), std::invalid_argument);

    const auto a = train_pa_multiclass(data, three_classes(), {0.5, 4, 8});
    const auto b = train_pa_multiclass(data, three_classes(), {0.5, 4, 8});
    CHECK(a.weights() == b.weights());
}
