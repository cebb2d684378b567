#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "vowelseg/error.hpp"
#include "vowelseg/evalkit.hpp"

using namespace vowelseg;

namespace {

struct Fixture {
    std::vector<TokenPrediction> pred;
    std::vector<TokenTarget> target;
};

Fixture five_tokens() {
    Fixture f;
    f.target = {{"t1", {20, 60}, "voiceless_stop", "sonorant"},
                {"t2", {20, 60}, "voiceless_stop", "sonorant"},
                {"t3", {30, 70}, "fricative", "fricative"},
                {"t4", {30, 50}, "", ""},
                {"t5", {25, 85}, "voiced_stop", "sonorant"}};
    f.pred = {{"t5", {25, 75}}, {"t1", {20, 60}}, {"t2", {24, 62}}, {"t3", {35, 81}}, {"t4", {28, 50}}};
    return f;
}

double one_pass_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

}  // namespace

TEST_CASE("perfect predictions") {
    auto f = five_tokens();
    for (std::size_t i = 0; i < f.target.size(); ++i) f.pred[i] = {f.target[i].id, f.target[i].pair};
    const auto r = evaluate(f.pred, f.target, 0.005);
    CHECK(r.mean_onset_dev_ms == 0.0);
    CHECK(r.mean_offset_dev_ms == 0.0);
    CHECK(r.pct_onset_outside_20ms == 0.0);
    CHECK(r.pct_offset_outside_50ms == 0.0);
    REQUIRE(r.pearson_r.has_value());
    CHECK(*r.pearson_r == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("thresholds are inclusive") {
    CHECK_FALSE(outside_threshold(20.0, 20.0));
    CHECK(outside_threshold(25.0, 20.0));
    CHECK_FALSE(outside_threshold(50.0, 50.0));
    CHECK(outside_threshold(50.01, 50.0));
    // Four frames at 5 ms, as computed from a floating-point hop.
    CHECK_FALSE(outside_threshold(4 * 0.005 * 1000.0, kOnsetThresholdMs));
}

TEST_CASE("five-token fixture") {
    const auto f = five_tokens();
    const auto r = evaluate(f.pred, f.target, 0.005);
    CHECK(r.mean_onset_dev_ms == doctest::Approx(11.0));
    CHECK(r.mean_offset_dev_ms == doctest::Approx(23.0));
    CHECK(r.pct_onset_outside_20ms == doctest::Approx(20.0));
    CHECK(r.pct_offset_outside_50ms == doctest::Approx(20.0));
    REQUIRE(r.pearson_r.has_value());
    const std::vector<double> pd = {200, 190, 230, 110, 250}, td = {200, 200, 200, 100, 300};
    CHECK(*r.pearson_r == doctest::Approx(one_pass_pearson(pd, td)).epsilon(1e-12));

    REQUIRE(r.tokens.size() == 5);
    CHECK(r.tokens[0].id == "t1");
    CHECK(r.tokens[2].onset_dev_ms == doctest::Approx(25.0));
    CHECK(r.tokens[2].offset_dev_ms == doctest::Approx(55.0));

    REQUIRE(r.per_context.size() == 3);
    const auto& vs = r.per_context.at({"voiceless_stop", "sonorant"});
    CHECK(vs.count == 2);
    CHECK(vs.mean_duration_dev_ms == doctest::Approx(5.0));
    CHECK(r.per_context.at({"fricative", "fricative"}).mean_duration_dev_ms == doctest::Approx(30.0));
    CHECK(r.per_context.at({"voiced_stop", "sonorant"}).mean_duration_dev_ms == doctest::Approx(50.0));
}

TEST_CASE("pearson") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(200), y(200);
    for (double& v : x) v = g(rng);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 3.5 * x[i] - 7.0;
    CHECK(pearson(x, y) == doctest::Approx(1.0).epsilon(1e-12));
    for (double& v : y) v = -v;
    CHECK(pearson(x, y) == doctest::Approx(-1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + g(rng);
    CHECK(pearson(x, y) == doctest::Approx(one_pass_pearson(x, y)).epsilon(1e-10));
    CHECK(pearson(x, y) == doctest::Approx(pearson(y, x)).epsilon(1e-15));

    CHECK_THROWS_AS(pearson(std::vector<double>{1.0}, std::vector<double>{2.0}), std::invalid_argument);
    CHECK_THROWS_AS(pearson(std::vector<double>{1.0, 2.0}, std::vector<double>{2.0}), std::invalid_argument);
    CHECK_THROWS_AS(pearson(std::vector<double>{1.0, 1.0}, std::vector<double>{2.0, 3.0}), Error);
}

TEST_CASE("invariances") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> on(20, 40), dur(10, 60), jitter(-6, 6);
    std::vector<TokenPrediction> pred;
    std::vector<TokenTarget> target;
    for (int i = 0; i < 40; ++i) {
        const int tb = on(rng), te = tb + dur(rng);
        const std::string id = "tok" + std::to_string(i);
        target.push_back({id, {tb, te}, "", ""});
        pred.push_back({id, {tb + jitter(rng), te + jitter(rng)}});
    }
    const auto base = evaluate(pred, target, 0.005);

    // Shifting a token and its prediction together changes nothing.
    auto tp = pred;
    auto tt = target;
    for (std::size_t i = 0; i < tp.size(); ++i) {
        tp[i].pair.onset += 17;
        tp[i].pair.offset += 17;
        tt[i].pair.onset += 17;
        tt[i].pair.offset += 17;
    }
    const auto shifted = evaluate(tp, tt, 0.005);
    CHECK(shifted.mean_onset_dev_ms == base.mean_onset_dev_ms);
    CHECK(shifted.mean_offset_dev_ms == base.mean_offset_dev_ms);
    CHECK(*shifted.pearson_r == *base.pearson_r);

    std::shuffle(tp.begin(), tp.end(), rng);
    const auto reordered = evaluate(tp, tt, 0.005);
    CHECK(reordered.mean_onset_dev_ms == doctest::Approx(base.mean_onset_dev_ms).epsilon(1e-12));
    CHECK(reordered.pct_offset_outside_50ms == base.pct_offset_outside_50ms);
    CHECK(*reordered.pearson_r == doctest::Approx(*base.pearson_r).epsilon(1e-12));
}

TEST_CASE("id mismatches") {
    auto f = five_tokens();
    f.pred[0].id = "zz";
    CHECK_THROWS_AS(evaluate(f.pred, f.target, 0.005), Error);
    f = five_tokens();
    f.pred.pop_back();
    CHECK_THROWS_AS(evaluate(f.pred, f.target, 0.005), Error);
    f = five_tokens();
    f.pred[1].id = f.pred[0].id;
    CHECK_THROWS_AS(evaluate(f.pred, f.target, 0.005), Error);
    CHECK_THROWS_AS(evaluate({}, {}, 0.005), Error);

    // One token has no defined correlation.
    const std::vector<TokenTarget> one = {{"a", {20, 40}, "", ""}};
    const std::vector<TokenPrediction> p1 = {{"a", {21, 40}}};
    CHECK_FALSE(evaluate(p1, one, 0.005).pearson_r.has_value());
}

TEST_CASE("csv and summary agree") {
    const auto f = five_tokens();
    const auto r = evaluate(f.pred, f.target, 0.005);
    std::ostringstream csv;
    write_report_csv(csv, r);
    std::istringstream in(csv.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "id,onset_dev_ms,offset_dev_ms,duration_pred_ms,duration_target_ms,onset_class,coda_class");
    double onset_sum = 0.0, offset_sum = 0.0;
    int rows = 0;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string id, a, b;
        std::getline(row, id, ',');
        std::getline(row, a, ',');
        std::getline(row, b, ',');
        onset_sum += std::stod(a);
        offset_sum += std::stod(b);
        ++rows;
    }
    CHECK(rows == 5);
    CHECK(onset_sum / rows == doctest::Approx(r.mean_onset_dev_ms).epsilon(1e-9));
    CHECK(offset_sum / rows == doctest::Approx(r.mean_offset_dev_ms).epsilon(1e-9));

    std::ostringstream summary;
    write_report_summary(summary, r);
    const auto s = summary.str();
    CHECK(s.find("onset    11.00") != std::string::npos);
    CHECK(s.find("offset    23.00") != std::string::npos);
    CHECK(s.find("fricative") != std::string::npos);
}
