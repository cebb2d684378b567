#include "vowelseg/classifier.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "vowelseg/error.hpp"

namespace vowelseg {

namespace {

constexpr std::size_t kDim = dsp::kMfccDim;

double dot(const double* w, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < kDim; ++i) s += w[i] * x[i];
    return s;
}

}  // namespace

std::size_t ClassInventory::index_of(const std::string& name) const {
    auto it = std::find(class_names.begin(), class_names.end(), name);
    if (it == class_names.end()) throw std::invalid_argument("unknown class '" + name + "'");
    return static_cast<std::size_t>(it - class_names.begin());
}

void ClassInventory::validate() const {
    std::set<std::string> seen(class_names.begin(), class_names.end());
    if (seen.size() != class_names.size()) throw std::invalid_argument("duplicate class names");
    if (vowels.empty()) throw std::invalid_argument("vowel set is empty");
    std::set<std::size_t> v(vowels.begin(), vowels.end());
    for (std::size_t i : vowels) {
        if (i >= class_names.size()) throw std::invalid_argument("vowel index out of range");
    }
    for (std::size_t i : nasals) {
        if (i >= class_names.size()) throw std::invalid_argument("nasal index out of range");
        if (v.contains(i)) throw std::invalid_argument("vowel and nasal sets overlap");
    }
}

ClassInventory ClassInventory::parse(const std::string& text) {
    ClassInventory inv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string name, kind;
        if (!(fields >> name)) continue;
        if (!(fields >> kind)) kind = "other";
        const std::size_t idx = inv.class_names.size();
        inv.class_names.push_back(name);
        if (kind == "vowel") {
            inv.vowels.push_back(idx);
        } else if (kind == "nasal") {
            inv.nasals.push_back(idx);
        } else if (kind != "other") {
            throw FormatError("class inventory line " + std::to_string(lineno) +
                              ": unknown kind '" + kind + "'");
        }
    }
    inv.validate();
    return inv;
}

FrameClassifier::FrameClassifier(ClassInventory inventory, std::vector<double> weights)
    : inventory_(std::move(inventory)), weights_(std::move(weights)) {
    inventory_.validate();
    if (weights_.size() != inventory_.class_names.size() * kDim) {
        throw std::invalid_argument("classifier weights must be num_classes x 39");
    }
}

std::vector<double> FrameClassifier::score_frame(std::span<const double> mfcc) const {
    if (mfcc.size() != kDim) throw std::invalid_argument("classifier input must be 39-dimensional");
    std::vector<double> scores(num_classes());
    for (std::size_t c = 0; c < scores.size(); ++c) scores[c] = dot(&weights_[c * kDim], mfcc);
    return scores;
}

std::size_t FrameClassifier::argmax(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("empty score vector");
    return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

PaStep pa_multiclass_step(std::vector<double>& weights, std::size_t num_classes,
                          const LabeledFrame& example, double C) {
    std::span<const double> x(example.mfcc);
    PaStep step;
    double rival_score = 0.0;
    bool have_rival = false;
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (c == example.label) continue;
        const double s = dot(&weights[c * kDim], x);
        if (!have_rival || s > rival_score) {
            rival_score = s;
            step.rival = c;
            have_rival = true;
        }
    }
    const double true_score = dot(&weights[example.label * kDim], x);
    step.loss = std::max(0.0, 1.0 - true_score + rival_score);
    if (step.loss <= 0.0) return step;

    double sq = 0.0;
    for (double v : x) sq += v * v;
    // The multiclass feature difference puts x and -x in two class blocks.
    const double diff_sq = 2.0 * sq;
    if (diff_sq <= 0.0) return step;
    step.tau = std::min(C, step.loss / diff_sq);
    for (std::size_t i = 0; i < kDim; ++i) {
        weights[example.label * kDim + i] += step.tau * x[i];
        weights[step.rival * kDim + i] -= step.tau * x[i];
    }
    return step;
}

FrameClassifier train_pa_multiclass(std::span<const LabeledFrame> data,
                                    const ClassInventory& inventory,
                                    const MulticlassPaOptions& options) {
    inventory.validate();
    if (!(options.C > 0.0)) throw std::invalid_argument("PA parameter C must be positive");
    if (options.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    const std::size_t k = inventory.class_names.size();
    std::set<std::size_t> present;
    for (const auto& ex : data) {
        if (ex.label >= k) throw std::invalid_argument("frame label outside class inventory");
        present.insert(ex.label);
    }
    if (present.size() < 2) throw Error("classifier training needs at least two classes present");

    // Snapshot average via sum_s w_s = (S + 1) w_S - sum_j j * delta_j, so
    // each step costs O(39) instead of O(k * 39).
    std::vector<double> w(k * kDim, 0.0), weighted(k * kDim, 0.0);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(options.seed);
    std::size_t steps = 0;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i : order) {
            ++steps;
            const std::size_t y = data[i].label;
            const auto step = pa_multiclass_step(w, k, data[i], options.C);
            if (step.tau == 0.0) continue;
            const double c = static_cast<double>(steps);
            for (std::size_t j = 0; j < kDim; ++j) {
                const double delta = step.tau * data[i].mfcc[j];
                weighted[y * kDim + j] += c * delta;
                weighted[step.rival * kDim + j] -= c * delta;
            }
        }
    }
    const double s = static_cast<double>(steps);
    std::vector<double> avg(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) avg[j] = ((s + 1.0) * w[j] - weighted[j]) / s;
    return FrameClassifier(inventory, std::move(avg));
}

}  // namespace vowelseg
