#include "vowelseg/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <locale>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "vowelseg/error.hpp"

namespace vowelseg {

void TrainConfig::validate() const {
    if (!(eta0 > 0.0)) throw std::invalid_argument("eta0 must be positive");
    if (epsilon == 0.0 || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be non-zero");
    if (!(pa_C > 0.0)) throw std::invalid_argument("pa_C must be positive");
    if (tau_b < 0.0 || tau_e < 0.0) throw std::invalid_argument("loss tolerances must be >= 0");
    if (dev_fraction < 0.0 || dev_fraction >= 1.0) throw std::invalid_argument("dev_fraction must be in [0, 1)");
    if (report_interval == 0) throw std::invalid_argument("report_interval must be positive");
    constraints.validate();
}

std::string format_log_record(const TrainLogRecord& r) {
    std::ostringstream out;
    out.imbue(std::locale::classic());
    out << "iter=" << r.iter << " dev_loss=" << r.dev_loss << " train_loss=" << r.train_loss;
    return out.str();
}

Normalization fit_normalization(std::span<const PreparedExample> data, const FeatureMapLayout& layout,
                                const DurationPriorParams& priors) {
    if (data.size() < 2) throw Error("normalization needs at least two examples");
    const std::size_t n = layout.size();
    std::vector<std::vector<double>> rows;
    rows.reserve(data.size());
    for (const auto& ex : data) rows.push_back(eval_phi(ex.sums, ex.target, layout, priors));

    Normalization norm;
    norm.mean.assign(n, 0.0);
    norm.stddev.assign(n, 0.0);
    const double m = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < n; ++i) norm.mean[i] += r[i];
    }
    for (double& v : norm.mean) v /= m;
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < n; ++i) norm.stddev[i] += (r[i] - norm.mean[i]) * (r[i] - norm.mean[i]);
    }
    for (double& v : norm.stddev) v = std::max(kNormalizationFloor, std::sqrt(v / m));
    return norm;
}

namespace {

std::vector<double> phi_of(const PreparedExample& ex, const Model& ctx, OnsetOffsetPair pair) {
    return eval_phi(ex.sums, pair, ctx.layout, ctx.priors, ctx.norm());
}

Model with_weights(const Model& ctx, std::vector<double> w) {
    Model m = ctx;
    m.weights = std::move(w);
    return m;
}

}  // namespace

PaStructuredStep pa_structured_step(std::vector<double>& w, const PreparedExample& ex, const Model& ctx,
                                    const TrainConfig& cfg) {
    const Model current = with_weights(ctx, w);
    const LossParams loss = cfg.loss();
    PaStructuredStep step;
    step.prediction = decode_loss_augmented(ex.sums, current, ex.target, 1.0, loss).pair;
    const double gamma = task_loss(ex.target, step.prediction, loss);

    const auto phi_target = phi_of(ex, ctx, ex.target);
    const auto phi_pred = phi_of(ex, ctx, step.prediction);
    std::vector<double> diff(w.size());
    double sq = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        diff[i] = phi_target[i] - phi_pred[i];
        sq += diff[i] * diff[i];
    }
    step.loss = std::max(0.0, -dot(w, diff) + std::sqrt(gamma));
    if (step.loss <= 0.0 || sq <= 0.0) return step;

    step.tau = std::min(cfg.pa_C, step.loss / sq);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += step.tau * diff[i];

    if (cfg.check_pa_invariant && step.tau < cfg.pa_C) {
        const double after = -dot(w, diff) + std::sqrt(gamma);
        if (std::abs(after) > 1e-8 * std::max(1.0, step.loss)) {
            throw std::logic_error("PA step left non-zero hinge loss " + std::to_string(after));
        }
    }
    return step;
}

std::vector<double> train_pa_structured(std::span<const PreparedExample> data, const Model& ctx,
                                        const TrainConfig& cfg) {
    if (data.empty()) throw Error("structured PA needs training data");
    cfg.validate();
    const std::size_t n = ctx.layout.size();
    std::vector<double> w(n, 0.0), sum(n, 0.0);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed);
    std::size_t steps = 0;
    for (std::size_t epoch = 0; epoch < cfg.pa_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i : order) {
            pa_structured_step(w, data[i], ctx, cfg);
            for (std::size_t j = 0; j < n; ++j) sum[j] += w[j];
            ++steps;
        }
    }
    if (steps == 0) return w;
    for (double& v : sum) v /= static_cast<double>(steps);
    return sum;
}

DlmStep dlm_step(std::vector<double>& w, const PreparedExample& ex, const Model& ctx, double eta0,
                 double epsilon, std::size_t t, const LossParams& loss) {
    if (t == 0) throw std::invalid_argument("DLM iteration index starts at 1");
    const Model current = with_weights(ctx, w);
    DlmStep step;
    step.prediction = decode(ex.sums, current).pair;
    step.augmented = decode_loss_augmented(ex.sums, current, ex.target, epsilon, loss).pair;
    if (step.prediction == step.augmented) return step;

    const auto phi_pred = phi_of(ex, ctx, step.prediction);
    const auto phi_aug = phi_of(ex, ctx, step.augmented);
    const double rate = eta0 / (epsilon * std::sqrt(static_cast<double>(t)));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += rate * (phi_pred[i] - phi_aug[i]);
    return step;
}

double mean_loss(std::span<const PreparedExample> data, const Model& model, const LossParams& loss) {
    if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
    double total = 0.0;
    for (const auto& ex : data) total += task_loss(ex.target, decode(ex.sums, model).pair, loss);
    return total / static_cast<double>(data.size());
}

Model train_dlm(std::span<const PreparedExample> train, std::span<const PreparedExample> dev, Model init,
                const TrainConfig& cfg, const TrainLogger& log) {
    if (train.empty()) throw Error("DLM needs training data");
    cfg.validate();
    init.validate();
    const std::size_t iters = cfg.dlm_iters > 0 ? cfg.dlm_iters : 20 * train.size();
    const LossParams loss = cfg.loss();

    std::vector<double> w = init.weights;
    std::vector<double> sum(w.size(), 0.0);
    // Separate stream from the PA shuffle so the two stages stay independent.
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
    double window_loss = 0.0;
    std::size_t window_count = 0;

    for (std::size_t t = 1; t <= iters; ++t) {
        for (std::size_t j = 0; j < w.size(); ++j) sum[j] += w[j];
        const auto& ex = train[pick(rng)];
        const auto step = dlm_step(w, ex, init, cfg.eta0, cfg.epsilon, t, loss);
        window_loss += task_loss(ex.target, step.prediction, loss);
        ++window_count;

        if (log && (t % cfg.report_interval == 0 || t == iters)) {
            std::vector<double> avg(sum);
            for (double& v : avg) v /= static_cast<double>(t);
            TrainLogRecord rec;
            rec.iter = t;
            rec.dev_loss = mean_loss(dev, with_weights(init, std::move(avg)), loss);
            rec.train_loss = window_loss / static_cast<double>(window_count);
            log(rec);
            window_loss = 0.0;
            window_count = 0;
        }
    }
    for (double& v : sum) v /= static_cast<double>(iters);

    Model out = std::move(init);
    out.weights = std::move(sum);
    out.provenance.eta0 = cfg.eta0;
    out.provenance.epsilon = cfg.epsilon;
    out.provenance.dlm_iters = iters;
    out.provenance.seed = cfg.seed;
    return out;
}

TrainResult train_full(std::span<const TrainingExample> data, const TrainConfig& cfg, bool with_classifier,
                       const TrainLogger& log) {
    if (data.empty()) throw Error("no training examples");
    cfg.validate();
    for (const auto& ex : data) {
        if (!cfg.constraints.admits(ex.target, ex.seq.num_frames())) {
            throw Error("example '" + ex.id + "' has a target outside the decoder constraints");
        }
        if (with_classifier && !ex.seq.has_classifier_features()) {
            throw Error("example '" + ex.id + "' lacks classifier features");
        }
    }

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 split_rng(cfg.seed + 1);
    std::shuffle(order.begin(), order.end(), split_rng);
    auto dev_count = static_cast<std::size_t>(std::llround(cfg.dev_fraction * static_cast<double>(data.size())));
    if (dev_count >= data.size()) dev_count = data.size() - 1;
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(dev_count));
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(dev_count), order.end());

    std::vector<PreparedExample> dev, train;
    dev.reserve(dev_count);
    train.reserve(data.size() - dev_count);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < dev_count ? dev : train).emplace_back(data[order[i]]);
    }
    if (train.size() < 2) throw Error("need at least two training examples after the dev split");

    std::vector<double> durations;
    durations.reserve(train.size());
    for (const auto& ex : train) durations.push_back(static_cast<double>(ex.target.duration()));

    Model ctx;
    ctx.layout = FeatureMapLayout::build(with_classifier);
    ctx.priors = fit_duration_priors(durations);
    ctx.constraints = cfg.constraints;
    ctx.loss_params = cfg.loss();
    if (cfg.normalize) ctx.normalization = fit_normalization(train, ctx.layout, ctx.priors);
    ctx.weights.assign(ctx.layout.size(), 0.0);
    ctx.provenance.pa_C = cfg.pa_C;
    ctx.provenance.pa_epochs = cfg.pa_epochs;
    ctx.provenance.seed = cfg.seed;
    ctx.provenance.pa_cost_augmented = true;

    TrainResult result;
    result.train_count = train.size();
    result.dev_count = dev.size();
    result.pa_model = with_weights(ctx, train_pa_structured(train, ctx, cfg));
    result.model = train_dlm(train, dev, result.pa_model, cfg, [&](const TrainLogRecord& r) {
        result.log.push_back(r);
        if (log) log(r);
    });
    return result;
}

}  // namespace vowelseg
