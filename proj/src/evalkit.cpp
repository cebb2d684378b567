#include "vowelseg/evalkit.hpp"

#include <cmath>
#include <iomanip>
#include <locale>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "vowelseg/error.hpp"

namespace vowelseg {

bool outside_threshold(double deviation_ms, double threshold_ms) {
    // Frame multiples of 5 ms carry binary rounding noise; equality is inside.
    return deviation_ms > threshold_ms + 1e-9;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("pearson: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw Error("pearson: undefined correlation (zero variance)");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

EvalReport evaluate(std::span<const TokenPrediction> predictions, std::span<const TokenTarget> targets,
                    double hop) {
    if (!(hop > 0.0)) throw std::invalid_argument("hop must be positive");
    if (predictions.size() != targets.size()) throw Error("evaluate: prediction and target counts differ");
    if (targets.empty()) throw Error("evaluate: no tokens");
    std::unordered_map<std::string, const TokenPrediction*> by_id;
    for (const auto& p : predictions) {
        if (!by_id.emplace(p.id, &p).second) throw Error("evaluate: duplicate prediction id '" + p.id + "'");
    }

    const double frame_ms = hop * 1000.0;
    EvalReport report;
    std::vector<double> pred_dur, target_dur;
    std::size_t onset_out = 0, offset_out = 0;
    std::map<std::pair<std::string, std::string>, double> context_sum;
    for (const auto& t : targets) {
        auto it = by_id.find(t.id);
        if (it == by_id.end()) throw Error("evaluate: no prediction for token '" + t.id + "'");
        const OnsetOffsetPair p = it->second->pair;
        TokenResult r;
        r.id = t.id;
        r.onset_dev_ms = std::abs(p.onset - t.pair.onset) * frame_ms;
        r.offset_dev_ms = std::abs(p.offset - t.pair.offset) * frame_ms;
        r.duration_pred_ms = p.duration() * frame_ms;
        r.duration_target_ms = t.pair.duration() * frame_ms;
        r.onset_class = t.onset_class;
        r.coda_class = t.coda_class;

        report.mean_onset_dev_ms += r.onset_dev_ms;
        report.mean_offset_dev_ms += r.offset_dev_ms;
        if (outside_threshold(r.onset_dev_ms, kOnsetThresholdMs)) ++onset_out;
        if (outside_threshold(r.offset_dev_ms, kOffsetThresholdMs)) ++offset_out;
        pred_dur.push_back(r.duration_pred_ms);
        target_dur.push_back(r.duration_target_ms);
        if (!t.onset_class.empty() || !t.coda_class.empty()) {
            auto key = std::make_pair(t.onset_class, t.coda_class);
            context_sum[key] += std::abs(r.duration_pred_ms - r.duration_target_ms);
            ++report.per_context[key].count;
        }
        report.tokens.push_back(std::move(r));
    }

    const double n = static_cast<double>(targets.size());
    report.mean_onset_dev_ms /= n;
    report.mean_offset_dev_ms /= n;
    report.pct_onset_outside_20ms = 100.0 * static_cast<double>(onset_out) / n;
    report.pct_offset_outside_50ms = 100.0 * static_cast<double>(offset_out) / n;
    for (auto& [key, summary] : report.per_context) {
        summary.mean_duration_dev_ms = context_sum[key] / static_cast<double>(summary.count);
    }
    if (targets.size() >= 2) {
        try {
            report.pearson_r = pearson(pred_dur, target_dur);
        } catch (const Error&) {
            report.pearson_r.reset();
        }
    }
    return report;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
    out.imbue(std::locale::classic());
    out << "id,onset_dev_ms,offset_dev_ms,duration_pred_ms,duration_target_ms,onset_class,coda_class\n";
    out << std::setprecision(9);
    for (const auto& t : report.tokens) {
        out << t.id << ',' << t.onset_dev_ms << ',' << t.offset_dev_ms << ',' << t.duration_pred_ms << ','
            << t.duration_target_ms << ',' << t.onset_class << ',' << t.coda_class << '\n';
    }
}

void write_report_summary(std::ostream& out, const EvalReport& report) {
    out.imbue(std::locale::classic());
    out << std::fixed << std::setprecision(2);
    out << "tokens: " << report.tokens.size() << '\n';
    out << "Average deviation [ms]     onset " << std::setw(8) << report.mean_onset_dev_ms << "   offset "
        << std::setw(8) << report.mean_offset_dev_ms << '\n';
    out << "Outside threshold [%]      onset>20ms " << std::setw(6) << report.pct_onset_outside_20ms
        << "   offset>50ms " << std::setw(6) << report.pct_offset_outside_50ms << '\n';
    if (report.pearson_r) {
        out << std::setprecision(4) << "Duration correlation r     " << *report.pearson_r << '\n';
    } else {
        out << "Duration correlation r     undefined\n";
    }
    if (!report.per_context.empty()) {
        out << std::setprecision(2) << "Mean |duration error| by context [ms]\n";
        for (const auto& [key, s] : report.per_context) {
            out << "  " << std::left << std::setw(16) << key.first << std::setw(16) << key.second << std::right
                << std::setw(8) << s.mean_duration_dev_ms << "  (n=" << s.count << ")\n";
        }
    }
    out.unsetf(std::ios::floatfield);
}

}  // namespace vowelseg
