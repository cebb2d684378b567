#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vowelseg/featfunc.hpp"

namespace vowelseg {

inline constexpr double kOnsetThresholdMs = 20.0;
inline constexpr double kOffsetThresholdMs = 50.0;

/// The four consonant context classes used for per-context breakdowns.
inline constexpr const char* kContextClasses[] = {"voiceless_stop", "voiced_stop", "fricative", "sonorant"};

struct TokenPrediction {
    std::string id;
    OnsetOffsetPair pair;
};

struct TokenTarget {
    std::string id;
    OnsetOffsetPair pair;
    std::string onset_class;  // empty when unknown
    std::string coda_class;
};

struct TokenResult {
    std::string id;
    double onset_dev_ms = 0.0;
    double offset_dev_ms = 0.0;
    double duration_pred_ms = 0.0;
    double duration_target_ms = 0.0;
    std::string onset_class;
    std::string coda_class;
};

struct ContextSummary {
    double mean_duration_dev_ms = 0.0;
    std::size_t count = 0;
};

struct EvalReport {
    std::vector<TokenResult> tokens;
    double mean_onset_dev_ms = 0.0;
    double mean_offset_dev_ms = 0.0;
    double pct_onset_outside_20ms = 0.0;
    double pct_offset_outside_50ms = 0.0;
    /// Absent with fewer than two tokens or zero duration variance.
    std::optional<double> pearson_r;
    std::map<std::pair<std::string, std::string>, ContextSummary> per_context;
};

/// Joins predictions to targets by id; deviations use zero tolerance.
/// Throws vowelseg::Error when the id sets differ.
EvalReport evaluate(std::span<const TokenPrediction> predictions, std::span<const TokenTarget> targets,
                    double hop);

/// Sample Pearson correlation. Throws vowelseg::Error on zero variance and
/// std::invalid_argument on bad lengths.
double pearson(std::span<const double> x, std::span<const double> y);

/// Deviation beyond threshold; equality counts as inside.
bool outside_threshold(double deviation_ms, double threshold_ms);

void write_report_csv(std::ostream& out, const EvalReport& report);
void write_report_summary(std::ostream& out, const EvalReport& report);

}  // namespace vowelseg
