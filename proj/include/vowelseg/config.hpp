#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "vowelseg/classifier.hpp"
#include "vowelseg/train.hpp"

namespace vowelseg {

struct AppConfig {
    TrainConfig train;
    MulticlassPaOptions classifier;
};

/// `key = value` lines; '#' starts a comment. Keys:
///   eta0 epsilon tau_b tau_e pa_C pa_epochs dlm_iters seed dev_fraction
///   report_interval normalize margin_before margin_after min_duration
///   max_duration classifier_C classifier_epochs
/// Unknown keys and malformed values throw FormatError naming the line.
/// The result is validated before it is returned.
AppConfig parse_config(std::istream& in, AppConfig base = {});
AppConfig read_config(const std::filesystem::path& path, AppConfig base = {});

}  // namespace vowelseg
