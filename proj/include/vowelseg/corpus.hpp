#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "vowelseg/model.hpp"
#include "vowelseg/train.hpp"

namespace vowelseg {

inline constexpr const char* kManifestHeader = "audio_path,onset_s,offset_s,onset_context,coda_context,token_id";

struct ManifestRow {
    std::filesystem::path audio_path;  // resolved against the manifest directory
    double onset_s = 0.0;
    double offset_s = 0.0;
    std::string onset_class;  // empty when unknown
    std::string coda_class;
    std::string token_id;
    std::size_t line = 0;
};

struct RowError {
    std::size_t line = 0;  // 0 when not tied to a manifest line
    std::string token_id;
    std::string message;
};

struct Manifest {
    std::vector<ManifestRow> rows;
    std::vector<RowError> errors;
};

/// Parses the CSV manifest. Bad rows land in `errors` with their line
/// number; a missing or wrong header throws FormatError. Numbers are read
/// with '.' as decimal separator regardless of locale.
Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir);
Manifest read_manifest(const std::filesystem::path& path);

/// Writes rows with paths relative to `base_dir` where possible.
void write_manifest(std::ostream& out, const std::vector<ManifestRow>& rows,
                    const std::filesystem::path& base_dir);

/// Nearest frame whose anchor time is `seconds`: round(seconds / hop) + 1.
int seconds_to_frame(double seconds, double hop);
/// Anchor time of frame t: (t - 1) * hop.
double frame_to_seconds(int t, double hop);

/// Runs `fn(i)` for i in [0, n) over up to `jobs` threads. The first
/// exception is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

struct IngestResult {
    std::vector<TrainingExample> examples;  // manifest order
    std::vector<RowError> errors;
};

/// Loads audio, extracts features and converts boundaries to frames.
/// Rows whose targets the constraints do not admit are rejected.
IngestResult ingest(const Manifest& manifest, const FrameClassifier* clf, const DecoderConstraints& constraints,
                    std::size_t jobs = 1);

}  // namespace vowelseg
