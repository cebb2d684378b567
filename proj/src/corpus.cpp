#include "vowelseg/corpus.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "vowelseg/error.hpp"
#include "vowelseg/evalkit.hpp"
#include "vowelseg/features.hpp"
#include "vowelseg/wav.hpp"

namespace vowelseg {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Comma-separated fields; a field may be double-quoted with "" as an escaped quote.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

bool parse_double(const std::string& s, double& v) {
    if (s.empty()) return false;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    return ec == std::errc() && p == end && std::isfinite(v);
}

bool known_context(const std::string& c) {
    if (c.empty()) return true;
    for (const char* k : kContextClasses) {
        if (c == k) return true;
    }
    return false;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

}  // namespace

Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
    Manifest m;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    std::set<std::string> ids;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (trim(line).empty()) continue;
        if (!header_seen) {
            auto h = split_csv(line);
            if (h != split_csv(kManifestHeader)) {
                throw FormatError("manifest header must be '" + std::string(kManifestHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        auto f = split_csv(line);
        auto reject = [&](std::string msg) {
            m.errors.push_back({lineno, f.size() == 6 ? f[5] : std::string(), std::move(msg)});
        };
        if (f.size() != 6) {
            reject("expected 6 fields, found " + std::to_string(f.size()));
            continue;
        }
        ManifestRow r;
        r.line = lineno;
        r.token_id = f[5];
        r.onset_class = f[3];
        r.coda_class = f[4];
        if (f[0].empty()) {
            reject("empty audio path");
            continue;
        }
        if (r.token_id.empty()) {
            reject("empty token id");
            continue;
        }
        if (!parse_double(f[1], r.onset_s) || !parse_double(f[2], r.offset_s)) {
            reject("onset_s/offset_s must be decimal numbers");
            continue;
        }
        if (r.onset_s < 0.0 || !(r.onset_s < r.offset_s)) {
            reject("requires 0 <= onset_s < offset_s");
            continue;
        }
        if (!known_context(r.onset_class) || !known_context(r.coda_class)) {
            reject("unknown context class (expected voiceless_stop, voiced_stop, fricative or sonorant)");
            continue;
        }
        if (!ids.insert(r.token_id).second) {
            reject("duplicate token id '" + r.token_id + "'");
            continue;
        }
        const std::filesystem::path p(f[0]);
        r.audio_path = p.is_absolute() ? p : base_dir / p;
        m.rows.push_back(std::move(r));
    }
    if (!header_seen) throw FormatError("empty manifest");
    return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest " + path.string());
    return parse_manifest(in, path.parent_path());
}

void write_manifest(std::ostream& out, const std::vector<ManifestRow>& rows, const std::filesystem::path& base_dir) {
    out.imbue(std::locale::classic());
    out << kManifestHeader << '\n';
    char buf[64];
    for (const auto& r : rows) {
        std::filesystem::path p = r.audio_path;
        if (!base_dir.empty() && p.is_absolute() == base_dir.is_absolute()) {
            auto rel = p.lexically_relative(base_dir);
            if (!rel.empty()) p = rel;
        }
        out << csv_field(p.generic_string()) << ',';
        auto [e1, ec1] = std::to_chars(buf, buf + sizeof buf, r.onset_s);
        out.write(buf, e1 - buf) << ',';
        auto [e2, ec2] = std::to_chars(buf, buf + sizeof buf, r.offset_s);
        out.write(buf, e2 - buf) << ',';
        out << csv_field(r.onset_class) << ',' << csv_field(r.coda_class) << ',' << csv_field(r.token_id) << '\n';
    }
}

int seconds_to_frame(double seconds, double hop) {
    if (!(hop > 0.0)) throw std::invalid_argument("hop must be positive");
    return static_cast<int>(std::lround(seconds / hop)) + 1;
}

double frame_to_seconds(int t, double hop) { return static_cast<double>(t - 1) * hop; }

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex mu;
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t j = 0; j < jobs; ++j) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!first) first = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

IngestResult ingest(const Manifest& manifest, const FrameClassifier* clf, const DecoderConstraints& constraints,
                    std::size_t jobs) {
    const std::size_t n = manifest.rows.size();
    std::vector<std::optional<TrainingExample>> slots(n);
    std::vector<std::optional<RowError>> failures(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        const auto& r = manifest.rows[i];
        try {
            const auto audio = load_audio(r.audio_path);
            TrainingExample ex;
            ex.seq = extract_features(audio, clf);
            ex.id = r.token_id;
            ex.target = {seconds_to_frame(r.onset_s, ex.seq.hop()), seconds_to_frame(r.offset_s, ex.seq.hop())};
            if (!constraints.admits(ex.target, ex.seq.num_frames())) {
                std::ostringstream msg;
                msg << "target frames (" << ex.target.onset << ", " << ex.target.offset << ") outside constraints for "
                    << ex.seq.num_frames() << " frames (margins " << constraints.margin_before << "/"
                    << constraints.margin_after << ", min duration " << constraints.min_duration << ")";
                failures[i] = RowError{r.line, r.token_id, msg.str()};
                return;
            }
            if (!r.onset_class.empty() || !r.coda_class.empty()) ex.context = ContextInfo{r.onset_class, r.coda_class};
            slots[i] = std::move(ex);
        } catch (const std::exception& e) {
            failures[i] = RowError{r.line, r.token_id, e.what()};
        }
    });
    IngestResult out;
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i]) out.examples.push_back(std::move(*slots[i]));
        if (failures[i]) out.errors.push_back(std::move(*failures[i]));
    }
    return out;
}

}  // namespace vowelseg
