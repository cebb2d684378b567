#include "vowelseg/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <map>

#include "vowelseg/error.hpp"
#include "vowelseg/wav.hpp"

namespace vowelseg {

Segmenter::Segmenter(ModelFile file) {
    if (!file.model) throw Error("model file holds no segmentation model");
    model_ = std::move(*file.model);
    if (model_.layout.with_classifier()) {
        if (!file.classifier) throw Error("model uses classifier features but the file has no frame classifier");
        classifier_ = std::move(file.classifier);
    }
}

AcousticFrameSequence Segmenter::features(const dsp::Waveform& w) const { return extract_features(w, classifier()); }

Decoded Segmenter::predict(const AcousticFrameSequence& seq) const { return decode(seq, model_); }

std::vector<FilePrediction> predict_files(const Segmenter& seg, const std::vector<std::filesystem::path>& paths,
                                          std::size_t jobs) {
    std::vector<FilePrediction> out(paths.size());
    parallel_for(paths.size(), jobs, [&](std::size_t i) {
        auto& r = out[i];
        r.path = paths[i];
        try {
            const auto audio = load_audio(paths[i]);
            r.total_s = audio.duration();
            const auto seq = seg.features(audio);
            r.hop = seq.hop();
            r.pair = seg.predict(seq).pair;
        } catch (const std::exception& e) {
            r.error = e.what();
        }
    });
    return out;
}

std::vector<LabeledFrame> load_labeled_frames(const std::filesystem::path& segments_csv,
                                              const ClassInventory& inventory, std::size_t jobs) {
    std::ifstream in(segments_csv);
    if (!in) throw Error("cannot open " + segments_csv.string());
    struct Span {
        double b, e;
        std::size_t label;
    };
    std::map<std::string, std::vector<Span>> by_file;
    std::vector<std::string> order;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != "path,start_s,end_s,label") throw FormatError("segments header must be 'path,start_s,end_s,label'");
            continue;
        }
        std::vector<std::string> f;
        std::size_t pos = 0;
        for (std::size_t c; (c = line.find(',', pos)) != std::string::npos; pos = c + 1) f.push_back(line.substr(pos, c - pos));
        f.push_back(line.substr(pos));
        const std::string where = segments_csv.string() + ":" + std::to_string(lineno) + ": ";
        if (f.size() != 4) throw FormatError(where + "expected 4 fields");
        Span s{};
        auto num = [&](const std::string& t, double& v) {
            auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
            if (ec != std::errc() || p != t.data() + t.size()) throw FormatError(where + "bad number '" + t + "'");
        };
        num(f[1], s.b);
        num(f[2], s.e);
        if (!(s.b < s.e)) throw FormatError(where + "start_s must be < end_s");
        try {
            s.label = inventory.index_of(f[3]);
        } catch (const std::exception&) {
            throw FormatError(where + "label '" + f[3] + "' not in class inventory");
        }
        if (!by_file.contains(f[0])) order.push_back(f[0]);
        by_file[f[0]].push_back(s);
    }

    const auto base = segments_csv.parent_path();
    std::vector<std::vector<LabeledFrame>> per_file(order.size());
    parallel_for(order.size(), jobs, [&](std::size_t i) {
        const std::filesystem::path rel(order[i]);
        const auto audio = load_audio(rel.is_absolute() ? rel : base / rel);
        const auto grid = dsp::frame_signal(audio);
        const auto mfcc = dsp::mfcc_sequence(audio, grid);
        const auto& spans = by_file.at(order[i]);
        for (std::size_t t = 1; t <= grid.num_frames; ++t) {
            const double centre = grid.frame_time(t) + grid.window / 2.0;
            for (const auto& s : spans) {
                if (centre >= s.b && centre < s.e) {
                    per_file[i].push_back({mfcc[t - 1], s.label});
                    break;
                }
            }
        }
    });
    std::vector<LabeledFrame> out;
    for (auto& v : per_file) out.insert(out.end(), v.begin(), v.end());
    return out;
}

std::vector<TokenPrediction> predict_examples(const Model& model, std::span<const TrainingExample> examples,
                                              std::size_t jobs) {
    std::vector<TokenPrediction> out(examples.size());
    parallel_for(examples.size(), jobs, [&](std::size_t i) {
        out[i] = {examples[i].id, decode(examples[i].seq, model).pair};
    });
    return out;
}

std::vector<TokenTarget> targets_of(std::span<const TrainingExample> examples) {
    std::vector<TokenTarget> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) {
        TokenTarget t{ex.id, ex.target, {}, {}};
        if (ex.context) {
            t.onset_class = ex.context->onset_class;
            t.coda_class = ex.context->coda_class;
        }
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace vowelseg
