// vowelseg: synthetic corpora, training, prediction and evaluation of
// vowel onset/offset in CVC tokens.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "vowelseg/config.hpp"
#include "vowelseg/corpus.hpp"
#include "vowelseg/error.hpp"
#include "vowelseg/pipeline.hpp"
#include "vowelseg/synth.hpp"
#include "vowelseg/textgrid.hpp"

namespace fs = std::filesystem;
using namespace vowelseg;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kFatal = 2;

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
};

void setup_logging() {
    auto logger = spdlog::stderr_logger_mt("vowelseg");
    logger->set_pattern("%l: %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("VOWELSEG_LOG")) {
        const std::string v = env;
        if (v == "error") {
            spdlog::set_level(spdlog::level::err);
        } else if (v == "debug") {
            spdlog::set_level(spdlog::level::debug);
        } else if (v != "info") {
            spdlog::warn("VOWELSEG_LOG='{}' not recognised (error, info, debug); using info", v);
        }
    }
}

AppConfig load_config(const Globals& g) {
    AppConfig c = g.config.empty() ? AppConfig{} : read_config(g.config);
    if (g.seed) {
        c.train.seed = *g.seed;
        c.classifier.seed = *g.seed;
    }
    return c;
}

void report_rows(const std::vector<RowError>& errors) {
    for (const auto& e : errors) {
        if (e.line > 0) {
            spdlog::error("manifest line {}{}: {}", e.line, e.token_id.empty() ? "" : " (" + e.token_id + ")", e.message);
        } else {
            spdlog::error("{}: {}", e.token_id, e.message);
        }
    }
}

int cmd_synth(const Globals& g, std::size_t count, const fs::path& out) {
    const std::uint64_t seed = g.seed.value_or(load_config(g).train.seed);
    write_synth_corpus(out, count, seed, g.jobs);
    spdlog::info("wrote {} tokens to {}", count, out.string());
    return kOk;
}

int cmd_train(const Globals& g, const fs::path& manifest_path, const fs::path& out, bool no_classifier,
              const std::string& classifier_path) {
    if (no_classifier && !classifier_path.empty()) throw std::invalid_argument("--no-classifier and --classifier are exclusive");
    const AppConfig cfg = load_config(g);
    std::optional<FrameClassifier> clf;
    if (!classifier_path.empty()) {
        auto f = load_model_file(fs::path(classifier_path));
        if (!f.classifier) throw Error(classifier_path + " holds no frame classifier");
        clf = std::move(f.classifier);
    }

    const Manifest manifest = read_manifest(manifest_path);
    auto data = ingest(manifest, clf ? &*clf : nullptr, cfg.train.constraints, g.jobs);
    report_rows(manifest.errors);
    report_rows(data.errors);
    const std::size_t rejected = manifest.errors.size() + data.errors.size();
    if (data.examples.empty()) {
        spdlog::error("no usable rows in {}", manifest_path.string());
        return kFatal;
    }
    spdlog::info("training on {} tokens ({} rejected), {} mode", data.examples.size(), rejected,
                 clf ? "classifier" : "no-classifier");

    auto result = train_full(data.examples, cfg.train, clf.has_value(),
                             [](const TrainLogRecord& r) { std::cout << format_log_record(r) << '\n'; });
    spdlog::info("split {} train / {} dev; layout n = {}", result.train_count, result.dev_count,
                 result.model.layout.size());
    save_model_file(out, ModelFile{std::move(result.model), std::move(clf)});
    spdlog::info("model written to {}", out.string());
    return rejected > 0 ? kPartial : kOk;
}

int cmd_predict(const Globals& g, const fs::path& model_path, const std::vector<std::string>& audio,
                const std::string& format, const std::string& out) {
    const Segmenter seg(load_model_file(model_path));
    std::vector<fs::path> paths(audio.begin(), audio.end());
    const auto preds = predict_files(seg, paths, g.jobs);

    std::ofstream file;
    if (format == "csv" && !out.empty()) {
        file.open(out);
        if (!file) throw Error("cannot write " + out);
    }
    std::ostream& csv = file.is_open() ? file : std::cout;
    csv.imbue(std::locale::classic());
    if (format == "csv") csv << "path,onset_s,offset_s,duration_s\n";

    std::size_t failed = 0;
    for (const auto& p : preds) {
        if (!p.pair) {
            ++failed;
            spdlog::error("{}: {}", p.path.string(), p.error);
            continue;
        }
        if (format == "csv") {
            csv << p.path.string() << ',' << format_time(p.onset_s()) << ',' << format_time(p.offset_s()) << ','
                << format_time(p.duration_s()) << '\n';
        } else {
            const fs::path dir = out.empty() ? p.path.parent_path() : fs::path(out);
            if (!out.empty()) fs::create_directories(dir);
            const fs::path tg = dir / (p.path.stem().string() + ".TextGrid");
            std::ofstream f(tg);
            if (!f) throw Error("cannot write " + tg.string());
            f.imbue(std::locale::classic());
            write_textgrid(f, vowel_textgrid(p.total_s, p.onset_s(), p.offset_s()));
        }
    }
    if (failed == preds.size()) return kFatal;
    return failed > 0 ? kPartial : kOk;
}

int cmd_eval(const Globals& g, const fs::path& model_path, const fs::path& manifest_path, const std::string& report,
             const std::string& subset) {
    const Segmenter seg(load_model_file(model_path));
    Manifest manifest = read_manifest(manifest_path);
    if (!subset.empty()) {
        std::ifstream in(subset);
        if (!in) throw Error("cannot open subset file " + subset);
        std::set<std::string> keep;
        for (std::string id; std::getline(in, id);) {
            if (!id.empty() && id.back() == '\r') id.pop_back();
            if (!id.empty()) keep.insert(id);
        }
        std::erase_if(manifest.rows, [&](const ManifestRow& r) { return !keep.contains(r.token_id); });
    }
    auto data = ingest(manifest, seg.classifier(), seg.model().constraints, g.jobs);
    report_rows(manifest.errors);
    report_rows(data.errors);
    if (data.examples.empty()) {
        spdlog::error("no tokens to evaluate in {}", manifest_path.string());
        return kFatal;
    }
    const auto preds = predict_examples(seg.model(), data.examples, g.jobs);
    const auto rep = evaluate(preds, targets_of(data.examples), data.examples.front().seq.hop());
    if (!report.empty()) {
        std::ofstream f(report);
        if (!f) throw Error("cannot write " + report);
        write_report_csv(f, rep);
    }
    write_report_summary(std::cout, rep);
    return manifest.errors.empty() && data.errors.empty() ? kOk : kPartial;
}

int cmd_classifier_train(const Globals& g, const fs::path& segments, const fs::path& classes, const fs::path& out) {
    const AppConfig cfg = load_config(g);
    std::ifstream in(classes);
    if (!in) throw Error("cannot open " + classes.string());
    const ClassInventory inv = ClassInventory::parse(std::string(std::istreambuf_iterator<char>(in), {}));
    const auto frames = load_labeled_frames(segments, inv, g.jobs);
    if (frames.empty()) throw Error("no labelled frames in " + segments.string());
    spdlog::info("training frame classifier on {} frames, {} classes", frames.size(), inv.class_names.size());
    auto clf = train_pa_multiclass(frames, inv, cfg.classifier);
    std::size_t correct = 0;
    for (const auto& f : frames) correct += FrameClassifier::argmax(clf.score_frame(f.mfcc)) == f.label;
    spdlog::info("training-frame accuracy {:.3f}", static_cast<double>(correct) / static_cast<double>(frames.size()));
    save_model_file(out, ModelFile{std::nullopt, std::move(clf)});
    spdlog::info("classifier written to {}", out.string());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Vowel onset/offset measurement for CVC tokens"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Seed for every random choice");
    app.add_option("--jobs", g.jobs, "Worker threads for per-file work")->check(CLI::PositiveNumber);

    std::size_t count = 0;
    std::string out, manifest, model, classifier, format = "csv", report, subset, segments, classes;
    bool no_classifier = false;
    std::vector<std::string> audio;
    int rc = kOk;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic CVC corpus");
    synth->add_option("--count", count, "Number of tokens")->required()->check(CLI::PositiveNumber);
    synth->add_option("--out", out, "Output directory")->required();
    synth->callback([&] { rc = cmd_synth(g, count, out); });

    auto* train = app.add_subcommand("train", "Train a model from a manifest");
    train->add_option("manifest", manifest, "Corpus manifest CSV")->required()->check(CLI::ExistingFile);
    train->add_option("-o,--out", out, "Model file to write")->required();
    train->add_flag("--no-classifier", no_classifier, "Fill classifier features with a constant (default)");
    train->add_option("--classifier", classifier, "Model file holding a frame classifier")->check(CLI::ExistingFile);
    train->callback([&] { rc = cmd_train(g, manifest, out, no_classifier, classifier); });

    auto* predict = app.add_subcommand("predict", "Predict vowel boundaries");
    predict->add_option("-m,--model", model, "Model file")->required()->check(CLI::ExistingFile);
    predict->add_option("audio", audio, "WAV files")->required();
    predict->add_option("--format", format, "csv or textgrid")->check(CLI::IsMember({"csv", "textgrid"}));
    predict->add_option("-o,--out", out, "CSV file (csv) or directory (textgrid)");
    predict->callback([&] { rc = cmd_predict(g, model, audio, format, out); });

    auto* eval = app.add_subcommand("eval", "Evaluate a model against manifest annotations");
    eval->add_option("-m,--model", model, "Model file")->required()->check(CLI::ExistingFile);
    eval->add_option("manifest", manifest, "Corpus manifest CSV")->required()->check(CLI::ExistingFile);
    eval->add_option("--report", report, "Per-token CSV report");
    eval->add_option("--subset", subset, "File of token ids to keep, one per line")->check(CLI::ExistingFile);
    eval->callback([&] { rc = cmd_eval(g, model, manifest, report, subset); });

    auto* ctrain = app.add_subcommand("classifier-train", "Train a frame classifier from labelled segments");
    ctrain->add_option("--segments", segments, "CSV: path,start_s,end_s,label")->required()->check(CLI::ExistingFile);
    ctrain->add_option("--classes", classes, "Class inventory: <name> <vowel|nasal|other> per line")
        ->required()
        ->check(CLI::ExistingFile);
    ctrain->add_option("-o,--out", out, "Model file to write")->required();
    ctrain->callback([&] { rc = cmd_classifier_train(g, segments, classes, out); });

    for (auto* sub : {synth, train, predict, eval, ctrain}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kFatal;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kFatal;
    }
    return rc;
}
