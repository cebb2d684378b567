#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

#include "vowelseg/config.hpp"
#include "vowelseg/corpus.hpp"
#include "vowelseg/error.hpp"
#include "vowelseg/evalkit.hpp"
#include "vowelseg/model_file.hpp"
#include "vowelseg/pipeline.hpp"
#include "vowelseg/synth.hpp"
#include "vowelseg/wav.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace vowelseg;

namespace {

using Samples = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Frames = py::array_t<double, py::array::c_style | py::array::forcecast>;

dsp::Waveform to_waveform(const Samples& samples, int sample_rate) {
    if (samples.ndim() != 1) throw std::invalid_argument("samples must be a 1-D array");
    dsp::Waveform w;
    w.samples.assign(samples.data(), samples.data() + samples.size());
    w.sample_rate = sample_rate;
    if (sample_rate != dsp::kCanonicalRate) {
        w.validate();
        w = dsp::resample(w, dsp::kCanonicalRate);
    }
    return w;
}

py::array_t<double> to_array(const AcousticFrameSequence& seq) {
    const std::size_t T = seq.num_frames();
    py::array_t<double> out({T, kNumFeatures});
    auto v = out.mutable_unchecked<2>();
    for (std::size_t t = 1; t <= T; ++t)
        for (std::size_t f = 0; f < kNumFeatures; ++f) v(t - 1, f) = seq.at(t, static_cast<Feature>(f));
    return out;
}

AcousticFrameSequence from_array(const Frames& frames, bool classifier) {
    if (frames.ndim() != 2 || static_cast<std::size_t>(frames.shape(1)) != kNumFeatures)
        throw std::invalid_argument("frames must have shape (T, 16)");
    const auto T = static_cast<std::size_t>(frames.shape(0));
    AcousticFrameSequence seq(T, 0.005);
    auto v = frames.unchecked<2>();
    for (std::size_t t = 1; t <= T; ++t)
        for (std::size_t f = 0; f < kNumFeatures; ++f) seq.at(t, static_cast<Feature>(f)) = v(t - 1, f);
    seq.set_has_classifier_features(classifier);
    seq.validate();
    return seq;
}

py::dict report_dict(const EvalReport& r) {
    py::dict d;
    d["tokens"] = r.tokens.size();
    d["mean_onset_dev_ms"] = r.mean_onset_dev_ms;
    d["mean_offset_dev_ms"] = r.mean_offset_dev_ms;
    d["pct_onset_outside_20ms"] = r.pct_onset_outside_20ms;
    d["pct_offset_outside_50ms"] = r.pct_offset_outside_50ms;
    d["pearson_r"] = r.pearson_r ? py::cast(*r.pearson_r) : py::none();
    return d;
}

/// Trained segmenter plus the training log when it came from `train`.
struct PyModel {
    ModelFile file;
    std::vector<TrainLogRecord> log;

    Segmenter segmenter() const { return Segmenter(file); }
};

PyModel train(const fs::path& manifest_path, std::optional<fs::path> config, std::optional<std::uint64_t> seed,
              std::optional<fs::path> classifier, std::size_t jobs) {
    AppConfig cfg = config ? read_config(*config) : AppConfig{};
    if (seed) {
        cfg.train.seed = *seed;
        cfg.classifier.seed = *seed;
    }
    std::optional<FrameClassifier> clf;
    if (classifier) {
        auto f = load_model_file(*classifier);
        if (!f.classifier) throw Error(classifier->string() + " holds no frame classifier");
        clf = std::move(f.classifier);
    }
    const auto manifest = read_manifest(manifest_path);
    auto data = ingest(manifest, clf ? &*clf : nullptr, cfg.train.constraints, jobs);
    if (data.examples.empty()) throw Error("no usable tokens in " + manifest_path.string());
    auto result = train_full(data.examples, cfg.train, clf.has_value());
    PyModel m;
    m.file.model = std::move(result.model);
    m.file.classifier = std::move(clf);
    m.log = std::move(result.log);
    return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Vowel onset/offset measurement: features, decoding, training and evaluation.";

    // Translators run newest first, so the base class goes in before its subclasses.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<NoAdmissiblePair>(m, "NoAdmissiblePair", PyExc_ValueError);

    m.attr("FEATURE_NAMES") = std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end());
    m.attr("HOP_S") = 0.005;
    m.attr("SAMPLE_RATE") = dsp::kCanonicalRate;

    m.def(
        "load_audio",
        [](const fs::path& path) {
            const auto w = load_audio(path);
            py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(w.samples.size())});
            std::copy(w.samples.begin(), w.samples.end(), out.mutable_data());
            return out;
        },
        py::arg("path"), "Read a PCM WAV file as float64 samples at 16 kHz.");

    m.def(
        "write_wav",
        [](const fs::path& path, const Samples& samples, int sample_rate) {
            write_wav(path, std::span<const double>(samples.data(), static_cast<std::size_t>(samples.size())),
                      sample_rate);
        },
        py::arg("path"), py::arg("samples"), py::arg("sample_rate") = dsp::kCanonicalRate);

    m.def(
        "extract_features",
        [](const Samples& samples, int sample_rate) {
            const auto w = to_waveform(samples, sample_rate);
            AcousticFrameSequence seq;
            {
                py::gil_scoped_release release;
                seq = extract_features(w);
            }
            return to_array(seq);
        },
        py::arg("samples"), py::arg("sample_rate") = dsp::kCanonicalRate,
        "Frame features of shape (T, 16); classifier columns hold the constant 0.5.");

    m.def(
        "layout",
        [](bool with_classifier) { return FeatureMapLayout::build(with_classifier).dump(); },
        py::arg("with_classifier") = true, "One line per feature-function entry.");

    m.def(
        "task_loss",
        [](std::pair<int, int> target, std::pair<int, int> pred, double tau_b, double tau_e) {
            return task_loss({target.first, target.second}, {pred.first, pred.second}, {tau_b, tau_e});
        },
        py::arg("target"), py::arg("pred"), py::arg("tau_b") = 1.0, py::arg("tau_e") = 2.0);

    m.def(
        "synth",
        [](const fs::path& out_dir, std::size_t count, std::uint64_t seed, std::size_t jobs) {
            py::gil_scoped_release release;
            write_synth_corpus(out_dir, count, seed, jobs);
        },
        py::arg("out_dir"), py::arg("count"), py::arg("seed") = 0, py::arg("jobs") = 1,
        "Write a synthetic CVC corpus with manifest.csv, segments.csv and classes.txt.");

    py::class_<PyModel>(m, "Model")
        .def_static(
            "load", [](const fs::path& path) { return PyModel{load_model_file(path), {}}; }, py::arg("path"))
        .def("save", [](const PyModel& self, const fs::path& path) { save_model_file(path, self.file); },
             py::arg("path"))
        .def_property_readonly("layout_size",
                               [](const PyModel& self) { return self.segmenter().model().layout.size(); })
        .def_property_readonly("uses_classifier",
                               [](const PyModel& self) { return self.segmenter().model().layout.with_classifier(); })
        .def_property_readonly("weights", [](const PyModel& self) { return self.segmenter().model().weights; })
        .def_property_readonly("log",
                               [](const PyModel& self) {
                                   py::list out;
                                   for (const auto& r : self.log) out.append(py::make_tuple(r.iter, r.dev_loss, r.train_loss));
                                   return out;
                               })
        .def(
            "decode",
            [](const PyModel& self, const Frames& frames) {
                const auto seg = self.segmenter();
                const auto d = seg.predict(from_array(frames, seg.model().layout.with_classifier()));
                return py::make_tuple(d.pair.onset, d.pair.offset, d.score);
            },
            py::arg("frames"), "Best (onset_frame, offset_frame, score) for a (T, 16) feature matrix.")
        .def(
            "predict",
            [](const PyModel& self, const Samples& samples, int sample_rate) {
                const auto w = to_waveform(samples, sample_rate);
                const auto seg = self.segmenter();
                Decoded d;
                {
                    py::gil_scoped_release release;
                    d = seg.predict(seg.features(w));
                }
                return py::make_tuple(frame_to_seconds(d.pair.onset, 0.005), frame_to_seconds(d.pair.offset, 0.005));
            },
            py::arg("samples"), py::arg("sample_rate") = dsp::kCanonicalRate,
            "Vowel (onset_s, offset_s) for one token.")
        .def(
            "predict_files",
            [](const PyModel& self, const std::vector<fs::path>& paths, std::size_t jobs) {
                std::vector<FilePrediction> preds;
                {
                    py::gil_scoped_release release;
                    preds = predict_files(self.segmenter(), paths, jobs);
                }
                py::list out;
                for (const auto& p : preds) {
                    if (p.pair) out.append(py::make_tuple(p.path, p.onset_s(), p.offset_s()));
                    else out.append(py::make_tuple(p.path, py::none(), p.error));
                }
                return out;
            },
            py::arg("paths"), py::arg("jobs") = 1)
        .def(
            "evaluate",
            [](const PyModel& self, const fs::path& manifest_path, std::size_t jobs) {
                const auto seg = self.segmenter();
                EvalReport r;
                {
                    py::gil_scoped_release release;
                    const auto data = ingest(read_manifest(manifest_path), seg.classifier(), seg.model().constraints, jobs);
                    if (data.examples.empty()) throw Error("no usable tokens in " + manifest_path.string());
                    r = evaluate(predict_examples(seg.model(), data.examples, jobs), targets_of(data.examples), 0.005);
                }
                return report_dict(r);
            },
            py::arg("manifest"), py::arg("jobs") = 1);

    m.def(
        "train",
        [](const fs::path& manifest, std::optional<fs::path> config, std::optional<std::uint64_t> seed,
           std::optional<fs::path> classifier, std::size_t jobs) {
            py::gil_scoped_release release;
            return train(manifest, config, seed, classifier, jobs);
        },
        py::arg("manifest"), py::arg("config") = py::none(), py::arg("seed") = py::none(),
        py::arg("classifier") = py::none(), py::arg("jobs") = 1,
        "PA then DLM training on a manifest; returns a Model.");
}
