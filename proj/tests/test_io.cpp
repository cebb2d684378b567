#include <doctest.h>

#include <cstring>
#include <fstream>
#include <locale>
#include <random>
#include <sstream>

#include "support.hpp"
#include "vowelseg/config.hpp"
#include "vowelseg/corpus.hpp"
#include "vowelseg/error.hpp"
#include "vowelseg/model_file.hpp"
#include "vowelseg/synth.hpp"
#include "vowelseg/textgrid.hpp"
#include "vowelseg/wav.hpp"

using namespace vowelseg;
namespace fs = std::filesystem;

namespace {

void put_le(std::string& s, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// Hand-rolled RIFF writer, independent of the library's.
std::string make_wav(int format, int bits, int channels, int rate, const std::vector<std::int64_t>& frames) {
    std::string data;
    for (auto v : frames)
        for (int c = 0; c < channels; ++c) put_le(data, static_cast<std::uint64_t>(c == 0 ? v : -v), bits / 8);
    std::string s = "RIFF";
    put_le(s, 36 + data.size(), 4);
    s += "WAVEfmt ";
    put_le(s, 16, 4);
    put_le(s, static_cast<std::uint64_t>(format), 2);
    put_le(s, static_cast<std::uint64_t>(channels), 2);
    put_le(s, static_cast<std::uint64_t>(rate), 4);
    put_le(s, static_cast<std::uint64_t>(rate * channels * bits / 8), 4);
    put_le(s, static_cast<std::uint64_t>(channels * bits / 8), 2);
    put_le(s, static_cast<std::uint64_t>(bits), 2);
    s += "data";
    put_le(s, data.size(), 4);
    return s + data;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Model sample_model(bool classifier) {
    std::mt19937_64 rng(classifier ? 1 : 2);
    auto m = vstest::random_model(rng, 200, classifier, true);
    m.provenance = {0.1, -1.36, 0.5, 100, 4000, 0xfedcba9876543210ULL, true};
    return m;
}

FrameClassifier sample_classifier() {
    std::vector<double> w(3 * dsp::kMfccDim);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(static_cast<double>(i)) / 3.0;
    return FrameClassifier(ClassInventory::parse("sil other\nvowel vowel\nnasal nasal\n"), w);
}

}  // namespace

TEST_CASE("wav round trip") {
    std::vector<double> s(1234);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::round(0.8 * std::sin(0.01 * i) * 32768.0) / 32768.0;
    s[0] = -1.0;
    std::stringstream buf;
    write_wav(buf, s, 16000);
    const auto w = read_wav(buf);
    CHECK(w.sample_rate == 16000);
    CHECK(w.samples == s);

    // Clipping on write.
    std::stringstream clip;
    write_wav(clip, std::vector<double>{2.0, -3.0}, 16000);
    const auto c = read_wav(clip);
    CHECK(c.samples[0] == 32767.0 / 32768.0);
    CHECK(c.samples[1] == -1.0);
}

TEST_CASE("wav variants") {
    const std::vector<std::int64_t> v16 = {0, 16384, -16384, 32767, -32768};
    std::istringstream a(make_wav(1, 16, 1, 16000, v16));
    const auto w16 = read_wav(a);
    CHECK(w16.samples == std::vector<double>{0.0, 0.5, -0.5, 32767.0 / 32768.0, -1.0});

    std::istringstream b(make_wav(1, 24, 2, 22050, {4194304, -8388608}));
    const auto w24 = read_wav(b);
    CHECK(w24.sample_rate == 22050);
    CHECK(w24.samples == std::vector<double>{0.5, -1.0});

    std::istringstream c(make_wav(1, 32, 1, 16000, {1073741824, -536870912}));
    CHECK(read_wav(c).samples == std::vector<double>{0.5, -0.25});

    std::istringstream flt(make_wav(3, 32, 1, 16000, {0}));
    CHECK_THROWS_AS(read_wav(flt), FormatError);
    std::istringstream junk("RIFX....WAVE");
    CHECK_THROWS_AS(read_wav(junk), FormatError);
    std::string cut = make_wav(1, 16, 1, 16000, v16);
    cut.resize(30);
    std::istringstream truncated(cut);
    CHECK_THROWS_AS(read_wav(truncated), FormatError);
}

TEST_CASE("resampling on load") {
    const auto dir = vstest::temp_dir("resample");
    std::vector<std::int64_t> frames(8000);
    for (std::size_t i = 0; i < frames.size(); ++i) frames[i] = std::lround(8000.0 * std::sin(2 * 3.14159265 * 200.0 * i / 8000.0));
    std::ofstream(dir / "a.wav", std::ios::binary) << make_wav(1, 16, 1, 8000, frames);
    const auto w = load_audio(dir / "a.wav");
    CHECK(w.sample_rate == 16000);
    CHECK(w.samples.size() == doctest::Approx(16000).epsilon(0.001));
}

TEST_CASE("manifest parsing") {
    const std::string text = std::string(kManifestHeader) +
                             "\n"
                             "a.wav,0.100,0.250,voiced_stop,sonorant,t1\n"
                             "\"dir, with comma/b.wav\",0.2,0.4,,,t2\n"
                             "c.wav,0.5,0.3,fricative,fricative,t3\n"
                             "d.wav,abc,0.3,fricative,fricative,t4\n"
                             "e.wav,0.1,0.3,glide,fricative,t5\n"
                             "f.wav,0.1,0.3,,,t1\n"
                             "g.wav,0.1,0.3,,,\n";
    std::istringstream in(text);
    const auto m = parse_manifest(in, "/data");
    REQUIRE(m.rows.size() == 2);
    CHECK(m.rows[0].audio_path == fs::path("/data/a.wav"));
    CHECK(m.rows[0].onset_s == 0.1);
    CHECK(m.rows[0].onset_class == "voiced_stop");
    CHECK(m.rows[1].audio_path == fs::path("/data/dir, with comma/b.wav"));
    CHECK(m.rows[1].line == 3);
    REQUIRE(m.errors.size() == 5);
    std::vector<std::size_t> lines;
    for (const auto& e : m.errors) lines.push_back(e.line);
    CHECK(lines == std::vector<std::size_t>{4, 5, 6, 7, 8});

    std::istringstream bad("path,onset,offset\n");
    CHECK_THROWS_AS(parse_manifest(bad, "."), FormatError);
}

TEST_CASE("manifest numbers ignore the global locale") {
    std::locale saved;
    try {
        std::locale::global(std::locale("de_DE.UTF-8"));
    } catch (const std::runtime_error&) {
        // Locale not installed; the parse below still runs under "C".
    }
    std::istringstream in(std::string(kManifestHeader) + "\na.wav,0.125,0.5,,,x\n");
    const auto m = parse_manifest(in, ".");
    std::locale::global(saved);
    REQUIRE(m.rows.size() == 1);
    CHECK(m.rows[0].onset_s == 0.125);

    std::ostringstream out;
    write_manifest(out, m.rows, ".");
    std::istringstream back(out.str());
    const auto again = parse_manifest(back, ".");
    REQUIRE(again.rows.size() == 1);
    CHECK(again.rows[0].onset_s == 0.125);
    CHECK(again.rows[0].token_id == "x");
}

TEST_CASE("frame and second conversion") {
    CHECK(seconds_to_frame(0.0, 0.005) == 1);
    CHECK(seconds_to_frame(0.1, 0.005) == 21);
    CHECK(seconds_to_frame(0.1024, 0.005) == 21);
    CHECK(seconds_to_frame(0.1026, 0.005) == 22);
    CHECK(frame_to_seconds(21, 0.005) == doctest::Approx(0.1));
    for (int t = 1; t < 2000; ++t) CHECK(seconds_to_frame(frame_to_seconds(t, 0.005), 0.005) == t);
}

TEST_CASE("parallel_for") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::count(hits.begin(), hits.end(), 1) == 1000);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw Error("boom"); }), Error);
}

TEST_CASE("model file round trip") {
    ModelFile f{sample_model(true), sample_classifier()};
    std::stringstream a;
    save_model_file(a, f);
    const std::string bytes = a.str();
    CHECK(bytes.rfind("VSEG1", 0) == 0);

    std::istringstream in(bytes);
    const auto g = load_model_file(in);
    REQUIRE(g.model);
    REQUIRE(g.classifier);
    CHECK(g.model->weights == f.model->weights);
    CHECK(g.model->normalization->stddev == f.model->normalization->stddev);
    CHECK(g.model->provenance.seed == 0xfedcba9876543210ULL);
    CHECK(g.model->provenance.dlm_iters == 4000);
    CHECK(g.model->constraints.margin_before == f.model->constraints.margin_before);
    CHECK(g.classifier->weights() == f.classifier->weights());
    CHECK(g.classifier->inventory().nasals == std::vector<std::size_t>{2});

    std::stringstream b;
    save_model_file(b, g);
    CHECK(b.str() == bytes);

    std::mt19937_64 rng(3);
    const auto seq = vstest::random_sequence(rng, 100);
    CHECK(decode(seq, *g.model).pair == decode(seq, *f.model).pair);

    ModelFile only_model{sample_model(false), std::nullopt};
    std::stringstream c;
    save_model_file(c, only_model);
    // Without class names every byte after the magic is an f64.
    CHECK((c.str().size() - 5) % 8 == 0);
    const auto h = load_model_file(c);
    CHECK_FALSE(h.classifier);
    CHECK(h.model->layout.size() == 87);
    CHECK_THROWS_AS(save_model_file(c, ModelFile{}), std::invalid_argument);
}

TEST_CASE("corrupt model files") {
    std::stringstream a;
    save_model_file(a, ModelFile{sample_model(true), std::nullopt});
    const std::string bytes = a.str();

    auto expect_format_error = [](std::string s) {
        std::istringstream in(s);
        CHECK_THROWS_AS(load_model_file(in), FormatError);
    };
    std::string magic = bytes;
    magic[0] = 'X';
    expect_format_error(magic);

    // magic, version, two section flags and the layout flag precede the fingerprint.
    std::string fp = bytes;
    const double junk = 12345.0;
    std::memcpy(fp.data() + 5 + 4 * 8, &junk, 8);
    expect_format_error(fp);

    expect_format_error(bytes.substr(0, bytes.size() - 8));
    expect_format_error(bytes + "x");
    std::string version = bytes;
    const double v2 = 2.0;
    std::memcpy(version.data() + 5, &v2, 8);
    expect_format_error(version);

    CHECK_THROWS_AS(load_model_file(fs::path("/nonexistent/model.bin")), Error);
}

TEST_CASE("textgrid") {
    const auto g = vowel_textgrid(0.8, 0.215, 0.43);
    REQUIRE(g.tiers.size() == 1);
    REQUIRE(g.tiers[0].intervals.size() == 3);
    CHECK(g.tiers[0].intervals[1].text == "V");
    CHECK(vowel_textgrid(0.8, 0.0, 0.43).tiers[0].intervals.size() == 2);

    std::ostringstream out;
    write_textgrid(out, g);
    const auto text = out.str();
    CHECK(text.rfind("File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n", 0) == 0);
    CHECK(text.find(format_time(0.215)) != std::string::npos);
    std::istringstream in(text);
    const auto back = read_textgrid(in);
    REQUIRE(back.tiers.size() == 1);
    CHECK(back.xmax == 0.8);
    REQUIRE(back.tiers[0].intervals.size() == 3);
    CHECK(back.tiers[0].intervals[1].xmin == 0.215);
    CHECK(back.tiers[0].intervals[1].xmax == 0.43);
    CHECK(back.tiers[0].intervals[1].text == "V");

    CHECK(format_time(0.1) == "0.1");
    CHECK(format_time(1.0 / 3.0) == "0.3333333333");
    CHECK(format_time(0.215) == "0.215");
    std::istringstream broken("File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n0\n");
    CHECK_THROWS_AS(read_textgrid(broken), FormatError);
}

TEST_CASE("config files") {
    std::istringstream in("# training\neta0 = 0.2\nseed=9\nnormalize = false\nmax_duration = 80\nclassifier_C = 0.3\n");
    const auto c = parse_config(in);
    CHECK(c.train.eta0 == 0.2);
    CHECK(c.train.seed == 9);
    CHECK(c.classifier.seed == 9);
    CHECK_FALSE(c.train.normalize);
    CHECK(c.train.constraints.max_duration == 80);
    CHECK(c.classifier.C == 0.3);
    CHECK(c.train.epsilon == -1.36);

    auto line_of = [](const std::string& text) -> std::string {
        std::istringstream s(text);
        try {
            parse_config(s);
        } catch (const FormatError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(line_of("eta0 = 0.1\nbogus = 3\n").find("line 2") != std::string::npos);
    CHECK(line_of("eta0 = fast\n").find("line 1") != std::string::npos);
    CHECK(line_of("pa_epochs = -4\n").find("line 1") != std::string::npos);
    CHECK(line_of("just words\n").find("line 1") != std::string::npos);
    std::istringstream invalid("epsilon = 0\n");
    CHECK_THROWS(parse_config(invalid));
}

TEST_CASE("synthetic corpus") {
    const auto a = vstest::temp_dir("synth_a"), b = vstest::temp_dir("synth_b");
    const auto ca = write_synth_corpus(a, 10, 7, 1);
    write_synth_corpus(b, 10, 7, 3);
    for (const char* f : {"manifest.csv", "segments.csv", "classes.txt", "wav/tok_00000.wav", "wav/tok_00009.wav"})
        CHECK(slurp(a / f) == slurp(b / f));
    CHECK(synth_token(7, 3).samples == synth_token(7, 3).samples);
    CHECK(synth_token(7, 3).samples != synth_token(8, 3).samples);

    const auto m = read_manifest(a / "manifest.csv");
    REQUIRE(m.rows.size() == 10);
    CHECK(m.errors.empty());

    const DecoderConstraints constraints;
    std::size_t voiced = 0, interior = 0;
    for (std::size_t i = 0; i < ca.tokens.size(); ++i) {
        const auto& tok = ca.tokens[i];
        const auto w = read_wav(m.rows[i].audio_path);
        CHECK(w.samples == tok.samples);
        const auto seq = extract_features(w);
        const OnsetOffsetPair p{seconds_to_frame(tok.onset_s, 0.005), seconds_to_frame(tok.offset_s, 0.005)};
        CHECK(constraints.admits(p, seq.num_frames()));
        CHECK(tok.offset_s - tok.onset_s >= 0.08 - 1e-9);
        CHECK(tok.offset_s - tok.onset_s <= 0.30 + 1e-9);
        // Frames whose whole window lies inside the vowel.
        for (int t = p.onset; t + 5 <= p.offset; ++t) {
            ++interior;
            voiced += seq.at(static_cast<std::size_t>(t), Feature::VRapt) >= 0.5;
        }
    }
    CHECK(static_cast<double>(voiced) / static_cast<double>(interior) >= 0.8);
    CHECK_THROWS_AS(write_synth_corpus("/proc/vowelseg_forbidden", 2, 1), Error);
}
