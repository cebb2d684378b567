#include "vowelseg/model_file.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "vowelseg/error.hpp"

namespace vowelseg {

namespace {

constexpr std::size_t kMagicLen = sizeof(kModelMagic) - 1;
// Guards against absurd allocations from a corrupted length field.
constexpr double kMaxCount = 1e8;

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void f64(double v) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
        out_.write(reinterpret_cast<const char*>(b), 8);
    }
    void count(std::size_t n) { f64(static_cast<double>(n)); }
    void u64(std::uint64_t v) {
        f64(static_cast<double>(v >> 32));
        f64(static_cast<double>(v & 0xffffffffULL));
    }
    void vec(const std::vector<double>& v) {
        for (double x : v) f64(x);
    }
    void text(const std::string& s) {
        count(s.size());
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    double f64() {
        unsigned char b[8];
        in_.read(reinterpret_cast<char*>(b), 8);
        if (in_.gcount() != 8) throw FormatError("model file truncated");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return std::bit_cast<double>(bits);
    }
    std::size_t count(const char* what) {
        const double v = f64();
        if (!(v >= 0.0) || v > kMaxCount || v != std::floor(v)) {
            throw FormatError(std::string("model file: invalid ") + what);
        }
        return static_cast<std::size_t>(v);
    }
    int integer(const char* what) {
        const double v = f64();
        if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 1e9) {
            throw FormatError(std::string("model file: invalid ") + what);
        }
        return static_cast<int>(v);
    }
    bool flag(const char* what) {
        const double v = f64();
        if (v != 0.0 && v != 1.0) throw FormatError(std::string("model file: invalid ") + what);
        return v == 1.0;
    }
    std::uint64_t u64(const char* what) {
        const double hi = f64(), lo = f64();
        for (double h : {hi, lo}) {
            if (!(h >= 0.0) || h > 4294967295.0 || h != std::floor(h)) {
                throw FormatError(std::string("model file: invalid ") + what);
            }
        }
        return static_cast<std::uint64_t>(hi) << 32 | static_cast<std::uint64_t>(lo);
    }
    std::vector<double> vec(std::size_t n) {
        std::vector<double> v(n);
        for (double& x : v) x = f64();
        return v;
    }
    std::string text() {
        const std::size_t n = count("string length");
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("model file truncated");
        return s;
    }

private:
    std::istream& in_;
};

enum ClassKind { kOther = 0, kVowel = 1, kNasal = 2 };

void write_model(Writer& w, const Model& m) {
    m.validate();
    w.f64(m.layout.with_classifier() ? 1.0 : 0.0);
    w.u64(m.layout.fingerprint());
    w.count(m.weights.size());
    w.vec(m.weights);
    w.f64(m.normalization ? 1.0 : 0.0);
    if (m.normalization) {
        w.vec(m.normalization->mean);
        w.vec(m.normalization->stddev);
    }
    w.f64(m.priors.mu);
    w.f64(m.priors.sigma2);
    w.f64(m.priors.k);
    w.f64(m.priors.theta);
    w.f64(m.constraints.margin_before);
    w.f64(m.constraints.margin_after);
    w.f64(m.constraints.min_duration);
    w.f64(m.constraints.max_duration);
    w.f64(m.loss_params.tau_b);
    w.f64(m.loss_params.tau_e);
    const auto& p = m.provenance;
    w.f64(p.eta0);
    w.f64(p.epsilon);
    w.f64(p.pa_C);
    w.u64(p.pa_epochs);
    w.u64(p.dlm_iters);
    w.u64(p.seed);
    w.f64(p.pa_cost_augmented ? 1.0 : 0.0);
}

Model read_model(Reader& r) {
    Model m;
    m.layout = FeatureMapLayout::build(r.flag("layout flag"));
    const std::uint64_t fp = r.u64("fingerprint");
    if (fp != m.layout.fingerprint()) {
        throw FormatError("model file: layout fingerprint mismatch (file was written by an incompatible build)");
    }
    const std::size_t n = r.count("weight dimension");
    if (n != m.layout.size()) {
        throw FormatError("model file: weight dimension " + std::to_string(n) + " does not match layout dimension " +
                          std::to_string(m.layout.size()));
    }
    m.weights = r.vec(n);
    if (r.flag("normalization flag")) {
        Normalization norm;
        norm.mean = r.vec(n);
        norm.stddev = r.vec(n);
        m.normalization = std::move(norm);
    }
    m.priors.mu = r.f64();
    m.priors.sigma2 = r.f64();
    m.priors.k = r.f64();
    m.priors.theta = r.f64();
    m.constraints.margin_before = r.integer("margin");
    m.constraints.margin_after = r.integer("margin");
    m.constraints.min_duration = r.integer("min duration");
    m.constraints.max_duration = r.integer("max duration");
    m.loss_params.tau_b = r.f64();
    m.loss_params.tau_e = r.f64();
    auto& p = m.provenance;
    p.eta0 = r.f64();
    p.epsilon = r.f64();
    p.pa_C = r.f64();
    p.pa_epochs = r.u64("epochs");
    p.dlm_iters = r.u64("iterations");
    p.seed = r.u64("seed");
    p.pa_cost_augmented = r.flag("provenance flag");
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
    return m;
}

void write_classifier(Writer& w, const FrameClassifier& c) {
    const auto& inv = c.inventory();
    w.count(inv.class_names.size());
    for (std::size_t i = 0; i < inv.class_names.size(); ++i) {
        w.text(inv.class_names[i]);
        int kind = kOther;
        if (std::find(inv.vowels.begin(), inv.vowels.end(), i) != inv.vowels.end()) kind = kVowel;
        if (std::find(inv.nasals.begin(), inv.nasals.end(), i) != inv.nasals.end()) kind = kNasal;
        w.f64(kind);
    }
    w.count(c.weights().size());
    w.vec(c.weights());
}

FrameClassifier read_classifier(Reader& r) {
    ClassInventory inv;
    const std::size_t k = r.count("class count");
    for (std::size_t i = 0; i < k; ++i) {
        inv.class_names.push_back(r.text());
        const int kind = r.integer("class kind");
        if (kind == kVowel) {
            inv.vowels.push_back(i);
        } else if (kind == kNasal) {
            inv.nasals.push_back(i);
        } else if (kind != kOther) {
            throw FormatError("model file: invalid class kind");
        }
    }
    const std::size_t n = r.count("classifier dimension");
    if (n != k * dsp::kMfccDim) throw FormatError("model file: classifier weight dimension mismatch");
    try {
        return FrameClassifier(std::move(inv), r.vec(n));
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
}

}  // namespace

void save_model_file(std::ostream& out, const ModelFile& file) {
    if (!file.model && !file.classifier) throw std::invalid_argument("model file would be empty");
    out.write(kModelMagic, kMagicLen);
    Writer w(out);
    w.f64(kModelFileVersion);
    w.f64(file.model ? 1.0 : 0.0);
    w.f64(file.classifier ? 1.0 : 0.0);
    if (file.model) write_model(w, *file.model);
    if (file.classifier) write_classifier(w, *file.classifier);
}

void save_model_file(const std::filesystem::path& path, const ModelFile& file) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    save_model_file(out, file);
    out.flush();
    if (!out) throw Error("write failed for " + path.string());
}

ModelFile load_model_file(std::istream& in) {
    char magic[kMagicLen];
    in.read(magic, kMagicLen);
    if (static_cast<std::size_t>(in.gcount()) != kMagicLen || std::memcmp(magic, kModelMagic, kMagicLen) != 0) {
        throw FormatError("not a vowelseg model file (bad magic)");
    }
    Reader r(in);
    const double version = r.f64();
    if (version != kModelFileVersion) {
        throw FormatError("unsupported model file version " + std::to_string(version));
    }
    const bool has_model = r.flag("section flag");
    const bool has_classifier = r.flag("section flag");
    ModelFile file;
    if (has_model) file.model = read_model(r);
    if (has_classifier) file.classifier = read_classifier(r);
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("model file: trailing bytes");
    return file;
}

ModelFile load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file " + path.string());
    try {
        return load_model_file(in);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace vowelseg
