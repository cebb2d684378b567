#include "vowelseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "vowelseg/error.hpp"
#include "vowelseg/evalkit.hpp"
#include "vowelseg/wav.hpp"

namespace vowelseg {

namespace {

constexpr int kRate = dsp::kCanonicalRate;
constexpr std::size_t kBurstSamples = 128;  // 8 ms
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct Formant {
    double freq;
    double bw;
};

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uni(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double gauss() { return normal_(rng_); }
    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    /// Uniform duration in whole samples.
    std::size_t ms(double lo, double hi) { return static_cast<std::size_t>(std::lround(uni(lo, hi) * kRate / 1000.0)); }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// Second-order resonator with unit gain at DC.
void resonate(std::vector<double>& x, Formant f) {
    const double T = 1.0 / kRate;
    const double C = -std::exp(-kTwoPi * f.bw * T);
    const double B = 2.0 * std::exp(-std::numbers::pi * f.bw * T) * std::cos(kTwoPi * f.freq * T);
    const double A = 1.0 - B - C;
    double y1 = 0.0, y2 = 0.0;
    for (double& v : x) {
        const double y = A * v + B * y1 + C * y2;
        y2 = y1;
        y1 = y;
        v = y;
    }
}

void envelope(std::vector<double>& x, std::size_t rise, std::size_t fall) {
    const std::size_t n = x.size();
    rise = std::min(rise, n / 2);
    fall = std::min(fall, n / 2);
    for (std::size_t i = 0; i < rise; ++i) {
        x[i] *= 0.5 - 0.5 * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(rise));
    }
    for (std::size_t i = 0; i < fall; ++i) {
        x[n - 1 - i] *=
            0.5 - 0.5 * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(fall));
    }
}

void scale_peak(std::vector<double>& x, double peak) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    if (m > 0.0) {
        for (double& v : x) v *= peak / m;
    }
}

void scale_rms(std::vector<double>& x, double rms) {
    double s = 0.0;
    for (double v : x) s += v * v;
    s = std::sqrt(s / static_cast<double>(std::max<std::size_t>(1, x.size())));
    if (s > 0.0) {
        for (double& v : x) v *= rms / s;
    }
}

void mix_into(std::vector<double>& out, std::size_t at, const std::vector<double>& seg) {
    for (std::size_t i = 0; i < seg.size() && at + i < out.size(); ++i) out[at + i] += seg[i];
}

// Band-limited harmonic source with a linear f0 glide, shaped by formants.
std::vector<double> harmonic(std::size_t n, double f0_start, double f0_end, const std::vector<Formant>& formants,
                             double peak, std::size_t rise, std::size_t fall, double phase0 = 0.0) {
    std::vector<double> x(n, 0.0);
    double phase = phase0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f0 = f0_start + (f0_end - f0_start) * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(1, n));
        const int harmonics = static_cast<int>(5000.0 / f0);
        double s = 0.0;
        for (int k = 1; k <= harmonics; ++k) s += std::sin(k * phase) / k;
        x[i] = s;
        phase += kTwoPi * f0 / kRate;
        if (phase > kTwoPi) phase -= kTwoPi;
    }
    for (const auto& f : formants) resonate(x, f);
    scale_peak(x, peak);
    envelope(x, rise, fall);
    return x;
}

// White noise, optionally pre-emphasised to tilt energy upwards.
std::vector<double> noise(Gen& g, std::size_t n, double rms, bool high, std::size_t ramp) {
    std::vector<double> x(n);
    for (double& v : x) v = g.gauss();
    if (high) {
        for (std::size_t i = n; i-- > 1;) x[i] -= 0.95 * x[i - 1];
        resonate(x, {g.uni(3500.0, 6000.0), 2500.0});
        // The resonator has unit DC gain; restore the high band it was meant to pass.
        for (std::size_t i = n; i-- > 1;) x[i] -= 0.9 * x[i - 1];
    }
    scale_rms(x, rms);
    envelope(x, ramp, ramp);
    return x;
}

std::size_t samples_of(double ms) { return static_cast<std::size_t>(std::lround(ms * kRate / 1000.0)); }

double secs(std::size_t s) { return static_cast<double>(s) / kRate; }

struct Builder {
    std::vector<double> audio;
    std::vector<SynthSegment> segments;

    void label(std::size_t b, std::size_t e, const char* name) {
        if (e > b) segments.push_back({secs(b), secs(e), name});
    }
};

// Consonant region [b, e). `before_vowel` selects the release shape.
void consonant(Builder& out, Gen& g, const std::string& cls, std::size_t b, std::size_t e, bool before_vowel,
               double f0) {
    const std::size_t n = e - b;
    if (cls == "fricative") {
        mix_into(out.audio, b, noise(g, n, g.uni(0.04, 0.10), true, samples_of(10)));
        out.label(b, e, "fric");
    } else if (cls == "sonorant") {
        const auto murmur = harmonic(n, f0 * 1.02, f0, {{g.uni(220.0, 300.0), 100.0}, {g.uni(900.0, 1200.0), 300.0}},
                                     g.uni(0.04, 0.09), samples_of(12), samples_of(12));
        mix_into(out.audio, b, murmur);
        out.label(b, e, "nasal");
    } else if (before_vowel) {
        // Closure, release burst, then aspiration (or a short gap when voiced).
        const bool voiced = cls == "voiced_stop";
        const std::size_t asp = voiced ? samples_of(8) : std::min(n - samples_of(20), g.ms(25.0, 60.0));
        const std::size_t burst_b = e - asp - kBurstSamples;
        if (voiced) {
            mix_into(out.audio, b, harmonic(burst_b - b, f0, f0, {{180.0, 80.0}}, g.uni(0.015, 0.035),
                                             samples_of(10), samples_of(5)));
            out.label(b, burst_b, "voicebar");
        } else {
            out.label(b, burst_b, "sil");
        }
        mix_into(out.audio, burst_b, noise(g, kBurstSamples, g.uni(0.08, 0.16), false, samples_of(1)));
        out.label(burst_b, burst_b + kBurstSamples, "burst");
        mix_into(out.audio, burst_b + kBurstSamples, noise(g, asp, g.uni(0.02, 0.05) * (voiced ? 0.3 : 1.0), true,
                                                           samples_of(3)));
        out.label(burst_b + kBurstSamples, e, "asp");
    } else {
        const bool voiced = cls == "voiced_stop";
        const std::size_t burst_b = e - kBurstSamples;
        if (voiced) {
            mix_into(out.audio, b, harmonic(burst_b - b, f0, f0 * 0.97, {{180.0, 80.0}}, g.uni(0.015, 0.035),
                                             samples_of(5), samples_of(10)));
            out.label(b, burst_b, "voicebar");
        } else {
            out.label(b, burst_b, "sil");
        }
        mix_into(out.audio, burst_b, noise(g, kBurstSamples, g.uni(0.05, 0.12), false, samples_of(1)));
        out.label(burst_b, e, "burst");
    }
}

// The decoder needs a fixed number of frames on either side of the vowel.
bool fits_margins(std::size_t onset, std::size_t offset, std::size_t total) {
    const DecoderConstraints c;
    const double hop = 0.005;
    if (total < 400) return false;
    const std::size_t frames = (total - 400) / 80 + 1;
    const OnsetOffsetPair p{seconds_to_frame(secs(onset), hop), seconds_to_frame(secs(offset), hop)};
    return c.admits(p, frames);
}

}  // namespace

SynthToken synth_token(std::uint64_t seed, std::size_t index) {
    Gen g(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1)));
    SynthToken tok;
    tok.onset_class = kContextClasses[g.pick(4)];
    tok.coda_class = kContextClasses[g.pick(4)];

    const std::size_t lead = g.ms(50.0, 150.0);
    const std::size_t ons = g.ms(60.0, 150.0);
    const std::size_t vow = g.ms(80.0, 300.0);
    const std::size_t coda = g.ms(40.0, 120.0);
    std::size_t trail = g.ms(50.0, 150.0);

    const std::size_t onset = lead + ons;
    const std::size_t offset = onset + vow;
    while (!fits_margins(onset, offset, offset + coda + trail)) trail += 80;
    const std::size_t total = offset + coda + trail;

    tok.f0 = g.uni(120.0, 220.0);
    const double f1 = g.uni(300.0, 800.0);
    std::vector<Formant> formants = {{f1, g.uni(60.0, 120.0)}, {g.uni(std::max(900.0, f1 + 400.0), 2300.0), g.uni(70.0, 130.0)}};
    if (g.uni(0.0, 1.0) < 0.5) formants.push_back({g.uni(2400.0, 3000.0), g.uni(90.0, 150.0)});
    const double peak = g.uni(0.3, 0.6);
    const double floor_rms = g.uni(2e-4, 5e-4);

    Builder b;
    b.audio.assign(total, 0.0);
    for (double& v : b.audio) v = floor_rms * g.gauss();

    b.label(0, lead, "sil");
    consonant(b, g, tok.onset_class, lead, onset, true, tok.f0);
    mix_into(b.audio, onset, harmonic(vow, tok.f0 * 1.05, tok.f0 * 0.95, formants, peak, samples_of(8), samples_of(12)));
    b.label(onset, offset, "vowel");
    consonant(b, g, tok.coda_class, offset, offset + coda, false, tok.f0 * 0.95);
    b.label(offset + coda, total, "sil");

    // Quantise to the 16-bit grid now so in-memory and on-disk tokens agree.
    for (double& v : b.audio) {
        v = static_cast<double>(std::clamp(std::lround(std::clamp(v, -1.0, 1.0) * 32768.0), -32768L, 32767L)) / 32768.0;
    }

    tok.samples = std::move(b.audio);
    tok.segments = std::move(b.segments);
    tok.onset_s = secs(onset);
    tok.offset_s = secs(offset);
    return tok;
}

SynthCorpus write_synth_corpus(const std::filesystem::path& out_dir, std::size_t count, std::uint64_t seed,
                               std::size_t jobs) {
    if (count == 0) throw std::invalid_argument("count must be >= 1");
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "wav", ec);
    if (ec) throw Error("cannot create " + (out_dir / "wav").string() + ": " + ec.message());

    SynthCorpus corpus;
    corpus.tokens.resize(count);
    corpus.rows.resize(count);
    parallel_for(count, jobs, [&](std::size_t i) {
        char name[32];
        std::snprintf(name, sizeof name, "tok_%05zu", i);
        auto tok = synth_token(seed, i);
        const auto path = out_dir / "wav" / (std::string(name) + ".wav");
        write_wav(path, tok.samples, kRate);
        ManifestRow r;
        r.audio_path = path;
        r.onset_s = tok.onset_s;
        r.offset_s = tok.offset_s;
        r.onset_class = tok.onset_class;
        r.coda_class = tok.coda_class;
        r.token_id = name;
        corpus.rows[i] = std::move(r);
        corpus.tokens[i] = std::move(tok);
    });

    std::ofstream manifest(out_dir / "manifest.csv");
    if (!manifest) throw Error("cannot write " + (out_dir / "manifest.csv").string());
    write_manifest(manifest, corpus.rows, out_dir);

    std::ofstream seg(out_dir / "segments.csv");
    if (!seg) throw Error("cannot write " + (out_dir / "segments.csv").string());
    seg.imbue(std::locale::classic());
    seg << "path,start_s,end_s,label\n";
    for (std::size_t i = 0; i < count; ++i) {
        const auto rel = corpus.rows[i].audio_path.lexically_relative(out_dir).generic_string();
        for (const auto& s : corpus.tokens[i].segments) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "%.6f,%.6f,", s.start_s, s.end_s);
            seg << rel << ',' << buf << s.label << '\n';
        }
    }

    std::ofstream classes(out_dir / "classes.txt");
    if (!classes) throw Error("cannot write " + (out_dir / "classes.txt").string());
    classes << "# label kind\n";
    for (const auto& c : kSynthClasses) classes << c[0] << ' ' << c[1] << '\n';
    if (!manifest || !seg || !classes) throw Error("write failed under " + out_dir.string());
    return corpus;
}

}  // namespace vowelseg
