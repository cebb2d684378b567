#include "vowelseg/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vowelseg/error.hpp"

namespace vowelseg {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t le16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put16(std::ostream& out, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

bool read_exact(std::istream& in, unsigned char* dst, std::size_t n) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount()) == n;
}

}  // namespace

dsp::Waveform read_wav(std::istream& in) {
    unsigned char header[12];
    if (!read_exact(in, header, 12) || std::memcmp(header, "RIFF", 4) != 0 || std::memcmp(header + 8, "WAVE", 4) != 0) {
        throw FormatError("not a RIFF/WAVE file");
    }

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    std::vector<unsigned char> data;
    bool have_data = false;

    unsigned char chunk[8];
    while (!have_data && read_exact(in, chunk, 8)) {
        const std::uint32_t size = le32(chunk + 4);
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16) throw FormatError("fmt chunk too small");
            std::vector<unsigned char> fmt(size);
            if (!read_exact(in, fmt.data(), size)) throw FormatError("truncated fmt chunk");
            format = le16(fmt.data());
            channels = le16(fmt.data() + 2);
            rate = le32(fmt.data() + 4);
            bits = le16(fmt.data() + 14);
            if (format == kFormatExtensible) {
                if (size < 26) throw FormatError("truncated WAVE_FORMAT_EXTENSIBLE header");
                format = le16(fmt.data() + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!have_fmt) throw FormatError("data chunk before fmt chunk");
            data.resize(size);
            in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
            // Some writers leave the size field at its placeholder; keep what arrived.
            data.resize(static_cast<std::size_t>(in.gcount()));
            have_data = true;
        } else {
            in.ignore(static_cast<std::streamsize>(size + (size & 1u)));
        }
        if (!have_data && (size & 1u) && std::memcmp(chunk, "fmt ", 4) == 0) in.ignore(1);
    }
    if (!have_fmt) throw FormatError("missing fmt chunk");
    if (!have_data) throw FormatError("missing data chunk");
    if (format != kFormatPcm) throw FormatError("unsupported WAV encoding " + std::to_string(format) + " (PCM only)");
    if (bits != 16 && bits != 24 && bits != 32) {
        throw FormatError("unsupported PCM bit depth " + std::to_string(bits));
    }
    if (channels == 0) throw FormatError("zero channels");
    if (rate < static_cast<std::uint32_t>(dsp::kMinSampleRate)) {
        throw FormatError("sample rate " + std::to_string(rate) + " Hz below minimum");
    }

    const std::size_t bytes = bits / 8u;
    const std::size_t frame_bytes = bytes * channels;
    const std::size_t n = data.size() / frame_bytes;
    dsp::Waveform w;
    w.sample_rate = static_cast<int>(rate);
    w.samples.resize(n);
    const double scale = std::ldexp(1.0, -(static_cast<int>(bits) - 1));
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* p = data.data() + i * frame_bytes;
        std::int32_t v = 0;
        if (bits == 16) {
            v = static_cast<std::int16_t>(le16(p));
        } else if (bits == 24) {
            v = static_cast<std::int32_t>(static_cast<std::uint32_t>(p[0]) << 8 | static_cast<std::uint32_t>(p[1]) << 16 |
                                          static_cast<std::uint32_t>(p[2]) << 24) >>
                8;
        } else {
            v = static_cast<std::int32_t>(le32(p));
        }
        w.samples[i] = static_cast<double>(v) * scale;
    }
    if (w.samples.empty()) throw FormatError("no audio samples");
    return w;
}

dsp::Waveform read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    try {
        return read_wav(in);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

dsp::Waveform load_audio(const std::filesystem::path& path) {
    auto w = read_wav(path);
    if (w.sample_rate != dsp::kCanonicalRate) w = dsp::resample(w, dsp::kCanonicalRate);
    return w;
}

void write_wav(std::ostream& out, std::span<const double> samples, int sample_rate) {
    if (sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
    const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    out.write("RIFF", 4);
    put32(out, 36 + data_bytes);
    out.write("WAVEfmt ", 8);
    put32(out, 16);
    put16(out, kFormatPcm);
    put16(out, 1);
    put32(out, static_cast<std::uint32_t>(sample_rate));
    put32(out, static_cast<std::uint32_t>(sample_rate) * 2);
    put16(out, 2);
    put16(out, 16);
    out.write("data", 4);
    put32(out, data_bytes);
    for (double s : samples) {
        // Inverse of the 2^-15 scale used when reading, so 16-bit data round-trips exactly.
        const auto v = static_cast<std::int16_t>(std::clamp(std::lround(std::clamp(s, -1.0, 1.0) * 32768.0), -32768L, 32767L));
        put16(out, static_cast<std::uint16_t>(v));
    }
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    write_wav(out, samples, sample_rate);
    if (!out) throw Error("write failed for " + path.string());
}

}  // namespace vowelseg
