#include "vowelseg/textgrid.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <iterator>
#include <locale>
#include <ostream>

#include "vowelseg/error.hpp"

namespace vowelseg {

namespace {

std::string quote(const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

std::string num(double v) { return format_time(v); }

// Tokens of the short format: quoted strings, <flags> and bare numbers.
class Tokens {
public:
    explicit Tokens(std::string text) : s_(std::move(text)) {}

    std::string next() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ >= s_.size()) throw FormatError("TextGrid: unexpected end of file");
        if (s_[pos_] == '"') {
            std::string out;
            ++pos_;
            while (true) {
                if (pos_ >= s_.size()) throw FormatError("TextGrid: unterminated string");
                if (s_[pos_] == '"') {
                    if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '"') {
                        out += '"';
                        pos_ += 2;
                        continue;
                    }
                    ++pos_;
                    return out;
                }
                out += s_[pos_++];
            }
        }
        const std::size_t b = pos_;
        while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        return s_.substr(b, pos_ - b);
    }

    double number() {
        const std::string t = next();
        double v = 0.0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || p != t.data() + t.size() || !std::isfinite(v)) {
            throw FormatError("TextGrid: expected a number, found '" + t + "'");
        }
        return v;
    }

    std::size_t count() {
        const double v = number();
        if (v < 0.0 || v != std::floor(v)) throw FormatError("TextGrid: invalid count");
        return static_cast<std::size_t>(v);
    }

    void expect(const std::string& what) {
        const std::string t = next();
        if (t != what) throw FormatError("TextGrid: expected '" + what + "', found '" + t + "'");
    }

private:
    std::string s_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string format_time(double seconds) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, seconds, std::chars_format::general, 10);
    return std::string(buf, end);
}

TextGrid vowel_textgrid(double total_s, double onset_s, double offset_s, const std::string& label) {
    if (!(0.0 <= onset_s && onset_s < offset_s && offset_s <= total_s)) {
        throw std::invalid_argument("vowel interval must satisfy 0 <= onset < offset <= total");
    }
    IntervalTier tier{"vowel", 0.0, total_s, {}};
    if (onset_s > 0.0) tier.intervals.push_back({0.0, onset_s, ""});
    tier.intervals.push_back({onset_s, offset_s, label});
    if (offset_s < total_s) tier.intervals.push_back({offset_s, total_s, ""});
    return TextGrid{0.0, total_s, {std::move(tier)}};
}

void write_textgrid(std::ostream& out, const TextGrid& grid) {
    out << "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n";
    out << num(grid.xmin) << '\n' << num(grid.xmax) << '\n';
    if (grid.tiers.empty()) {
        out << "<absent>\n";
        return;
    }
    out << "<exists>\n" << grid.tiers.size() << '\n';
    for (const auto& t : grid.tiers) {
        out << "\"IntervalTier\"\n" << quote(t.name) << '\n' << num(t.xmin) << '\n' << num(t.xmax) << '\n';
        out << t.intervals.size() << '\n';
        for (const auto& iv : t.intervals) {
            out << num(iv.xmin) << '\n' << num(iv.xmax) << '\n' << quote(iv.text) << '\n';
        }
    }
}

TextGrid read_textgrid(std::istream& in) {
    Tokens tok(std::string(std::istreambuf_iterator<char>(in), {}));
    tok.expect("File");
    tok.expect("type");
    tok.expect("=");
    tok.expect("ooTextFile");
    tok.expect("Object");
    tok.expect("class");
    tok.expect("=");
    tok.expect("TextGrid");
    TextGrid g;
    g.xmin = tok.number();
    g.xmax = tok.number();
    const std::string flag = tok.next();
    if (flag == "<absent>") return g;
    if (flag != "<exists>") throw FormatError("TextGrid: expected <exists> or <absent>");
    const std::size_t ntiers = tok.count();
    for (std::size_t i = 0; i < ntiers; ++i) {
        const std::string cls = tok.next();
        if (cls != "IntervalTier") throw FormatError("TextGrid: only interval tiers are supported, found '" + cls + "'");
        IntervalTier t;
        t.name = tok.next();
        t.xmin = tok.number();
        t.xmax = tok.number();
        const std::size_t n = tok.count();
        for (std::size_t k = 0; k < n; ++k) {
            TextGridInterval iv;
            iv.xmin = tok.number();
            iv.xmax = tok.number();
            iv.text = tok.next();
            t.intervals.push_back(std::move(iv));
        }
        g.tiers.push_back(std::move(t));
    }
    return g;
}

}  // namespace vowelseg
