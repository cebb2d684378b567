#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vowelseg {

struct TextGridInterval {
    double xmin = 0.0;
    double xmax = 0.0;
    std::string text;
};

struct IntervalTier {
    std::string name;
    double xmin = 0.0;
    double xmax = 0.0;
    std::vector<TextGridInterval> intervals;
};

struct TextGrid {
    double xmin = 0.0;
    double xmax = 0.0;
    std::vector<IntervalTier> tiers;
};

/// Seconds as written in every output format: 10 significant digits,
/// '.' decimal separator.
std::string format_time(double seconds);

/// One "vowel" tier: empty / label / empty, gaps dropped when an edge is
/// at the file boundary.
TextGrid vowel_textgrid(double total_s, double onset_s, double offset_s, const std::string& label = "V");

/// Praat short text format.
void write_textgrid(std::ostream& out, const TextGrid& grid);

/// Reads the short text format (interval tiers only). Throws FormatError.
TextGrid read_textgrid(std::istream& in);

}  // namespace vowelseg
