#include "vowelseg/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>

#include "vowelseg/error.hpp"

namespace vowelseg {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
bool parse_number(const std::string& s, T& out) {
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(out)) return false;
    }
    return ec == std::errc() && p == end;
}

bool parse_bool(const std::string& s, bool& out) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") {
        out = true;
        return true;
    }
    if (s == "false" || s == "0" || s == "no" || s == "off") {
        out = false;
        return true;
    }
    return false;
}

}  // namespace

AppConfig parse_config(std::istream& in, AppConfig base) {
    AppConfig c = std::move(base);
    auto& t = c.train;
    using Setter = std::function<bool(const std::string&)>;
    auto real = [](double& d) -> Setter { return [&d](const std::string& v) { return parse_number(v, d); }; };
    auto count = [](std::size_t& n) -> Setter { return [&n](const std::string& v) { return parse_number(v, n); }; };
    auto integer = [](int& n) -> Setter { return [&n](const std::string& v) { return parse_number(v, n); }; };
    const std::map<std::string, Setter> setters = {
        {"eta0", real(t.eta0)},
        {"epsilon", real(t.epsilon)},
        {"tau_b", real(t.tau_b)},
        {"tau_e", real(t.tau_e)},
        {"pa_C", real(t.pa_C)},
        {"pa_epochs", count(t.pa_epochs)},
        {"dlm_iters", count(t.dlm_iters)},
        {"seed", [&t](const std::string& v) { return parse_number(v, t.seed); }},
        {"dev_fraction", real(t.dev_fraction)},
        {"report_interval", count(t.report_interval)},
        {"normalize", [&t](const std::string& v) { return parse_bool(v, t.normalize); }},
        {"margin_before", integer(t.constraints.margin_before)},
        {"margin_after", integer(t.constraints.margin_after)},
        {"min_duration", integer(t.constraints.min_duration)},
        {"max_duration", integer(t.constraints.max_duration)},
        {"classifier_C", real(c.classifier.C)},
        {"classifier_epochs", count(c.classifier.epochs)},
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string s = trim(line);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        const std::string where = "config line " + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) throw FormatError(where + "expected 'key = value'");
        const std::string key = trim(std::string_view(s).substr(0, eq));
        const std::string value = trim(std::string_view(s).substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end()) throw FormatError(where + "unknown key '" + key + "'");
        if (!it->second(value)) throw FormatError(where + "bad value '" + value + "' for " + key);
    }
    try {
        c.train.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    if (!(c.classifier.C > 0.0)) throw FormatError("config: classifier_C must be positive");
    c.classifier.seed = c.train.seed;
    return c;
}

AppConfig read_config(const std::filesystem::path& path, AppConfig base) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    return parse_config(in, std::move(base));
}

}  // namespace vowelseg
