#include "muvos/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string_view>

#include "muvos/errors.hpp"
#include "muvos/image_io.hpp"

namespace muvos {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
        throw ValidationError("config: " + key + " expects a non-negative integer, got '" + v + "'");
    }
    errno = 0;
    const unsigned long long n = std::strtoull(v.c_str(), nullptr, 10);
    if (errno == ERANGE) throw ValidationError("config: " + key + " out of range");
    return static_cast<std::size_t>(n);
}

double parse_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    errno = 0;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || errno == ERANGE) {
        throw ValidationError("config: " + key + " expects a real number, got '" + v + "'");
    }
    return d;
}

}  // namespace

std::string to_string(PipelineMode mode) { return mode == PipelineMode::analytic ? "analytic" : "learned"; }

void RunConfig::validate() const {
    auto fail = [](const std::string& m) { throw ValidationError("config: " + m); };
    if (window_u == 0 || window_v == 0 || window_u % 2 == 0 || window_v % 2 == 0) fail("windows must be odd");
    if (feature_dim == 0 || feature_dim % 4 != 0) fail("feature_dim must be a positive multiple of 4");
    if (key_dim() == 0 || value_dim() == 0) fail("key and value dims must be positive");
    if (memory_every == 0) fail("memory_every must be positive");
    if (softargmin_sign != 1 && softargmin_sign != -1) fail("softargmin_sign must be +1 or -1");
    if (!(softargmin_beta > 0.0)) fail("softargmin_beta must be positive");
    if (!(bootstrap_ratio > 0.0 && bootstrap_ratio <= 1.0)) fail("bootstrap_ratio must lie in (0, 1]");
    if (!(lambda >= 0.0)) fail("lambda must be non-negative");
    if (!(boundary_tolerance_fraction > 0.0 && boundary_tolerance_fraction <= 1.0)) {
        fail("boundary_tolerance_fraction must lie in (0, 1]");
    }
    if (!(analytic_locality > 0.0)) fail("analytic_locality must be positive");
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream os;
    os << "window_u = " << c.window_u << '\n'
       << "window_v = " << c.window_v << '\n'
       << "feature_dim = " << c.feature_dim << '\n'
       << "dk = " << c.dk << '\n'
       << "dv = " << c.dv << '\n'
       << "memory_every = " << c.memory_every << '\n'
       << "mode = " << to_string(c.mode) << '\n'
       << "softargmin_sign = " << c.softargmin_sign << '\n'
       << "softargmin_beta = " << fmt_double(c.softargmin_beta) << '\n'
       << "bootstrap_ratio = " << fmt_double(c.bootstrap_ratio) << '\n'
       << "lambda = " << fmt_double(c.lambda) << '\n'
       << "seed = " << c.seed << '\n'
       << "boundary_tolerance_fraction = " << fmt_double(c.boundary_tolerance_fraction) << '\n'
       << "analytic_locality = " << fmt_double(c.analytic_locality) << '\n';
    return os.str();
}

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string val = trim(std::string_view(body).substr(eq + 1));
        if (key == "window_u") c.window_u = parse_size(key, val);
        else if (key == "window_v") c.window_v = parse_size(key, val);
        else if (key == "feature_dim") c.feature_dim = parse_size(key, val);
        else if (key == "dk") c.dk = parse_size(key, val);
        else if (key == "dv") c.dv = parse_size(key, val);
        else if (key == "memory_every") c.memory_every = parse_size(key, val);
        else if (key == "mode") {
            if (val == "learned") c.mode = PipelineMode::learned;
            else if (val == "analytic") c.mode = PipelineMode::analytic;
            else throw ValidationError("config: mode must be 'learned' or 'analytic', got '" + val + "'");
        } else if (key == "softargmin_sign") {
            if (val == "1" || val == "+1") c.softargmin_sign = 1;
            else if (val == "-1") c.softargmin_sign = -1;
            else throw ValidationError("config: softargmin_sign must be +1 or -1");
        } else if (key == "softargmin_beta") c.softargmin_beta = parse_double(key, val);
        else if (key == "bootstrap_ratio") c.bootstrap_ratio = parse_double(key, val);
        else if (key == "lambda") c.lambda = parse_double(key, val);
        else if (key == "seed") c.seed = parse_size(key, val);
        else if (key == "boundary_tolerance_fraction") c.boundary_tolerance_fraction = parse_double(key, val);
        else if (key == "analytic_locality") c.analytic_locality = parse_double(key, val);
        else throw ValidationError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return parse_config(std::string(bytes.begin(), bytes.end()));
}

}  // namespace muvos
