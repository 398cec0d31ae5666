#pragma once

// Measured frequency-response data, frequency grids, and uniform evaluation of
// a plant that is either a rational model or sampled FRF, with optional delay.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rcs/errors.hpp"
#include "rcs/io.hpp"
#include "rcs/poly.hpp"

namespace rcs {

inline constexpr std::string_view kFrfHeader = "omega_rad_s,real,imag";

struct FrfData {
    std::vector<double> omegas;
    std::vector<cplx> values;

    FrfData() = default;
    FrfData(std::vector<double> w, std::vector<cplx> v) : omegas(std::move(w)), values(std::move(v)) { validate(); }

    void validate() const {
        if (omegas.size() != values.size()) throw Error(ErrorKind::ParseError, "omega and value counts differ");
        if (omegas.size() < 2) throw Error(ErrorKind::TooShort, "FRF needs at least 2 samples");
        for (std::size_t i = 0; i < omegas.size(); ++i) {
            if (!std::isfinite(omegas[i]) || !std::isfinite(values[i].real()) || !std::isfinite(values[i].imag()))
                throw Error(ErrorKind::ParseError, "non-finite FRF sample at index " + std::to_string(i));
            if (i > 0 && !(omegas[i] > omegas[i - 1]))
                throw Error(ErrorKind::NonMonotone, "omega not strictly increasing at index " + std::to_string(i));
        }
    }
    double omega_min() const { return omegas.front(); }
    double omega_max() const { return omegas.back(); }
};

namespace detail {

inline double parse_field(std::string_view s, std::size_t line) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
    return v;
}

}  // namespace detail

/// Parses FRF CSV text: header `omega_rad_s,real,imag`, then `omega,re,im` rows (LF or CRLF).
inline FrfData parse_frf(std::string_view text) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    std::vector<double> w;
    std::vector<cplx> v;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!header_seen) {
            if (line != kFrfHeader)
                throw Error(ErrorKind::ParseError, "line 1: expected header '" + std::string(kFrfHeader) + "'");
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos)
            throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected 3 fields");
        w.push_back(detail::parse_field(line.substr(0, c1), line_no));
        const double re = detail::parse_field(line.substr(c1 + 1, c2 - c1 - 1), line_no);
        const double im = detail::parse_field(line.substr(c2 + 1), line_no);
        v.emplace_back(re, im);
        if (w.size() > 1 && !(w.back() > w[w.size() - 2]))
            throw Error(ErrorKind::NonMonotone, "line " + std::to_string(line_no) + ": omega not strictly increasing");
    }
    if (!header_seen) throw Error(ErrorKind::ParseError, "empty FRF file");
    if (w.size() < 2) throw Error(ErrorKind::TooShort, "FRF needs at least 2 samples, got " + std::to_string(w.size()));
    return FrfData(std::move(w), std::move(v));
}

inline FrfData load_frf(const std::filesystem::path& path) { return parse_frf(read_file(path)); }

inline std::string format_frf(const FrfData& d) {
    std::string out(kFrfHeader);
    out += '\n';
    for (std::size_t i = 0; i < d.omegas.size(); ++i) {
        out += fmt_double(d.omegas[i]) + ',' + fmt_double(d.values[i].real()) + ',' + fmt_double(d.values[i].imag()) + '\n';
    }
    return out;
}

inline void save_frf(const std::filesystem::path& path, const FrfData& d) { write_file_atomic(path, format_frf(d)); }

struct DelayMode {
    enum class Kind { Exact, Pade };
    Kind kind = Kind::Exact;
    int pade_order = 5;

    static DelayMode exact() { return {}; }
    static DelayMode pade(int k) { return {Kind::Pade, k}; }
    std::string str() const { return kind == Kind::Exact ? "exact" : "pade:" + std::to_string(pade_order); }
};

/// "exact" or "pade:<k>".
inline DelayMode parse_delay_mode(std::string_view s) {
    if (s == "exact") return DelayMode::exact();
    if (s.starts_with("pade:")) {
        int k = 0;
        const auto body = s.substr(5);
        const auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), k);
        if (ec == std::errc() && p == body.data() + body.size() && k >= 1) return DelayMode::pade(k);
    }
    throw Error(ErrorKind::Usage, "delay mode must be 'exact' or 'pade:<k>' with k >= 1, got '" + std::string(s) + "'");
}

struct PlantModel {
    std::variant<RationalTf, FrfData> model;
    double delay = 0.0;  ///< seconds
    // Pole counts a measured FRF cannot reveal; used by the band-limited Nyquist test.
    int integrators = 0;
    int unstable_poles = 0;

    bool is_measured() const noexcept { return std::holds_alternative<FrfData>(model); }
    const RationalTf& rational() const { return std::get<RationalTf>(model); }
    const FrfData& measured() const { return std::get<FrfData>(model); }
};

/// Linear interpolation in log(omega), independently on real and imaginary parts.
inline cplx interpolate_frf(const FrfData& d, double omega) {
    if (!(omega >= d.omegas.front() && omega <= d.omegas.back()))
        throw Error(ErrorKind::OutOfRange, "omega " + fmt_g(omega) + " outside measured band [" +
                                               fmt_g(d.omegas.front()) + ", " +
                                               fmt_g(d.omegas.back()) + "]");
    const auto it = std::lower_bound(d.omegas.begin(), d.omegas.end(), omega);
    const auto i = static_cast<std::size_t>(it - d.omegas.begin());
    if (d.omegas[i] == omega) return d.values[i];
    const double t = std::log(omega / d.omegas[i - 1]) / std::log(d.omegas[i] / d.omegas[i - 1]);
    const cplx& a = d.values[i - 1];
    const cplx& b = d.values[i];
    return {a.real() + t * (b.real() - a.real()), a.imag() + t * (b.imag() - a.imag())};
}

/// exp(-j w T) in cos/sin form, or its Padé rational when mode says so.
inline cplx delay_factor(double omega, double T, const DelayMode& mode) {
    if (T == 0.0) return 1.0;
    if (mode.kind == DelayMode::Kind::Exact) return {std::cos(omega * T), -std::sin(omega * T)};
    return rational_eval(pade_delay(T, mode.pade_order), omega);
}

inline cplx plant_eval(const PlantModel& p, double omega, const DelayMode& mode = DelayMode::exact()) {
    const cplx g = p.is_measured() ? interpolate_frf(p.measured(), omega) : rational_eval(p.rational(), omega);
    if (p.delay == 0.0) return g;
    return g * delay_factor(omega, p.delay, mode);
}

struct FrequencyGrid {
    std::vector<double> points;

    FrequencyGrid() = default;
    explicit FrequencyGrid(std::vector<double> pts) : points(std::move(pts)) {
        if (points.empty()) throw Error(ErrorKind::BadRange, "empty frequency grid");
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!(points[i] > 0.0) || !std::isfinite(points[i]))
                throw Error(ErrorKind::BadRange, "grid frequencies must be finite and > 0");
            if (i > 0 && !(points[i] > points[i - 1]))
                throw Error(ErrorKind::BadRange, "grid must be strictly increasing");
        }
    }
    std::size_t size() const noexcept { return points.size(); }
    double front() const { return points.front(); }
    double back() const { return points.back(); }
    /// Average number of points per decade; 0 for a single point.
    double density() const {
        if (points.size() < 2) return 0.0;
        return static_cast<double>(points.size() - 1) / std::log10(points.back() / points.front());
    }
};

inline FrequencyGrid make_log_grid(double w_min, double w_max, std::size_t n) {
    if (!(w_min > 0.0) || !(w_max > w_min) || !std::isfinite(w_max) || n < 2)
        throw Error(ErrorKind::BadRange, "log grid needs 0 < w_min < w_max and n >= 2");
    std::vector<double> pts(n);
    const double lr = std::log(w_max / w_min);
    for (std::size_t i = 0; i < n; ++i)
        pts[i] = w_min * std::exp(lr * static_cast<double>(i) / static_cast<double>(n - 1));
    pts.front() = w_min;
    pts.back() = w_max;
    return FrequencyGrid(std::move(pts));
}

/// Log grid with the given density in points per decade (rounded up).
inline FrequencyGrid make_log_grid_density(double w_min, double w_max, double per_decade) {
    if (!(per_decade > 0.0)) throw Error(ErrorKind::BadRange, "points per decade must be > 0");
    const double decades = std::log10(w_max / w_min);
    const auto n = static_cast<std::size_t>(std::ceil(decades * per_decade - 1e-9)) + 1;
    return make_log_grid(w_min, w_max, std::max<std::size_t>(n, 2));
}

}  // namespace rcs
