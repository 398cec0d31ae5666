#pragma once

// System description files: INI-style sections of key = value lines.
//
//   [plant]       num, den (descending powers) or frf_file; delay; integrators; unstable_poles
//   [controller]  family = lead-lag; k_p, omega_i, omega_d, omega_t, optional k_g
//   [c1] [c2] [c3] [cs]   num, den for explicit components
//   [reset]       kind = gfore | ci | pci; omega_r, omega_k, d_r, gamma, b_r
//   [analysis]    omega_min, omega_max, points_per_decade, delay_mode, pade_order
//
// '#' and ';' start comments. Coefficient lists are space or comma separated.

#include <charconv>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rcs/errors.hpp"
#include "rcs/frf.hpp"
#include "rcs/io.hpp"
#include "rcs/poly.hpp"
#include "rcs/reset_model.hpp"

namespace rcs {

struct IniValue {
    std::string text;
    std::size_t line = 0;
};

struct IniSection {
    std::size_t line = 0;
    std::map<std::string, IniValue> values;
};

using IniDocument = std::map<std::string, IniSection>;

namespace detail {

inline std::string_view trim_ws(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline Error schema_error(std::size_t line, std::string_view field, std::string_view why) {
    std::string msg = line > 0 ? "line " + std::to_string(line) + ": " : std::string();
    if (!field.empty()) msg += std::string(field) + ": ";
    return Error(ErrorKind::SchemaError, msg + std::string(why));
}

}  // namespace detail

inline IniDocument parse_ini(std::string_view text) {
    IniDocument doc;
    std::string current;
    std::size_t line_no = 0;
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim_ws(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw detail::schema_error(line_no, "", "unterminated section header");
            current = std::string(detail::trim_ws(line.substr(1, line.size() - 2)));
            if (doc.contains(current)) throw detail::schema_error(line_no, current, "duplicate section");
            doc[current].line = line_no;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw detail::schema_error(line_no, "", "expected key = value");
        if (current.empty()) throw detail::schema_error(line_no, "", "key outside of any section");
        const std::string key(detail::trim_ws(line.substr(0, eq)));
        const std::string value(detail::trim_ws(line.substr(eq + 1)));
        if (key.empty()) throw detail::schema_error(line_no, "", "empty key");
        auto& sec = doc[current];
        if (sec.values.contains(key)) throw detail::schema_error(line_no, current + "." + key, "duplicate key");
        sec.values[key] = {value, line_no};
    }
    return doc;
}

struct AnalysisSettings {
    double omega_min = 1e-2;
    double omega_max = 1e6;
    double points_per_decade = 400.0;
    DelayMode delay_mode = DelayMode::exact();
    int pade_order = kDefaultPadeOrder;
};

struct SystemConfig {
    std::filesystem::path source;
    LoopComponents loop;
    std::optional<ControllerParams> family;  ///< set when the lead-lag family was used
    std::optional<double> k_g;                ///< value used by the family, derived or given
    bool k_g_derived = false;
    AnalysisSettings analysis;
};

namespace detail {

class SectionReader {
public:
    SectionReader(const IniDocument& doc, std::string name) : name_(std::move(name)) {
        if (auto it = doc.find(name_); it != doc.end()) sec_ = &it->second;
    }
    bool present() const { return sec_ != nullptr; }
    bool has(const std::string& key) const { return sec_ && sec_->values.contains(key); }

    double number(const std::string& key) const {
        const IniValue& v = get(key);
        double out = 0.0;
        const char* b = v.text.data();
        const char* e = b + v.text.size();
        if (b != e && *b == '+') ++b;
        const auto [p, ec] = std::from_chars(b, e, out);
        if (b == e || ec != std::errc() || p != e || !std::isfinite(out))
            throw schema_error(v.line, name_ + "." + key, "expected a finite number, got '" + v.text + "'");
        return out;
    }
    double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }
    int integer_or(const std::string& key, int fallback) const {
        if (!has(key)) return fallback;
        const IniValue& v = get(key);
        int out = 0;
        const auto [p, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
        if (v.text.empty() || ec != std::errc() || p != v.text.data() + v.text.size())
            throw schema_error(v.line, name_ + "." + key, "expected an integer, got '" + v.text + "'");
        return out;
    }
    std::string text(const std::string& key) const { return get(key).text; }
    std::size_t line(const std::string& key) const { return has(key) ? get(key).line : (sec_ ? sec_->line : 0); }
    std::size_t section_line() const { return sec_ ? sec_->line : 0; }

    /// Descending coefficient list.
    Polynomial poly(const std::string& key) const {
        const IniValue& v = get(key);
        std::vector<double> c;
        std::string_view s = v.text;
        while (!s.empty()) {
            const auto sep = s.find_first_of(" ,\t");
            const std::string_view tok = s.substr(0, sep);
            s = sep == std::string_view::npos ? std::string_view{} : s.substr(sep + 1);
            if (tok.empty()) continue;
            double x = 0.0;
            const char* b = tok.data();
            if (*b == '+') ++b;
            const auto [p, ec] = std::from_chars(b, tok.data() + tok.size(), x);
            if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(x))
                throw schema_error(v.line, name_ + "." + key, "bad coefficient '" + std::string(tok) + "'");
            c.push_back(x);
        }
        if (c.empty()) throw schema_error(v.line, name_ + "." + key, "empty coefficient list");
        return Polynomial::from_descending(c);
    }
    RationalTf tf() const {
        if (!has("num") || !has("den")) throw schema_error(section_line(), name_, "needs both num and den");
        const Polynomial den = poly("den");
        if (den.is_zero()) throw schema_error(line("den"), name_ + ".den", "denominator is zero");
        return {poly("num"), den};
    }
    void only(const std::set<std::string>& allowed) const {
        if (!sec_) return;
        for (const auto& [k, v] : sec_->values)
            if (!allowed.contains(k)) throw schema_error(v.line, name_ + "." + k, "unknown key");
    }

private:
    const IniValue& get(const std::string& key) const {
        if (!has(key)) throw schema_error(section_line(), name_ + "." + key, "missing");
        return sec_->values.at(key);
    }
    std::string name_;
    const IniSection* sec_ = nullptr;
};

}  // namespace detail

/// Validated system description. `base_dir` resolves a relative frf_file.
inline SystemConfig parse_system_config_text(std::string_view text, const std::filesystem::path& base_dir = {}) {
    using detail::schema_error;
    const IniDocument doc = parse_ini(text);
    const std::set<std::string> known = {"plant", "controller", "c1", "c2", "c3", "cs", "reset", "analysis"};
    for (const auto& [name, sec] : doc)
        if (!known.contains(name)) throw schema_error(sec.line, name, "unknown section");

    SystemConfig cfg;
    // plant
    const detail::SectionReader plant(doc, "plant");
    if (!plant.present()) throw schema_error(0, "plant", "missing section");
    plant.only({"num", "den", "frf_file", "delay", "integrators", "unstable_poles"});
    const bool rational = plant.has("num") || plant.has("den");
    const bool measured = plant.has("frf_file");
    if (rational == measured)
        throw schema_error(plant.section_line(), "plant", "exactly one of num/den or frf_file must be given");
    if (rational) {
        const RationalTf g = plant.tf();
        cfg.loop.plant.model = g;
    } else {
        std::filesystem::path p = plant.text("frf_file");
        if (p.is_relative()) p = base_dir / p;
        try {
            cfg.loop.plant.model = load_frf(p);
        } catch (const Error& e) {
            throw schema_error(plant.line("frf_file"), "plant.frf_file", e.what());
        }
    }
    cfg.loop.plant.delay = plant.number_or("delay", 0.0);
    if (!(cfg.loop.plant.delay >= 0.0)) throw schema_error(plant.line("delay"), "plant.delay", "must be >= 0");
    cfg.loop.plant.integrators = plant.integer_or("integrators", 0);
    cfg.loop.plant.unstable_poles = plant.integer_or("unstable_poles", 0);
    if (cfg.loop.plant.integrators < 0 || cfg.loop.plant.unstable_poles < 0)
        throw schema_error(plant.section_line(), "plant", "pole counts must be >= 0");

    // reset element
    const detail::SectionReader reset(doc, "reset");
    if (!reset.present()) throw schema_error(0, "reset", "missing section");
    reset.only({"kind", "omega_r", "omega_k", "d_r", "gamma", "b_r"});
    const std::string kind = reset.has("kind") ? reset.text("kind") : "gfore";
    const double omega_r = reset.number_or("omega_r", 0.0);
    const double omega_k = reset.number("omega_k");
    const double d_r = reset.number_or("d_r", 0.0);
    const double gamma = reset.number_or("gamma", 0.0);
    const double b_r = reset.number_or("b_r", 1.0);
    if (!(gamma > -1.0 && gamma < 1.0)) throw schema_error(reset.line("gamma"), "reset.gamma", "must lie in (-1, 1)");
    if (!(omega_k > 0.0)) throw schema_error(reset.line("omega_k"), "reset.omega_k", "must be > 0");
    if (b_r == 0.0) throw schema_error(reset.line("b_r"), "reset.b_r", "must be nonzero");
    if (kind == "ci" || kind == "pci") {
        if (omega_r != 0.0) throw schema_error(reset.line("omega_r"), "reset.omega_r", "a CI-type element requires omega_r = 0");
        if (kind == "ci" && d_r != 0.0) throw schema_error(reset.line("d_r"), "reset.d_r", "CI has no feedthrough; use kind = pci");
    } else if (kind == "gfore") {
        if (!(omega_r > 0.0)) throw schema_error(reset.line("omega_r"), "reset.omega_r", "GFORE requires omega_r > 0");
    } else {
        throw schema_error(reset.line("kind"), "reset.kind", "expected gfore, ci or pci");
    }

    // controllers
    const detail::SectionReader fam(doc, "controller");
    if (fam.present()) {
        fam.only({"family", "k_p", "omega_i", "omega_d", "omega_t", "k_g"});
        if (fam.has("family") && fam.text("family") != "lead-lag")
            throw schema_error(fam.line("family"), "controller.family", "only 'lead-lag' is supported");
        for (const char* s : {"c1", "c2", "c3"})
            if (doc.contains(s)) throw schema_error(doc.at(s).line, s, "cannot be combined with [controller]");
        ControllerParams p;
        p.k_p = fam.number("k_p");
        p.omega_i = fam.number("omega_i");
        p.omega_d = fam.number("omega_d");
        p.omega_t = fam.number("omega_t");
        if (fam.has("k_g")) p.k_g = fam.number("k_g");
        p.gamma = gamma;
        p.D_r = d_r;
        p.omega_r = omega_r;
        p.omega_k = omega_k;
        p.B_r = b_r;
        PlantModel pm = cfg.loop.plant;
        try {
            cfg.loop = build_example_controller(p, std::move(pm));
        } catch (const Error& e) {
            throw schema_error(fam.section_line(), "controller", e.what());
        }
        cfg.k_g_derived = !p.k_g.has_value();
        cfg.k_g = p.k_g ? *p.k_g : compute_kg(gamma, omega_r);
        cfg.family = p;
    } else {
        auto read = [&](const char* name, RationalTf& into) {
            const detail::SectionReader s(doc, name);
            if (!s.present()) return;
            s.only({"num", "den"});
            into = s.tf();
        };
        read("c1", cfg.loop.c1);
        read("c2", cfg.loop.c2);
        read("c3", cfg.loop.c3);
        cfg.loop.reset = ResetElement::gfore(omega_r, omega_k, d_r, gamma, b_r);
    }
    {
        const detail::SectionReader cs(doc, "cs");
        if (cs.present()) {
            cs.only({"num", "den"});
            cfg.loop.cs = cs.tf();
        }
    }
    // analysis
    const detail::SectionReader an(doc, "analysis");
    an.only({"omega_min", "omega_max", "points_per_decade", "delay_mode", "pade_order"});
    auto& a = cfg.analysis;
    if (cfg.loop.plant.is_measured()) {
        a.omega_min = cfg.loop.plant.measured().omega_min();
        a.omega_max = cfg.loop.plant.measured().omega_max();
    }
    a.omega_min = an.number_or("omega_min", a.omega_min);
    a.omega_max = an.number_or("omega_max", a.omega_max);
    a.points_per_decade = an.number_or("points_per_decade", a.points_per_decade);
    a.pade_order = an.integer_or("pade_order", a.pade_order);
    if (!(a.omega_min > 0.0 && a.omega_max > a.omega_min))
        throw schema_error(an.section_line(), "analysis", "need 0 < omega_min < omega_max");
    if (!(a.points_per_decade > 0.0)) throw schema_error(an.line("points_per_decade"), "analysis.points_per_decade", "must be > 0");
    if (a.pade_order < 1) throw schema_error(an.line("pade_order"), "analysis.pade_order", "must be >= 1");
    if (an.has("delay_mode")) {
        try {
            a.delay_mode = parse_delay_mode(an.text("delay_mode"));
        } catch (const Error& e) {
            throw schema_error(an.line("delay_mode"), "analysis.delay_mode", e.what());
        }
    }
    return cfg;
}

inline SystemConfig parse_system_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::ParseError, "config not found: " + path.string());
    SystemConfig cfg = parse_system_config_text(read_file(path), path.parent_path());
    cfg.source = path;
    return cfg;
}

}  // namespace rcs
