#include "dislo/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dislo::config {

namespace {

struct Entry {
    std::string value;
    int line;
    bool consumed = false;
};

using Sections = std::map<std::string, std::map<std::string, Entry>>;

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    std::size_t e = s.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    std::ostringstream os;
    os << origin << ":" << line << ": " << msg;
    throw ConfigError(os.str());
}

Sections tokenize(const std::string& text, const std::string& origin) {
    Sections out;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        const auto hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(origin, line, "malformed section header '" + s + "'");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty()) fail(origin, line, "empty section name");
            out[section];
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail(origin, line, "expected 'key = value', got '" + s + "'");
        if (section.empty()) fail(origin, line, "key outside of any [section]");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) fail(origin, line, "empty key");
        if (out[section].count(key)) fail(origin, line, "duplicate key '" + key + "'");
        out[section][key] = Entry{value, line};
    }
    return out;
}

std::vector<double> parse_list(const std::string& origin, const Entry& e) {
    std::vector<double> out;
    std::string tok;
    std::istringstream in(e.value);
    while (in >> tok) {
        if (!tok.empty() && tok.back() == ',') tok.pop_back();
        if (tok.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            fail(origin, e.line, "not a number: '" + tok + "'");
        }
    }
    return out;
}

class Reader {
public:
    Reader(Sections& sections, std::string origin)
        : sections_(sections), origin_(std::move(origin)) {}

    bool has_section(const std::string& s) const { return sections_.count(s) != 0; }

    bool has(const std::string& s, const std::string& k) {
        auto sec = sections_.find(s);
        return sec != sections_.end() && sec->second.count(k);
    }

    Entry& get(const std::string& s, const std::string& k) {
        auto& e = sections_.at(s).at(k);
        e.consumed = true;
        return e;
    }

    double number(const std::string& s, const std::string& k) {
        Entry& e = get(s, k);
        const auto v = parse_list(origin_, e);
        if (v.size() != 1) fail(origin_, e.line, "'" + k + "' expects a single number");
        return v[0];
    }
    double number_or(const std::string& s, const std::string& k, double dflt) {
        return has(s, k) ? number(s, k) : dflt;
    }
    long integer(const std::string& s, const std::string& k) {
        const double v = number(s, k);
        if (v != std::floor(v)) fail(origin_, sections_.at(s).at(k).line, "'" + k + "' must be an integer");
        return static_cast<long>(v);
    }
    std::vector<double> list(const std::string& s, const std::string& k) {
        return parse_list(origin_, get(s, k));
    }
    std::string text(const std::string& s, const std::string& k) { return get(s, k).value; }
    bool boolean(const std::string& s, const std::string& k, bool dflt) {
        if (!has(s, k)) return dflt;
        Entry& e = get(s, k);
        if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
        if (e.value == "false" || e.value == "0" || e.value == "no") return false;
        fail(origin_, e.line, "'" + k + "' must be a boolean");
    }

    void require(const std::string& s, const std::string& k) {
        if (!has(s, k)) throw ConfigError(origin_ + ": missing required key '" + s + "." + k + "'");
    }

    void finish() {
        for (const auto& [sname, sec] : sections_)
            for (const auto& [kname, e] : sec)
                if (!e.consumed)
                    fail(origin_, e.line, "unknown key '" + sname + "." + kname + "'");
    }

private:
    Sections& sections_;
    std::string origin_;
};

std::uint64_t fnv1a(const Sections& sections) {
    std::uint64_t h = 1469598103934665603ULL;
    auto eat = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [sname, sec] : sections)
        for (const auto& [kname, e] : sec) {
            eat(sname);
            eat(".");
            eat(kname);
            eat("=");
            eat(e.value);
            eat("\n");
        }
    return h;
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text, const std::string& origin) {
    Sections sections = tokenize(text, origin);
    Reader r(sections, origin);
    ScenarioConfig c;
    c.hash = fnv1a(sections);

    // [grid]
    if (!r.has_section("grid")) throw ConfigError(origin + ": missing [grid] section");
    r.require("grid", "dim");
    c.dim = static_cast<int>(r.integer("grid", "dim"));
    if (c.dim < 1 || c.dim > 3) throw ConfigError(origin + ": grid.dim must be 1, 2 or 3");
    for (const char* key : {"lo", "hi", "n"}) r.require("grid", key);
    const auto lo = r.list("grid", "lo");
    const auto hi = r.list("grid", "hi");
    const auto nn = r.list("grid", "n");
    if (static_cast<int>(lo.size()) != c.dim || static_cast<int>(hi.size()) != c.dim ||
        static_cast<int>(nn.size()) != c.dim)
        throw ConfigError(origin + ": grid.lo/hi/n must list one value per axis");
    for (int d = 0; d < c.dim; ++d) {
        c.lo[d] = lo[d];
        c.hi[d] = hi[d];
        c.n[d] = static_cast<long>(nn[d]);
    }

    // [initial]
    if (!r.has_section("initial")) throw ConfigError(origin + ": missing [initial] section");
    {
        r.require("initial", "type");
        const std::string type = r.text("initial", "type");
        if (type == "cone") {
            c.initial = InitialKind::cone;
            c.r0 = r.number_or("initial", "r0", 1.0);
        } else if (type == "ball_sdf") {
            c.initial = InitialKind::ball_sdf;
            c.r0 = r.number_or("initial", "r0", 1.0);
        } else if (type == "union_of_balls") {
            c.initial = InitialKind::union_of_balls;
            r.require("initial", "centers");
            r.require("initial", "r");
            const auto flat = r.list("initial", "centers");
            if (flat.empty() || flat.size() % c.dim != 0)
                throw ConfigError(origin + ": initial.centers must list dim values per center");
            for (std::size_t i = 0; i < flat.size(); i += c.dim) {
                Vec3 p{};
                for (int d = 0; d < c.dim; ++d) p[d] = flat[i + d];
                c.centers.push_back(p);
            }
            c.ball_r = r.number("initial", "r");
        } else if (type == "file") {
            c.initial = InitialKind::file;
            r.require("initial", "path");
            r.require("initial", "r0");
            c.initial_path = r.text("initial", "path");
            c.r0 = r.number("initial", "r0");
        } else {
            throw ConfigError(origin + ": unknown initial.type '" + type + "'");
        }
    }

    // [kernel], optional
    if (r.has_section("kernel")) {
        r.require("kernel", "type");
        const std::string type = r.text("kernel", "type");
        if (type == "gaussian") {
            c.kernel = KernelKind::gaussian;
            r.require("kernel", "sigma");
            c.sigma = r.number("kernel", "sigma");
            c.amplitude = r.number_or("kernel", "amplitude", 1.0);
            c.kernel_l1 = r.number_or("kernel", "l1", 0.0);
        } else if (type == "bump") {
            c.kernel = KernelKind::bump;
            r.require("kernel", "radius");
            c.radius = r.number("kernel", "radius");
            c.amplitude = r.number_or("kernel", "amplitude", 1.0);
            c.kernel_l1 = r.number_or("kernel", "l1", 0.0);
        } else if (type == "constant") {
            c.kernel = KernelKind::constant;
            r.require("kernel", "value");
            r.require("kernel", "box_radius");
            c.value = r.number("kernel", "value");
            c.box_radius = r.number("kernel", "box_radius");
        } else if (type == "delta") {
            c.kernel = KernelKind::delta;
        } else if (type == "file") {
            c.kernel = KernelKind::file;
            r.require("kernel", "path");
            c.kernel_path = r.text("kernel", "path");
        } else {
            throw ConfigError(origin + ": unknown kernel.type '" + type + "'");
        }
    }

    // [c1]
    if (r.has_section("c1")) {
        r.require("c1", "type");
        const std::string type = r.text("c1", "type");
        if (type == "constant") {
            c.c1 = FieldKind::constant;
            r.require("c1", "value");
            c.c1_value = r.number("c1", "value");
        } else if (type == "file") {
            c.c1 = FieldKind::file;
            r.require("c1", "path");
            c.c1_path = r.text("c1", "path");
        } else {
            throw ConfigError(origin + ": unknown c1.type '" + type + "'");
        }
    }

    // [run]
    if (!r.has_section("run")) throw ConfigError(origin + ": missing [run] section");
    r.require("run", "T");
    c.T = r.number("run", "T");
    if (r.has("run", "output_times")) c.output_times = r.list("run", "output_times");
    c.cfl = r.number_or("run", "cfl", 0.5);
    if (r.has("run", "sign_mode")) {
        const std::string m = r.text("run", "sign_mode");
        if (m == "nonnegative")
            c.sign_mode = hj::SignMode::nonnegative;
        else if (m == "nonpositive")
            c.sign_mode = hj::SignMode::nonpositive;
        else if (m == "unrestricted")
            c.sign_mode = hj::SignMode::unrestricted;
        else
            throw ConfigError(origin + ": unknown run.sign_mode '" + m + "'");
    }
    c.allow_h5_violation = r.boolean("run", "allow_h5_violation", false);
    c.tol_fp = r.number_or("run", "tol_fp", 0.0);
    c.max_iter = static_cast<int>(r.has("run", "max_iter") ? r.integer("run", "max_iter") : 30);
    c.eta_override = r.number_or("run", "eta_override", 0.0);
    c.sample_scale = r.number_or("run", "sample_scale", 1.0);

    // [verify], optional
    if (r.has_section("verify")) {
        if (r.has("verify", "band")) {
            const auto band = r.list("verify", "band");
            if (band.size() != 2) throw ConfigError(origin + ": verify.band expects two numbers");
            c.band_a = band[0];
            c.band_b = band[1];
        }
        if (r.has("verify", "epsilon")) c.band_eps = r.number("verify", "epsilon");
        c.eta_check = r.number_or("verify", "eta_check", 0.0);
        if (r.has("verify", "per_band")) {
            const auto band = r.list("verify", "per_band");
            if (band.size() != 2)
                throw ConfigError(origin + ": verify.per_band expects two numbers");
            c.per_band_a = band[0];
            c.per_band_b = band[1];
        }
        c.speed_bound = r.number_or("verify", "speed_bound", 0.0);
    }

    r.finish();
    return c;
}

ScenarioConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config_text(os.str(), path.string());
}

}  // namespace dislo::config
