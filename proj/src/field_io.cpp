#include "dislo/field_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace dislo::io {

namespace {

std::string format_axis_list(const double* v, int dim) {
    std::ostringstream os;
    for (int d = 0; d < dim; ++d) {
        if (d) os << ",";
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v[d]);
        os << buf;
    }
    return os.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    std::size_t e = s.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, e - b + 1);
}

}  // namespace

void write_field(const std::filesystem::path& path, const ScalarField& field) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("write_field: cannot open " + path.string());
    const Grid& g = field.grid();
    std::ostringstream n_list;
    for (int d = 0; d < g.dim(); ++d) {
        if (d) n_list << ",";
        n_list << g.n()[d];
    }
    char tbuf[40];
    std::snprintf(tbuf, sizeof tbuf, "%.17g", field.time().value_or(0.0));
    out << "dislo-field v1; dim=" << g.dim() << "; n=" << n_list.str()
        << "; lo=" << format_axis_list(g.lo().data(), g.dim())
        << "; hi=" << format_axis_list(g.hi().data(), g.dim()) << "; t=" << tbuf << "\n";
    char buf[40];
    for (double v : field.values()) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << "\n";
    }
    if (!out) throw NumericalError("write_field: write failed for " + path.string());
}

ScalarField read_field(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("read_field: cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw InvalidArgument("read_field: empty file");

    int dim = 0;
    Idx3 n{1, 1, 1};
    Vec3 lo{}, hi{};
    double t = 0.0;
    bool has_t = false;
    bool magic = false;
    for (const std::string& raw : split(header, ';')) {
        const std::string item = trim(raw);
        if (item == "dislo-field v1") {
            magic = true;
            continue;
        }
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("read_field: malformed header item '" + item + "'");
        const std::string key = trim(item.substr(0, eq));
        const std::string val = trim(item.substr(eq + 1));
        if (key == "dim") {
            dim = std::stoi(val);
        } else if (key == "n") {
            const auto parts = split(val, ',');
            for (std::size_t d = 0; d < parts.size() && d < 3; ++d) n[d] = std::stol(parts[d]);
        } else if (key == "lo" || key == "hi") {
            const auto parts = split(val, ',');
            for (std::size_t d = 0; d < parts.size() && d < 3; ++d)
                (key == "lo" ? lo : hi)[d] = std::stod(parts[d]);
        } else if (key == "t") {
            t = std::stod(val);
            has_t = true;
        } else {
            throw InvalidArgument("read_field: unknown header key '" + key + "'");
        }
    }
    if (!magic) throw InvalidArgument("read_field: missing 'dislo-field v1' magic");
    const Grid g = Grid::make(dim, lo, hi, n);
    std::vector<double> values;
    values.reserve(g.size());
    std::string line;
    while (std::getline(in, line)) {
        const std::string s = trim(line);
        if (s.empty()) continue;
        values.push_back(std::stod(s));
    }
    if (values.size() != g.size()) {
        std::ostringstream os;
        os << "read_field: expected " << g.size() << " values, found " << values.size();
        throw InvalidArgument(os.str());
    }
    return has_t ? ScalarField(g, std::move(values), t) : ScalarField(g, std::move(values));
}

namespace {

void write_snapshots(const std::filesystem::path& dir, std::span<const double> times,
                     std::span<const ScalarField> fields, const std::string& prefix) {
    std::filesystem::create_directories(dir);
    std::ofstream index(dir / (prefix + "_index.txt"));
    for (std::size_t i = 0; i < fields.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%03zu.field", prefix.c_str(), i);
        write_field(dir / name, fields[i].time() ? fields[i] : fields[i].with_time(times[i]));
        char tbuf[40];
        std::snprintf(tbuf, sizeof tbuf, "%.17g", times[i]);
        index << tbuf << " " << name << "\n";
    }
}

}  // namespace

void write_trajectory(const std::filesystem::path& dir, const hj::Trajectory& traj,
                      const std::string& prefix) {
    write_snapshots(dir, traj.times, traj.snapshots, prefix);
}

void write_indicator_density(const std::filesystem::path& dir,
                             const nonlocal::IndicatorDensity& rho, const std::string& prefix) {
    write_snapshots(dir, rho.times, rho.densities, prefix);
}

void write_report(const std::filesystem::path& path,
                  std::span<const analysis::EstimateReport> reports) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("write_report: cannot open " + path.string());
    out << "name,t,lhs,rhs,margin,pass\n";
    char buf[200];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%.10g,%d", r.name.c_str(), r.t,
                      r.lhs, r.rhs, r.margin, r.pass ? 1 : 0);
        out << buf << "\n";
    }
}

}  // namespace dislo::io
