#pragma once
// Report, series and checkpoint I/O.
//
// Field checkpoint layout (little-endian):
//   8 bytes  magic "VNLFIELD"
//   8 bytes  uint64 header length L
//   L bytes  JSON header, space-padded so the payload starts on an 8-byte boundary
//   payload  nodes^3 records in row-major (i, j, k) order, k fastest, each
//            record six f64 values Ex Ey Ez Bx By Bz
// Component c of E sits at origin + (idx + edge_stagger[c]) h and of B at
// origin + (idx + face_stagger[c]) h; the header carries both maps. Records
// outside a component's staggered range hold 0.
//
// Ensemble checkpoints use magic "VNLPARTS" with the same header scheme and
// eight f64 per particle: X[3] V[3] w f0.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxwell.hpp"
#include "transport.hpp"

namespace vnl {

using json = nlohmann::json;

#ifndef VNL_VERSION
#define VNL_VERSION "0.0.0-dev"
#endif

inline std::string code_version() { return std::string("vnl ") + VNL_VERSION; }

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

// nlohmann objects are key-sorted, so dump() is canonical.
inline std::string config_hash(const json& cfg) { return hex64(fnv1a64(cfg.dump())); }

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
    os << text;
    if (!os) throw std::runtime_error("write failed: " + p.string());
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline json read_json(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw ConfigError("cannot open " + p.string());
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// CSV series

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& p, const std::vector<std::string>& columns) : n_(columns.size()) {
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        os_.open(p, std::ios::binary);
        if (!os_) throw std::runtime_error("cannot open " + p.string());
        for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
        os_ << '\n';
    }
    void row(const std::vector<double>& v) {
        if (v.size() != n_) throw ShapeError("csv row width mismatch");
        for (std::size_t i = 0; i < v.size(); ++i) os_ << (i ? "," : "") << format(v[i]);
        os_ << '\n';
        os_.flush();
    }
    static std::string format(double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    }

private:
    std::ofstream os_;
    std::size_t n_;
};

// ---------------------------------------------------------------------------
// Binary checkpoints

namespace detail {

inline void write_block(std::ofstream& os, const char (&magic)[9], const json& header) {
    std::string h = header.dump();
    const std::size_t pad = (8 - (16 + h.size()) % 8) % 8;
    h.append(pad, ' ');
    const std::uint64_t len = h.size();
    os.write(magic, 8);
    os.write(reinterpret_cast<const char*>(&len), 8);
    os.write(h.data(), std::streamsize(h.size()));
}

inline json read_block(std::ifstream& is, const char (&magic)[9], const std::string& what) {
    char m[8];
    std::uint64_t len = 0;
    if (!is.read(m, 8) || std::memcmp(m, magic, 8) != 0) throw ConfigError(what + ": bad or empty checkpoint");
    if (!is.read(reinterpret_cast<char*>(&len), 8) || len == 0 || len > (1u << 24))
        throw ConfigError(what + ": truncated checkpoint header");
    std::string h(len, '\0');
    if (!is.read(h.data(), std::streamsize(len))) throw ConfigError(what + ": truncated checkpoint header");
    try {
        return json::parse(h);
    } catch (const json::parse_error& e) {
        throw ConfigError(what + ": header is not JSON: " + e.what());
    }
}

inline json stagger_json() {
    json e = json::array(), b = json::array();
    for (int c = 0; c < 3; ++c) {
        e.push_back(kEdgeStagger[c]);
        b.push_back(kFaceStagger[c]);
    }
    return {{"E", e}, {"B", b}};
}

}  // namespace detail

inline void write_field_checkpoint(const std::filesystem::path& p, const FieldGrid& f) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + p.string());
    const int n = f.geom.nodes();
    const json header{{"format", "vnl-field-1"},
                      {"layout", "row-major i,j,k (k fastest); 6 x f64 per node: Ex Ey Ez Bx By Bz"},
                      {"extents", {n, n, n}},
                      {"cells", f.geom.cells},
                      {"spacing", f.geom.h},
                      {"origin", f.geom.origin.c},
                      {"time", f.time},
                      {"stagger", detail::stagger_json()}};
    detail::write_block(os, "VNLFIELD", header);
    std::vector<double> rec(std::size_t(n) * n * n * 6);
    std::size_t o = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                for (int c = 0; c < 3; ++c) rec[o++] = f.E[c](i, j, k);
                for (int c = 0; c < 3; ++c) rec[o++] = f.B[c](i, j, k);
            }
    os.write(reinterpret_cast<const char*>(rec.data()), std::streamsize(rec.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write failed: " + p.string());
}

inline FieldGrid read_field_checkpoint(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw ConfigError("cannot open checkpoint " + p.string());
    const json h = detail::read_block(is, "VNLFIELD", p.string());
    GridGeometry g;
    try {
        g.cells = h.at("cells").get<int>();
        g.h = h.at("spacing").get<double>();
        const auto o = h.at("origin").get<std::array<double, 3>>();
        g.origin = {{o[0], o[1], o[2]}};
    } catch (const json::exception& e) {
        throw ConfigError(p.string() + ": incomplete header: " + e.what());
    }
    if (g.cells < 1 || !(g.h > 0.0)) throw ConfigError(p.string() + ": empty checkpoint");
    FieldGrid f(g);
    f.time = h.value("time", 0.0);
    const int n = g.nodes();
    std::vector<double> rec(std::size_t(n) * n * n * 6);
    if (!is.read(reinterpret_cast<char*>(rec.data()), std::streamsize(rec.size() * sizeof(double))))
        throw ConfigError(p.string() + ": truncated checkpoint payload");
    std::size_t o = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                for (int c = 0; c < 3; ++c) f.E[c](i, j, k) = rec[o++];
                for (int c = 0; c < 3; ++c) f.B[c](i, j, k) = rec[o++];
            }
    return f;
}

// spec_hash identifies the density specification the particles were drawn from.
inline void write_ensemble_checkpoint(const std::filesystem::path& p, const Ensemble& ens,
                                      const std::string& spec_hash = "") {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + p.string());
    const json header{{"format", "vnl-ensemble-1"},
                      {"layout", "8 x f64 per particle: X[3] V[3] w f0"},
                      {"count", ens.particles.size()},
                      {"time", ens.time},
                      {"spec_hash", spec_hash}};
    detail::write_block(os, "VNLPARTS", header);
    for (const auto& q : ens.particles) {
        const double r[8] = {q.X[0], q.X[1], q.X[2], q.V[0], q.V[1], q.V[2], q.w, q.f0};
        os.write(reinterpret_cast<const char*>(r), sizeof r);
    }
    if (!os) throw std::runtime_error("write failed: " + p.string());
}

inline Ensemble read_ensemble_checkpoint(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw ConfigError("cannot open checkpoint " + p.string());
    const json h = detail::read_block(is, "VNLPARTS", p.string());
    Ensemble ens;
    ens.time = h.value("time", 0.0);
    const auto count = h.value("count", std::size_t(0));
    ens.particles.resize(count);
    for (auto& q : ens.particles) {
        double r[8];
        if (!is.read(reinterpret_cast<char*>(r), sizeof r)) throw ConfigError(p.string() + ": truncated ensemble");
        q.X = {{r[0], r[1], r[2]}};
        q.V = {{r[3], r[4], r[5]}};
        q.w = r[6];
        q.f0 = r[7];
    }
    return ens;
}

// ---------------------------------------------------------------------------
// Log-log SVG: markers for samples, a line for the fit.

struct SvgSeries {
    std::vector<double> x, y;
    double slope = 0.0, intercept = 0.0;  // log10 y = intercept + slope log10 x
    std::string title;
};

inline std::string xml_escape(std::string_view in) {
    std::string out;
    for (char c : in) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string loglog_svg(const SvgSeries& s) {
    const double W = 480, H = 360, L = 60, R = 20, T = 30, B = 45;
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (!(s.x[k] > 0.0) || !(s.y[k] > 0.0)) continue;
        x0 = std::min(x0, std::log10(s.x[k]));
        x1 = std::max(x1, std::log10(s.x[k]));
        y0 = std::min(y0, std::log10(s.y[k]));
        y1 = std::max(y1, std::log10(s.y[k]));
    }
    if (!(x1 > x0)) x0 = 0.0, x1 = 1.0;
    if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
    auto px = [&](double lx) { return L + (lx - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double ly) { return H - B - (ly - y0) / (y1 - y0) * (H - T - B); };
    std::ostringstream os;
    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << L << "\" y=\"18\" font-size=\"13\" font-family=\"sans-serif\">" << xml_escape(s.title) << "</text>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int d = int(std::ceil(x0)); d <= int(std::floor(x1)); ++d)
        os << "<text x=\"" << px(d) << "\" y=\"" << H - B + 16 << "\" font-size=\"11\" text-anchor=\"middle\">1e" << d
           << "</text>\n";
    for (int d = int(std::ceil(y0)); d <= int(std::floor(y1)); ++d)
        os << "<text x=\"" << L - 6 << "\" y=\"" << py(d) + 4 << "\" font-size=\"11\" text-anchor=\"end\">1e" << d
           << "</text>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 8 << "\" font-size=\"12\" text-anchor=\"middle\">r</text>\n";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (!(s.x[k] > 0.0) || !(s.y[k] > 0.0)) continue;
        os << "<circle cx=\"" << px(std::log10(s.x[k])) << "\" cy=\"" << py(std::log10(s.y[k]))
           << "\" r=\"3\" fill=\"steelblue\"/>\n";
    }
    os << "<line x1=\"" << px(x0) << "\" y1=\"" << py(s.intercept + s.slope * x0) << "\" x2=\"" << px(x1) << "\" y2=\""
       << py(s.intercept + s.slope * x1) << "\" stroke=\"crimson\"/>\n";
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 16 << "\" font-size=\"12\" text-anchor=\"end\">slope "
       << std::setprecision(4) << s.slope << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace vnl
