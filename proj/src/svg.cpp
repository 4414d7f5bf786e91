#include "subcycle/svg.hpp"

#include "subcycle/constants.hpp"
#include "subcycle/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace subcycle {

namespace fs = std::filesystem;

namespace {

constexpr const char* kRed = "#c8102e";
constexpr const char* kBlue = "#1f5fbf";

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", std::abs(v) < 0.005 ? 0.0 : v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

struct Curve {
    std::vector<double> x;
    std::vector<double> y;
};

// Roughly 5 round tick positions covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(t);
    return out;
}

class Panel {
public:
    Panel(double x, double y, double w, double h, double x0, double x1, double y0, double y1)
        : px_(x), py_(y), w_(w), h_(h), x0_(x0), x1_(x1), y0_(y0), y1_(y1) {
        if (y1_ <= y0_) {
            y0_ -= 1.0;
            y1_ += 1.0;
        }
    }

    double sx(double x) const { return px_ + (x - x0_) / (x1_ - x0_) * w_; }
    double sy(double y) const { return py_ + h_ - (y - y0_) / (y1_ - y0_) * h_; }
    double y0() const { return y0_; }
    double y1() const { return y1_; }

    void frame(std::ostream& o, const std::string& xlabel, const std::string& ylabel) const {
        o << "<rect x=\"" << num(px_) << "\" y=\"" << num(py_) << "\" width=\"" << num(w_) << "\" height=\"" << num(h_)
          << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
        for (double t : ticks(x0_, x1_)) {
            o << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(py_ + h_) << "\" x2=\"" << num(sx(t)) << "\" y2=\""
              << num(py_ + h_ + 4) << "\" stroke=\"black\"/>\n";
            o << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(py_ + h_ + 16)
              << "\" font-size=\"10\" text-anchor=\"middle\">" << label(t) << "</text>\n";
        }
        for (double t : ticks(y0_, y1_)) {
            o << "<line x1=\"" << num(px_ - 4) << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << num(px_) << "\" y2=\""
              << num(sy(t)) << "\" stroke=\"black\"/>\n";
            o << "<text x=\"" << num(px_ - 6) << "\" y=\"" << num(sy(t) + 3)
              << "\" font-size=\"10\" text-anchor=\"end\">" << label(t) << "</text>\n";
        }
        if (!xlabel.empty()) {
            o << "<text x=\"" << num(px_ + w_ / 2) << "\" y=\"" << num(py_ + h_ + 32)
              << "\" font-size=\"11\" text-anchor=\"middle\">" << xlabel << "</text>\n";
        }
        o << "<text transform=\"translate(" << num(px_ - 48) << ' ' << num(py_ + h_ / 2)
          << ") rotate(-90)\" font-size=\"11\" text-anchor=\"middle\">" << ylabel << "</text>\n";
    }

    void right_axis(std::ostream& o, double lo, double hi, const std::string& name) const {
        for (double t : ticks(lo, hi)) {
            const double y = py_ + h_ - (t - lo) / (hi - lo) * h_;
            o << "<line x1=\"" << num(px_ + w_) << "\" y1=\"" << num(y) << "\" x2=\"" << num(px_ + w_ + 4) << "\" y2=\""
              << num(y) << "\" stroke=\"gray\"/>\n";
            o << "<text x=\"" << num(px_ + w_ + 6) << "\" y=\"" << num(y + 3) << "\" font-size=\"10\" fill=\"gray\">"
              << label(t) << "</text>\n";
        }
        o << "<text transform=\"translate(" << num(px_ + w_ + 44) << ' ' << num(py_ + h_ / 2)
          << ") rotate(90)\" font-size=\"11\" fill=\"gray\" text-anchor=\"middle\">" << name << "</text>\n";
    }

    void line(std::ostream& o, const Curve& c, const char* color, const char* dash = nullptr, double width = 1.2) const {
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << num(width) << '"';
        if (dash) o << " stroke-dasharray=\"" << dash << '"';
        o << " points=\"";
        for (std::size_t k = 0; k < c.x.size(); ++k) o << (k ? " " : "") << num(sx(c.x[k])) << ',' << num(sy(c.y[k]));
        o << "\"/>\n";
    }

    // Red where c > 0, blue where c < 0, with crossings interpolated.
    void signed_fill(std::ostream& o, const Curve& c) const {
        Curve ext;
        for (std::size_t k = 0; k < c.x.size(); ++k) {
            if (k > 0 && (c.y[k - 1] < 0.0) != (c.y[k] < 0.0) && c.y[k] != c.y[k - 1]) {
                const double s = c.y[k - 1] / (c.y[k - 1] - c.y[k]);
                ext.x.push_back(c.x[k - 1] + s * (c.x[k] - c.x[k - 1]));
                ext.y.push_back(0.0);
            }
            ext.x.push_back(c.x[k]);
            ext.y.push_back(c.y[k]);
        }
        for (int sign : {1, -1}) {
            o << "<polygon fill=\"" << (sign > 0 ? kRed : kBlue) << "\" fill-opacity=\"0.45\" stroke=\"none\" points=\"";
            o << num(sx(ext.x.front())) << ',' << num(sy(0.0));
            for (std::size_t k = 0; k < ext.x.size(); ++k) {
                const double y = sign > 0 ? std::max(ext.y[k], 0.0) : std::min(ext.y[k], 0.0);
                o << ' ' << num(sx(ext.x[k])) << ',' << num(sy(y));
            }
            o << ' ' << num(sx(ext.x.back())) << ',' << num(sy(0.0)) << "\"/>\n";
        }
    }

    void vline(std::ostream& o, double x) const {
        o << "<line x1=\"" << num(sx(x)) << "\" y1=\"" << num(py_) << "\" x2=\"" << num(sx(x)) << "\" y2=\""
          << num(py_ + h_) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    }

    void hline(std::ostream& o, double y) const {
        o << "<line x1=\"" << num(px_) << "\" y1=\"" << num(sy(y)) << "\" x2=\"" << num(px_ + w_) << "\" y2=\""
          << num(sy(y)) << "\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
    }

    void title(std::ostream& o, const std::string& text) const {
        o << "<text x=\"" << num(px_ + 6) << "\" y=\"" << num(py_ + 14) << "\" font-size=\"11\">" << text << "</text>\n";
    }

private:
    double px_, py_, w_, h_;
    double x0_, x1_, y0_, y1_;
};

struct DataFile {
    io::CsvTable table;
    std::map<std::string, std::string> header;

    Curve curve(const std::string& xcol, const std::string& ycol) const {
        Curve c;
        const std::size_t ix = table.column(xcol);
        const std::size_t iy = table.column(ycol);
        for (const auto& row : table.rows) {
            c.x.push_back(row[ix]);
            c.y.push_back(row[iy]);
        }
        return c;
    }
};

DataFile load(const RunManifest& m, const EmittedFile& f) {
    const fs::path p = m.output_dir / f.path;
    if (!fs::exists(p)) throw ConfigError("figure data missing: " + p.string());
    if (sha256_file(p) != f.sha256) throw ConfigError("figure data changed since the run: " + p.string());
    std::ifstream in(p);
    DataFile d;
    d.header = read_comment_header(in);
    in.clear();
    in.seekg(0);
    d.table = io::read_csv(in);
    return d;
}

std::pair<double, double> range(const Curve& c, double pad = 0.08) {
    const auto [lo, hi] = std::minmax_element(c.y.begin(), c.y.end());
    const double span = std::max(*hi - *lo, 1e-12);
    return {*lo - pad * span, *hi + pad * span};
}

// Delay window where the coherent field is non-negligible, padded by a quarter.
std::pair<double, double> support(const Curve& c) {
    double peak = 0.0;
    for (double y : c.y) peak = std::max(peak, std::abs(y));
    std::size_t a = 0;
    std::size_t b = c.x.size() - 1;
    while (a < b && std::abs(c.y[a]) < 1e-3 * peak) ++a;
    while (b > a && std::abs(c.y[b]) < 1e-3 * peak) --b;
    const double pad = 0.25 * (c.x[b] - c.x[a]);
    return {std::max(c.x.front(), c.x[a] - pad), std::min(c.x.back(), c.x[b] + pad)};
}

Curve window(const Curve& c, std::pair<double, double> w) {
    Curve out;
    for (std::size_t k = 0; k < c.x.size(); ++k) {
        if (c.x[k] < w.first || c.x[k] > w.second) continue;
        out.x.push_back(c.x[k]);
        out.y.push_back(c.y[k]);
    }
    return out;
}

const EmittedFile* rdn_file(const RunManifest& m, const std::string& suffix) {
    for (const char* mode : {"monte_carlo", "analytic_exact", "analytic_linearized"}) {
        if (const EmittedFile* f = m.find(std::string("rdn_") + mode + "_" + suffix)) return f;
    }
    return nullptr;
}

void svg_open(std::ostream& o, int w, int h) {
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\" font-family=\"sans-serif\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

fs::path write_svg(const RunManifest& m, const std::string& name, const std::string& body) {
    const fs::path p = m.output_dir / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << body << "</svg>\n";
    return p;
}

std::string fig2(const RunManifest& m) {
    std::ostringstream o;
    svg_open(o, 900, 560);
    const std::pair<const char*, const char*> ceps[] = {{"cep0", "CEP"}, {"cep_pi", "CEP + pi"}};
    int col = 0;
    for (const auto& [tag, title] : ceps) {
        const std::string t(tag);
        const EmittedFile* fc = m.find("coherent_" + t + ".csv");
        const EmittedFile* fp = m.find("profile_" + t + ".csv");
        const EmittedFile* fr = rdn_file(m, t + ".csv");
        if (!fc || !fp || !fr) throw ConfigError("fig2 needs coherent, profile and rdn data for " + t);
        const DataFile coherent = load(m, *fc);
        const DataFile profile = load(m, *fp);
        const DataFile rdn = load(m, *fr);

        const Curve field = coherent.curve("t_D_fs", "E_Vcm");
        const auto win = support(profile.curve("t_fs", "E_Vcm"));
        const Curve ew = window(field, win);
        const Curve aw = window(profile.curve("t_fs", "RDN_analytic"), win);
        const Curve rw = window(rdn.curve("t_D_fs", "RDN"), win);

        // guide lines at the extremal slopes of the generated field
        const Curve slope = profile.curve("t_fs", "dEdt_Vcm_per_fs");
        const auto [smin, smax] = std::minmax_element(slope.y.begin(), slope.y.end());
        const double t_steep_neg = slope.x[static_cast<std::size_t>(smin - slope.y.begin())];
        const double t_steep_pos = slope.x[static_cast<std::size_t>(smax - slope.y.begin())];

        const double x = 80 + col * 430;
        const auto er = range(ew);
        const Panel top(x, 30, 340, 210, win.first, win.second, er.first, er.second);
        top.frame(o, "", "E_THz (V/cm)");
        top.hline(o, 0.0);
        top.line(o, ew, "black");
        top.vline(o, t_steep_neg);
        top.vline(o, t_steep_pos);
        top.title(o, std::string(title) + ", " + profile.header.at("energy_nJ") + " nJ");

        const auto rr = range(rw, 0.15);
        const Panel bottom(x, 280, 340, 210, win.first, win.second, std::min(rr.first, 0.0), std::max(rr.second, 0.0));
        bottom.frame(o, "delay t_D (fs)", "RDN");
        bottom.signed_fill(o, aw);
        bottom.hline(o, 0.0);
        if (fr->path.find("monte_carlo") != std::string::npos) bottom.line(o, rw, "#555555", nullptr, 0.5);
        bottom.line(o, aw, "black", nullptr, 0.8);
        bottom.vline(o, t_steep_neg);
        bottom.vline(o, t_steep_pos);
        ++col;
    }
    return o.str();
}

std::string fig3(const RunManifest& m, const std::vector<std::string>& tags) {
    struct Row {
        DataFile profile;
        std::optional<Curve> mc;
    };
    std::vector<Row> rows;
    for (const auto& tag : tags) {
        const EmittedFile* fp = m.find("profile_E" + tag + ".csv");
        if (!fp) throw ConfigError("fig3 needs profile_E" + tag + ".csv");
        Row r{load(m, *fp), std::nullopt};
        if (const EmittedFile* fmc = m.find("rdn_monte_carlo_E" + tag + ".csv")) {
            r.mc = load(m, *fmc).curve("t_D_fs", "RDN");
        }
        rows.push_back(std::move(r));
    }
    const int panel_h = 130;
    const int h = 40 + static_cast<int>(rows.size()) * (panel_h + 20) + 30;
    std::ostringstream o;
    svg_open(o, 620, h);

    // common window and scale, taken from the strongest (last listed) field
    const auto win = support(rows.back().profile.curve("t_fs", "E_Vcm"));
    double lo = 0.0;
    double hi = 0.0;
    std::vector<Curve> analytic;
    for (const auto& r : rows) {
        analytic.push_back(window(r.profile.curve("t_fs", "RDN_analytic"), win));
        const auto a = range(analytic.back(), 0.3);
        lo = std::min(lo, a.first);
        hi = std::max(hi, a.second);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Panel p(90, 30 + static_cast<double>(i) * (panel_h + 20), 480, panel_h, win.first, win.second, lo, hi);
        p.frame(o, i + 1 == rows.size() ? "delay t_D (fs)" : "", "RDN");
        p.signed_fill(o, analytic[i]);
        p.hline(o, 0.0);
        if (rows[i].mc) {
            Curve mc = window(*rows[i].mc, win);
            for (double& v : mc.y) v = std::clamp(v, lo, hi);
            p.line(o, mc, "#555555", nullptr, 0.4);
        }
        p.line(o, analytic[i], "black", nullptr, 0.8);
        p.title(o, "E_pump = " + rows[i].profile.header.at("energy_nJ") + " nJ");
    }
    return o.str();
}

std::string fig4(const RunManifest& m) {
    const EmittedFile* fs_ = m.find("sweep.csv");
    const EmittedFile* fm = m.find("fit_model.csv");
    if (!fs_ || !fm) throw ConfigError("fig4 needs sweep.csv and fit_model.csv");
    const DataFile sweep = load(m, *fs_);
    const DataFile model = load(m, *fm);

    const Curve mx = model.curve("E_nJ", "model_max");
    const Curve mn = model.curve("E_nJ", "model_min");
    const Curve sq = model.curve("E_nJ", "squeezing_percent");
    const Curve px = sweep.curve("E_nJ", "rdn_max");
    const Curve pn = sweep.curve("E_nJ", "rdn_min");
    const Curve ex = sweep.curve("E_nJ", "stderr_max");
    const Curve en = sweep.curve("E_nJ", "stderr_min");

    double lo = 0.0;
    double hi = 0.0;
    for (const Curve* c : {&mx, &mn, &px, &pn}) {
        for (double v : c->y) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double pad = 0.1 * (hi - lo);
    std::ostringstream o;
    svg_open(o, 680, 440);
    const Panel p(90, 30, 480, 340, 0.0, mx.x.back(), lo - pad, hi + pad);
    p.frame(o, "pump energy E_pump (nJ)", "extremal RDN");
    p.hline(o, 0.0);
    p.line(o, mx, kRed);
    p.line(o, mn, kBlue);

    const double sq_top = std::max(10.0, *std::max_element(sq.y.begin(), sq.y.end()));
    Curve sq_scaled = sq;
    for (double& v : sq_scaled.y) v = p.y0() + v / sq_top * (p.y1() - p.y0());
    p.line(o, sq_scaled, "gray", "6 4");
    p.right_axis(o, 0.0, sq_top, "in-crystal squeezing (%)");

    for (std::size_t k = 0; k < px.x.size(); ++k) {
        for (int branch = 0; branch < 2; ++branch) {
            const double y = branch == 0 ? px.y[k] : pn.y[k];
            const double e = branch == 0 ? ex.y[k] : en.y[k];
            const char* color = branch == 0 ? kRed : kBlue;
            o << "<line x1=\"" << num(p.sx(px.x[k])) << "\" y1=\"" << num(p.sy(y - e)) << "\" x2=\"" << num(p.sx(px.x[k]))
              << "\" y2=\"" << num(p.sy(y + e)) << "\" stroke=\"" << color << "\"/>\n";
            o << "<circle cx=\"" << num(p.sx(px.x[k])) << "\" cy=\"" << num(p.sy(y)) << "\" r=\"4\" fill=\"" << color
              << "\"/>\n";
        }
    }
    return o.str();
}

}  // namespace

std::vector<fs::path> emit_figures(const RunManifest& m) {
    if (m.files.empty()) throw ConfigError("manifest lists no output files");
    std::vector<fs::path> out;
    if (m.find("coherent_cep0.csv")) out.push_back(write_svg(m, "fig2.svg", fig2(m)));

    std::vector<std::string> tags;
    for (const auto& f : m.files) {
        if (f.path.rfind("profile_E", 0) == 0) tags.push_back(f.path.substr(9, f.path.size() - 9 - 4));
    }
    if (!tags.empty()) out.push_back(write_svg(m, "fig3.svg", fig3(m, tags)));

    if (m.find("sweep.csv")) out.push_back(write_svg(m, "fig4.svg", fig4(m)));
    if (out.empty()) throw ConfigError("manifest has no data that maps to a figure");
    return out;
}

}  // namespace subcycle
