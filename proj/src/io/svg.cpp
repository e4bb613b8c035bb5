#include "fes/io/svg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace fes::io {

namespace {

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v, int digits = 2) {
    if (!std::isfinite(v)) return "0";
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, digits);
    return std::string(buf.data(), res.ptr);
}

std::string label(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 4);
    return std::string(buf.data(), res.ptr);
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
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

struct Frame {
    double left, top, width, height;
    double x0, x1, y0, y1;
    bool log_y = false;

    [[nodiscard]] double fy(double v) const { return log_y ? std::log10(std::max(v, 1e-300)) : v; }
    [[nodiscard]] double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
    [[nodiscard]] double py(double y) const { return top + height - (fy(y) - y0) / (y1 - y0) * height; }
};

void header(std::ostringstream& os, int w, int h) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 "
       << w << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void axes(std::ostringstream& os, const Frame& f, const std::string& title, const std::string& xl,
          const std::string& yl) {
    os << "<rect x=\"" << num(f.left) << "\" y=\"" << num(f.top) << "\" width=\"" << num(f.width) << "\" height=\""
       << num(f.height) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (double t : nice_ticks(f.x0, f.x1)) {
        const double x = f.px(t);
        os << "<line x1=\"" << num(x) << "\" y1=\"" << num(f.top + f.height) << "\" x2=\"" << num(x) << "\" y2=\""
           << num(f.top + f.height + 5) << "\" stroke=\"#333\"/>\n";
        os << "<text x=\"" << num(x) << "\" y=\"" << num(f.top + f.height + 18) << "\" text-anchor=\"middle\">"
           << label(t) << "</text>\n";
    }
    for (double t : nice_ticks(f.y0, f.y1)) {
        const double y = f.top + f.height - (t - f.y0) / (f.y1 - f.y0) * f.height;
        os << "<line x1=\"" << num(f.left - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(f.left + f.width)
           << "\" y2=\"" << num(y) << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << num(f.left - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
           << (f.log_y ? "1e" + label(t) : label(t)) << "</text>\n";
    }
    os << "<text x=\"" << num(f.left + f.width / 2) << "\" y=\"" << num(f.top - 12)
       << "\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
    os << "<text x=\"" << num(f.left + f.width / 2) << "\" y=\"" << num(f.top + f.height + 38)
       << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n";
    os << "<text transform=\"translate(" << num(f.left - 52) << ',' << num(f.top + f.height / 2)
       << ") rotate(-90)\" text-anchor=\"middle\">" << escape(yl) << "</text>\n";
}

// Blue (small rho) to red (large rho), saturating at rho = 2.
std::string heat(double rho) {
    const double s = std::clamp(std::isfinite(rho) ? rho / 2.0 : 1.0, 0.0, 1.0);
    const int r = static_cast<int>(40 + 215 * s);
    const int g = static_cast<int>(90 + 120 * (1.0 - std::abs(2.0 * s - 1.0)));
    const int b = static_cast<int>(40 + 215 * (1.0 - s));
    std::ostringstream os;
    os << "rgb(" << r << ',' << g << ',' << b << ')';
    return os.str();
}

}  // namespace

std::vector<double> nice_ticks(double lo, double hi, int target) {
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) return {lo};
    const double raw = (hi - lo) / std::max(target, 1);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
        ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    }
    return ticks;
}

std::string LinePlot::render(int w, int h) const {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto fy = [this](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0.0)) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, fy(s.y[i]));
            y1 = std::max(y1, fy(s.y[i]));
        }
    }
    if (band) {
        y0 = std::min(y0, fy(band->lo));
        y1 = std::max(y1, fy(band->hi));
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 <= x0) x1 = x0 + 1.0;
    if (y1 <= y0) y1 = y0 + 1.0;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    Frame f{70.0, 40.0, w - 230.0, h - 100.0, x0, x1, y0, y1, log_y};
    if (equal_aspect) {
        const double sx = f.width / (x1 - x0), sy = f.height / (y1 - y0), s = std::min(sx, sy);
        const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
        f.x0 = cx - 0.5 * f.width / s;
        f.x1 = cx + 0.5 * f.width / s;
        f.y0 = cy - 0.5 * f.height / s;
        f.y1 = cy + 0.5 * f.height / s;
    }

    std::ostringstream os;
    header(os, w, h);
    if (band) {
        const double ya = f.py(band->hi), yb = f.py(band->lo);
        os << "<rect x=\"" << num(f.left) << "\" y=\"" << num(ya) << "\" width=\"" << num(f.width) << "\" height=\""
           << num(yb - ya) << "\" fill=\"#2ca02c\" fill-opacity=\"0.12\"/>\n";
    }
    axes(os, f, title, x_label, y_label);
    os << "<clipPath id=\"plot\"><rect x=\"" << num(f.left) << "\" y=\"" << num(f.top) << "\" width=\""
       << num(f.width) << "\" height=\"" << num(f.height) << "\"/></clipPath>\n<g clip-path=\"url(#plot)\">\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const std::string color = s.color.empty() ? kPalette[k % kPalette.size()] : s.color;
        if (s.markers) {
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                os << "<circle cx=\"" << num(f.px(s.x[i])) << "\" cy=\"" << num(f.py(s.y[i])) << "\" r=\"4\" fill=\""
                   << color << "\"/>\n";
            }
            continue;
        }
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
           << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0.0)) continue;
            os << num(f.px(s.x[i])) << ',' << num(f.py(s.y[i])) << ' ';
        }
        os << "\"/>\n";
    }
    os << "</g>\n";
    double ly = f.top + 10;
    const double lx = f.left + f.width + 15;
    if (band && !band->label.empty()) {
        os << "<rect x=\"" << num(lx) << "\" y=\"" << num(ly - 8) << "\" width=\"18\" height=\"10\" fill=\"#2ca02c\" "
           << "fill-opacity=\"0.25\"/><text x=\"" << num(lx + 24) << "\" y=\"" << num(ly + 1) << "\">"
           << escape(band->label) << "</text>\n";
        ly += 18;
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        if (s.name.empty()) continue;
        const std::string color = s.color.empty() ? kPalette[k % kPalette.size()] : s.color;
        os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 3) << "\" x2=\"" << num(lx + 18) << "\" y2=\""
           << num(ly - 3) << "\" stroke=\"" << color << "\" stroke-width=\"" << (s.markers ? 6 : 2) << "\""
           << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>";
        os << "<text x=\"" << num(lx + 24) << "\" y=\"" << num(ly + 1) << "\">" << escape(s.name) << "</text>\n";
        ly += 18;
    }
    os << "</svg>\n";
    return os.str();
}

std::string RegionMap::render(int w, int h) const {
    const std::size_t nt = tau.size(), ne = eps.size();
    std::ostringstream os;
    header(os, w, h);
    if (nt == 0 || ne == 0) {
        os << "</svg>\n";
        return os.str();
    }
    Frame f{70.0, 40.0, w - 230.0, h - 100.0, 0.0, static_cast<double>(nt), 0.0, static_cast<double>(ne)};
    const double cw = f.width / nt, ch = f.height / ne;
    for (std::size_t i = 0; i < nt; ++i) {
        for (std::size_t j = 0; j < ne; ++j) {
            const std::size_t idx = i * ne + j;
            const double x = f.left + i * cw, y = f.top + f.height - (j + 1) * ch;
            os << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cw) << "\" height=\""
               << num(ch) << "\" fill=\"" << heat(rho[idx]) << "\"";
            if (certified[idx]) os << " stroke=\"black\" stroke-width=\"1.5\"";
            os << "><title>tau=" << label(tau[i]) << " eps=" << label(eps[j]) << " rho=" << label(rho[idx])
               << "</title></rect>\n";
            if (!diverged.empty() && diverged[idx]) {
                const double m = 0.25 * std::min(cw, ch);
                const double cx = x + cw / 2, cy = y + ch / 2;
                os << "<path d=\"M" << num(cx - m) << ' ' << num(cy - m) << " L" << num(cx + m) << ' ' << num(cy + m)
                   << " M" << num(cx - m) << ' ' << num(cy + m) << " L" << num(cx + m) << ' ' << num(cy - m)
                   << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
            }
        }
    }
    os << "<rect x=\"" << num(f.left) << "\" y=\"" << num(f.top) << "\" width=\"" << num(f.width) << "\" height=\""
       << num(f.height) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    const std::size_t xstep = std::max<std::size_t>(1, nt / 8), ystep = std::max<std::size_t>(1, ne / 8);
    for (std::size_t i = 0; i < nt; i += xstep) {
        os << "<text x=\"" << num(f.left + (i + 0.5) * cw) << "\" y=\"" << num(f.top + f.height + 18)
           << "\" text-anchor=\"middle\">" << label(tau[i]) << "</text>\n";
    }
    for (std::size_t j = 0; j < ne; j += ystep) {
        os << "<text x=\"" << num(f.left - 8) << "\" y=\"" << num(f.top + f.height - (j + 0.5) * ch + 4)
           << "\" text-anchor=\"end\">" << label(eps[j]) << "</text>\n";
    }
    os << "<text x=\"" << num(f.left + f.width / 2) << "\" y=\"" << num(f.top - 12)
       << "\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
    os << "<text x=\"" << num(f.left + f.width / 2) << "\" y=\"" << num(f.top + f.height + 38)
       << "\" text-anchor=\"middle\">sampling period tau</text>\n";
    os << "<text transform=\"translate(" << num(f.left - 52) << ',' << num(f.top + f.height / 2)
       << ") rotate(-90)\" text-anchor=\"middle\">relaxation eps</text>\n";

    const double lx = f.left + f.width + 15;
    double ly = f.top + 10;
    for (double r : {0.0, 0.5, 1.0, 1.5, 2.0}) {
        os << "<rect x=\"" << num(lx) << "\" y=\"" << num(ly - 9) << "\" width=\"18\" height=\"12\" fill=\"" << heat(r)
           << "\"/><text x=\"" << num(lx + 24) << "\" y=\"" << num(ly + 1) << "\">rho = " << label(r)
           << (r == 2.0 ? "+" : "") << "</text>\n";
        ly += 18;
    }
    os << "<rect x=\"" << num(lx) << "\" y=\"" << num(ly - 9) << "\" width=\"18\" height=\"12\" fill=\"none\" "
       << "stroke=\"black\" stroke-width=\"1.5\"/><text x=\"" << num(lx + 24) << "\" y=\"" << num(ly + 1)
       << "\">certified</text>\n";
    if (!diverged.empty()) {
        ly += 18;
        os << "<text x=\"" << num(lx + 2) << "\" y=\"" << num(ly + 1) << "\" font-weight=\"bold\">x</text><text x=\""
           << num(lx + 24) << "\" y=\"" << num(ly + 1) << "\">diverged</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace fes::io
