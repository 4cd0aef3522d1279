#include "guidance_lab/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace guidance_lab {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 600.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;  // legend column
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// 1, 2 or 5 times a power of ten.
double nice_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

struct Axis {
    double lo;
    double hi;
    double step;
};

Axis make_axis(double lo, double hi) {
    if (!(lo <= hi)) {
        lo = -1.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-12) {
        const double pad = std::max(1.0, std::abs(lo)) * 0.5;
        lo -= pad;
        hi += pad;
    }
    const double step = nice_step(hi - lo, 5);
    return {std::floor(lo / step) * step, std::ceil(hi / step) * step, step};
}

std::string tick_label(double v, double step) {
    if (std::abs(v) < step * 1e-9) v = 0.0;
    const int decimals = std::max(0, -static_cast<int>(std::floor(std::log10(step))));
    return fmt::format("{:.{}f}", v, decimals);
}

class Canvas {
public:
    Canvas(const std::vector<Series>& series, const ChartLabels& labels) {
        double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
        for (const auto& s : series) {
            for (const auto& [x, y] : s.points) {
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                xlo = std::min(xlo, x);
                xhi = std::max(xhi, x);
                ylo = std::min(ylo, y);
                yhi = std::max(yhi, y);
            }
        }
        xa_ = make_axis(xlo, xhi);
        ya_ = make_axis(ylo, yhi);

        out_ += fmt::format(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n", kWidth,
            kHeight);
        out_ += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", kWidth, kHeight);
        out_ += fmt::format("<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
                            kLeft + plot_w() / 2, escape(labels.title));
        axes(labels);
    }

    double px(double x) const { return kLeft + (x - xa_.lo) / (xa_.hi - xa_.lo) * plot_w(); }
    double py(double y) const { return kTop + (ya_.hi - y) / (ya_.hi - ya_.lo) * plot_h(); }

    void add(const std::string& s) { out_ += s; }

    void legend(std::size_t i, const std::string& label) {
        const double y = kTop + 10.0 + 20.0 * static_cast<double>(i);
        const double x = kWidth - kRight + 15.0;
        out_ += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"{}\"/>\n", x, y, color(i));
        out_ += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
                            x + 10.0, y + 4.0, escape(label));
    }

    static const char* color(std::size_t i) { return kPalette[i % kPalette.size()]; }

    std::string finish() { return out_ + "</svg>\n"; }

private:
    static double plot_w() { return kWidth - kLeft - kRight; }
    static double plot_h() { return kHeight - kTop - kBottom; }

    void axes(const ChartLabels& labels) {
        const double x0 = kLeft, x1 = kLeft + plot_w(), y0 = kTop + plot_h(), y1 = kTop;
        out_ += fmt::format("<g stroke=\"#000000\" stroke-width=\"1\">\n<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\"/>\n"
                            "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{3:.2f}\"/>\n",
                            x0, y0, x1, y1);
        for (double v = xa_.lo; v <= xa_.hi + xa_.step * 1e-9; v += xa_.step) {
            out_ += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\"/>\n", px(v), y0, y0 + 5);
        }
        for (double v = ya_.lo; v <= ya_.hi + ya_.step * 1e-9; v += ya_.step) {
            out_ += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\"/>\n", x0 - 5, py(v), x0);
        }
        out_ += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
        for (double v = xa_.lo; v <= xa_.hi + xa_.step * 1e-9; v += xa_.step) {
            out_ += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", px(v), y0 + 18,
                                tick_label(v, xa_.step));
        }
        for (double v = ya_.lo; v <= ya_.hi + ya_.step * 1e-9; v += ya_.step) {
            out_ += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", x0 - 8, py(v) + 4,
                                tick_label(v, ya_.step));
        }
        out_ += "</g>\n";
        out_ += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
                            kLeft + plot_w() / 2, kHeight - 15.0, escape(labels.x));
        out_ += fmt::format("<text x=\"18\" y=\"{0:.2f}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
                            "transform=\"rotate(-90 18 {0:.2f})\">{1}</text>\n",
                            kTop + plot_h() / 2, escape(labels.y));
    }

    Axis xa_{};
    Axis ya_{};
    std::string out_;
};

}  // namespace

std::string svg_scatter(const std::vector<Series>& series, const ChartLabels& labels) {
    Canvas c(series, labels);
    for (std::size_t i = 0; i < series.size(); ++i) {
        c.add(fmt::format("<g fill=\"{}\" fill-opacity=\"0.7\">\n", Canvas::color(i)));
        for (const auto& [x, y] : series[i].points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            c.add(fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2\"/>\n", c.px(x), c.py(y)));
        }
        c.add("</g>\n");
        c.legend(i, series[i].label);
    }
    return c.finish();
}

std::string svg_lines(const std::vector<Series>& series, const ChartLabels& labels) {
    Canvas c(series, labels);
    for (std::size_t i = 0; i < series.size(); ++i) {
        auto pts = series[i].points;
        std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::string coords;
        for (const auto& [x, y] : pts) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            coords += fmt::format("{}{:.2f},{:.2f}", coords.empty() ? "" : " ", c.px(x), c.py(y));
        }
        c.add(fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
                          Canvas::color(i), coords));
        c.add(fmt::format("<g fill=\"{}\">\n", Canvas::color(i)));
        for (const auto& [x, y] : pts) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            c.add(fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2\"/>\n", c.px(x), c.py(y)));
        }
        c.add("</g>\n");
        c.legend(i, series[i].label);
    }
    return c.finish();
}

}  // namespace guidance_lab
