#include "fdm/svg.hpp"

#include <algorithm>
#include <cmath>

#include "fdm/csv.hpp"

namespace fdm {
namespace {

constexpr int kMarginL = 64, kMarginR = 16, kMarginT = 40, kMarginB = 48;

std::string esc(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

struct Range {
    double lo = 0.0, hi = 1.0;

    void expand(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (hi - lo < 1e-12) {
            lo -= 1.0;
            hi += 1.0;
        }
    }
    double frac(double v) const { return (v - lo) / (hi - lo); }
};

void open_svg(std::string& out, int width, int height) {
    append_format(out,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                  "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\" font-size=\"11\">\n",
                  width, height, width, height);
    append_format(out, "<rect width=\"%d\" height=\"%d\" fill=\"#ffffff\"/>\n", width, height);
}

void draw_frame(std::string& out, const std::string& title, const std::string& x_label,
                const std::string& y_label, const Range& xr, const Range& yr, int width,
                int height, bool x_ticks) {
    const int x0 = kMarginL, x1 = width - kMarginR;
    const int y0 = height - kMarginB, y1 = kMarginT;
    append_format(out, "<text x=\"%d\" y=\"20\" font-size=\"14\">%s</text>\n", kMarginL,
                  esc(title).c_str());
    for (int i = 0; i <= 4; ++i) {
        const double f = i / 4.0;
        const double py = y0 + (y1 - y0) * f;
        append_format(out,
                      "<line x1=\"%d\" y1=\"%.2f\" x2=\"%d\" y2=\"%.2f\" stroke=\"#dddddd\"/>\n",
                      x0, py, x1, py);
        append_format(out, "<text x=\"%d\" y=\"%.2f\" text-anchor=\"end\">%.3g</text>\n", x0 - 6,
                      py + 4.0, yr.lo + f * (yr.hi - yr.lo));
        if (x_ticks) {
            const double px = x0 + (x1 - x0) * f;
            append_format(out, "<text x=\"%.2f\" y=\"%d\" text-anchor=\"middle\">%.3g</text>\n", px,
                          y0 + 16, xr.lo + f * (xr.hi - xr.lo));
        }
    }
    append_format(out, "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"#000000\"/>\n", x0,
                  y0, x1, y0);
    append_format(out, "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"#000000\"/>\n", x0,
                  y0, x0, y1);
    append_format(out, "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">%s</text>\n", (x0 + x1) / 2,
                  height - 10, esc(x_label).c_str());
    append_format(out,
                  "<text x=\"14\" y=\"%d\" text-anchor=\"middle\" transform=\"rotate(-90 14 %d)\">"
                  "%s</text>\n",
                  (y0 + y1) / 2, (y0 + y1) / 2, esc(y_label).c_str());
}

}  // namespace

const std::string& svg_color(std::size_t index) {
    static const std::string palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
    return palette[index % 8];
}

std::string svg_line_chart(const std::vector<SvgSeries>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label, int width,
                           int height) {
    Range xr{1e300, -1e300}, yr{1e300, -1e300};
    bool any = false;
    for (const auto& s : series)
        for (const auto& p : s.points) {
            xr.expand(p[0]);
            yr.expand(p[1]);
            any = true;
        }
    if (!any) xr = yr = Range{0.0, 1.0};
    xr.pad();
    yr.pad();

    const int x0 = kMarginL, x1 = width - kMarginR;
    const int y0 = height - kMarginB, y1 = kMarginT;
    std::string out;
    open_svg(out, width, height);
    draw_frame(out, title, x_label, y_label, xr, yr, width, height, true);
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        if (s.points.empty()) continue;
        append_format(out, "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\" points=\"",
                      s.color.c_str());
        for (const auto& p : s.points)
            append_format(out, "%.2f,%.2f ", x0 + (x1 - x0) * xr.frac(p[0]),
                          y0 + (y1 - y0) * yr.frac(p[1]));
        out += "\"/>\n";
    }
    for (std::size_t si = 0; si < series.size(); ++si) {
        const double ly = y1 + 12.0 + 14.0 * static_cast<double>(si);
        append_format(out,
                      "<line x1=\"%d\" y1=\"%.2f\" x2=\"%d\" y2=\"%.2f\" stroke=\"%s\" "
                      "stroke-width=\"2\"/>\n",
                      x1 - 150, ly - 4.0, x1 - 130, ly - 4.0, series[si].color.c_str());
        append_format(out, "<text x=\"%d\" y=\"%.2f\">%s</text>\n", x1 - 124, ly,
                      esc(series[si].label).c_str());
    }
    out += "</svg>\n";
    return out;
}

std::string svg_box_plot(const std::vector<SvgBox>& boxes, const std::string& title,
                         const std::string& y_label, int width, int height) {
    Range yr{1e300, -1e300};
    for (const auto& b : boxes) {
        yr.expand(b.q5);
        yr.expand(b.q95);
    }
    if (boxes.empty()) yr = Range{0.0, 1.0};
    yr.pad();

    const int x0 = kMarginL, x1 = width - kMarginR;
    const int y0 = height - kMarginB, y1 = kMarginT;
    std::string out;
    open_svg(out, width, height);
    draw_frame(out, title, "", y_label, Range{0.0, 1.0}, yr, width, height, false);
    const double slot = (x1 - x0) / std::max<double>(1.0, static_cast<double>(boxes.size()));
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& b = boxes[i];
        const double cx = x0 + slot * (static_cast<double>(i) + 0.5);
        const double half = std::min(slot * 0.3, 28.0);
        auto py = [&](double v) { return y0 + (y1 - y0) * yr.frac(v); };
        append_format(out,
                      "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                      "stroke=\"#000000\"/>\n",
                      cx, py(b.q5), cx, py(b.q95));
        for (double q : {b.q5, b.q95})
            append_format(out,
                          "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                          "stroke=\"#000000\"/>\n",
                          cx - half * 0.5, py(q), cx + half * 0.5, py(q));
        append_format(out,
                      "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                      "fill=\"#aec7e8\" stroke=\"#1f77b4\"/>\n",
                      cx - half, py(b.q75), 2.0 * half, py(b.q25) - py(b.q75));
        append_format(out,
                      "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#d62728\" "
                      "stroke-width=\"2\"/>\n",
                      cx - half, py(b.q50), cx + half, py(b.q50));
        append_format(out, "<text x=\"%.2f\" y=\"%d\" text-anchor=\"middle\">%s</text>\n", cx,
                      y0 + 16, esc(b.label).c_str());
    }
    out += "</svg>\n";
    return out;
}

std::string svg_path_overlay(const TerrainGrid& grid, const std::vector<SvgSeries>& paths,
                             const std::string& title, int width) {
    const double scale = (width - 2.0) / std::max(grid.width(), 1e-9);
    const int map_h = static_cast<int>(std::lround(scale * grid.height_extent()));
    const int height = map_h + 30;
    float lo = 0.0f, hi = 0.0f;
    for (float h : grid.heights) {
        lo = std::min(lo, h);
        hi = std::max(hi, h);
    }
    const float span = std::max(hi - lo, 1e-6f);

    std::string out;
    open_svg(out, width, height);
    append_format(out, "<text x=\"8\" y=\"18\" font-size=\"14\">%s</text>\n", esc(title).c_str());
    append_format(out, "<g transform=\"translate(1 26)\">\n");
    auto shade = [&](float h) { return 230 - static_cast<int>(140.0f * (h - lo) / span); };
    for (int iy = 0; iy < grid.H; ++iy) {
        int run_start = 0;
        int run_shade = shade(static_cast<float>(grid.h(0, iy)));
        auto flush = [&](int end_ix) {
            const double px = run_start * grid.cell_size * scale;
            const double pw = (end_ix - run_start) * grid.cell_size * scale;
            const double py = map_h - (iy + 1) * grid.cell_size * scale;
            append_format(out,
                          "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                          "fill=\"rgb(%d,%d,%d)\"/>\n",
                          px, py, pw, grid.cell_size * scale + 0.5, run_shade, run_shade,
                          run_shade);
        };
        for (int ix = 1; ix < grid.W; ++ix) {
            const int s = shade(static_cast<float>(grid.h(ix, iy)));
            if (s != run_shade) {
                flush(ix);
                run_start = ix;
                run_shade = s;
            }
        }
        flush(grid.W);
    }
    auto px = [&](double x) { return x * scale; };
    auto py = [&](double y) { return map_h - y * scale; };
    for (const auto& p : paths) {
        if (p.points.empty()) continue;
        append_format(out, "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"2\" points=\"",
                      p.color.c_str());
        for (const auto& pt : p.points) append_format(out, "%.2f,%.2f ", px(pt[0]), py(pt[1]));
        out += "\"/>\n";
        append_format(out, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"%s\"/>\n",
                      px(p.points.front()[0]), py(p.points.front()[1]), p.color.c_str());
        append_format(out,
                      "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"5\" fill=\"none\" stroke=\"%s\" "
                      "stroke-width=\"2\"/>\n",
                      px(p.points.back()[0]), py(p.points.back()[1]), p.color.c_str());
    }
    out += "</g>\n</svg>\n";
    return out;
}

}  // namespace fdm
