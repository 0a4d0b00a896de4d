#include "frettrace/plotting.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace frettrace {

namespace {

constexpr int kWidth = 640;
constexpr int kPanelHeight = 300;
constexpr int kMarginLeft = 56;
constexpr int kMarginRight = 16;
constexpr int kMarginTop = 36;
constexpr int kMarginBottom = 44;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

void draw_panel(std::ofstream& f, int y_offset, const std::string& title,
                const std::vector<double>& taus,
                const std::vector<std::pair<std::string, std::vector<double>>>& curves) {
    const double tau_min = taus.front();
    const double tau_max = taus.back();
    const int plot_w = kWidth - kMarginLeft - kMarginRight;
    const int plot_h = kPanelHeight - kMarginTop - kMarginBottom;
    const auto x_of = [&](double tau) {
        return kMarginLeft + (tau - tau_min) / (tau_max - tau_min) * plot_w;
    };
    const auto y_of = [&](double f1) { return y_offset + kMarginTop + (1.0 - f1) * plot_h; };

    f << "<text x=\"" << kMarginLeft << "\" y=\"" << y_offset + 20
      << "\" font-size=\"14\" font-family=\"sans-serif\">" << title << "</text>\n";

    // axes and grid
    for (int i = 0; i <= 5; ++i) {
        const double v = i / 5.0;
        const double y = y_of(v);
        f << "<line x1=\"" << kMarginLeft << "\" y1=\"" << y << "\" x2=\""
          << kWidth - kMarginRight << "\" y2=\"" << y
          << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        f << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << y + 4
          << "\" font-size=\"10\" text-anchor=\"end\" font-family=\"sans-serif\">" << fmt(v)
          << "</text>\n";
    }
    for (double tau : taus) {
        const double x = x_of(tau);
        f << "<line x1=\"" << x << "\" y1=\"" << y_offset + kMarginTop << "\" x2=\"" << x
          << "\" y2=\"" << y_offset + kMarginTop + plot_h
          << "\" stroke=\"#eeeeee\" stroke-width=\"1\"/>\n";
        f << "<text x=\"" << x << "\" y=\"" << y_offset + kMarginTop + plot_h + 16
          << "\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\">" << fmt(tau)
          << "</text>\n";
    }
    f << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << y_offset + kPanelHeight - 8
      << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">pitch tolerance "
         "(semitones)</text>\n";

    std::size_t color = 0;
    for (const auto& [label, f1s] : curves) {
        const char* stroke = kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))];
        f << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < taus.size(); ++i) {
            f << x_of(taus[i]) << ',' << y_of(std::clamp(f1s[i], 0.0, 1.0)) << ' ';
        }
        f << "\"/>\n";
        for (std::size_t i = 0; i < taus.size(); ++i) {
            f << "<circle cx=\"" << x_of(taus[i]) << "\" cy=\""
              << y_of(std::clamp(f1s[i], 0.0, 1.0)) << "\" r=\"3\" fill=\"" << stroke
              << "\"/>\n";
        }
        // legend entry
        const double lx = kMarginLeft + 10;
        const double ly = y_offset + kMarginTop + 14 + 16.0 * static_cast<double>(color);
        f << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 22 << "\" y2=\"" << ly
          << "\" stroke=\"" << stroke << "\" stroke-width=\"2\"/>\n";
        f << "<text x=\"" << lx + 28 << "\" y=\"" << ly + 4
          << "\" font-size=\"11\" font-family=\"sans-serif\">" << label << "</text>\n";
        ++color;
    }
}

}  // namespace

void plot_tolerance_curves(const std::vector<std::pair<std::string, ToleranceSweep>>& sweeps,
                           const std::filesystem::path& svg_path) {
    if (sweeps.empty()) {
        throw std::invalid_argument("plot_tolerance_curves: at least one sweep required");
    }
    const std::vector<double>& taus = sweeps.front().second.tolerances;
    for (const auto& [label, sweep] : sweeps) {
        if (sweep.tolerances != taus) {
            throw std::invalid_argument("plot_tolerance_curves: sweeps use different grids");
        }
    }

    std::ofstream f(svg_path);
    if (!f) throw std::runtime_error("cannot write plot: " + svg_path.string());
    const int height = 2 * kPanelHeight;
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << height << "\" viewBox=\"0 0 " << kWidth << ' ' << height << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    std::vector<std::pair<std::string, std::vector<double>>> dep, agn;
    for (const auto& [label, sweep] : sweeps) {
        std::vector<double> d, a;
        for (const PRF& p : sweep.string_dependent) d.push_back(p.f1);
        for (const PRF& p : sweep.string_agnostic) a.push_back(p.f1);
        dep.emplace_back(label, std::move(d));
        agn.emplace_back(label, std::move(a));
    }
    draw_panel(f, 0, "Continuous MPE F1, string-dependent", taus, dep);
    draw_panel(f, kPanelHeight, "Continuous MPE F1, string-agnostic", taus, agn);
    f << "</svg>\n";
}

}  // namespace frettrace
