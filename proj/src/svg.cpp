#include "funscreen/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "funscreen/csv.hpp"

namespace funscreen {

namespace {

constexpr double kWidth = 800.0, kHeight = 520.0;
constexpr double kLeft = 70.0, kRight = 770.0, kTop = 50.0, kBottom = 460.0;

const char* kPalette[] = {"#1f6fb2", "#c23b22", "#2e8b57", "#8e5ba6", "#b8860b", "#444444"};

std::string escape_text(const std::string& s) {
    std::string out;
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

// XML comments must not contain "--"; labels are the only free text embedded.
std::string comment_safe(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '-' && !out.empty() && out.back() == '-') out += ' ';
        out += c;
    }
    return out;
}

std::string style_word(const std::string& dash) {
    if (dash.empty()) return "solid";
    if (dash == "8,4") return "dashed";
    if (dash == "2,3") return "dotted";
    return "dash " + dash;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_text(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

double nice_step(double span) {
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    if (norm < 1.5) return mag;
    if (norm < 3.5) return 2.0 * mag;
    if (norm < 7.5) return 5.0 * mag;
    return 10.0 * mag;
}

}  // namespace

bool write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series) {
    try {
        double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
        bool any = false;
        for (const auto& s : series) {
            const std::size_t n = std::min(s.x.size(), s.y.size());
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                if (!any) {
                    x_lo = x_hi = s.x[i];
                    y_lo = y_hi = s.y[i];
                    any = true;
                } else {
                    x_lo = std::min(x_lo, s.x[i]);
                    x_hi = std::max(x_hi, s.x[i]);
                    y_lo = std::min(y_lo, s.y[i]);
                    y_hi = std::max(y_hi, s.y[i]);
                }
            }
        }
        if (!any) {
            x_lo = y_lo = 0.0;
            x_hi = y_hi = 1.0;
        }
        if (x_hi <= x_lo) {
            x_lo -= 0.5;
            x_hi += 0.5;
        }
        if (y_hi <= y_lo) {
            y_lo -= 0.5;
            y_hi += 0.5;
        }
        const auto map_x = [&](double v) {
            return kLeft + (v - x_lo) / (x_hi - x_lo) * (kRight - kLeft);
        };
        const auto map_y = [&](double v) {
            return kBottom - (v - y_lo) / (y_hi - y_lo) * (kBottom - kTop);
        };

        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) return false;

        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
            << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";

        out << "<!-- data\n";
        for (const auto& s : series) {
            out << "series: " << comment_safe(s.label) << "\n";
            out << "x,y\n";
            const std::size_t n = std::min(s.x.size(), s.y.size());
            for (std::size_t i = 0; i < n; ++i)
                out << format_double(s.x[i]) << ',' << format_double(s.y[i]) << "\n";
        }
        out << "-->\n";

        out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
            << "\" fill=\"white\"/>\n";
        out << "<text x=\"" << px(kWidth / 2) << "\" y=\"28\" font-size=\"18\" "
               "text-anchor=\"middle\" font-family=\"sans-serif\">"
            << escape_text(title) << "</text>\n";

        // Frame and ticks.
        out << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\""
            << px(kRight - kLeft) << "\" height=\"" << px(kBottom - kTop)
            << "\" fill=\"none\" stroke=\"#333\"/>\n";
        const double xs = nice_step(x_hi - x_lo);
        for (double v = std::ceil(x_lo / xs) * xs; v <= x_hi + 1e-9 * xs; v += xs) {
            const double gx = map_x(v);
            out << "<line x1=\"" << px(gx) << "\" y1=\"" << px(kBottom) << "\" x2=\"" << px(gx)
                << "\" y2=\"" << px(kBottom + 5) << "\" stroke=\"#333\"/>\n";
            out << "<text x=\"" << px(gx) << "\" y=\"" << px(kBottom + 20)
                << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">"
                << tick_text(v) << "</text>\n";
        }
        const double ys = nice_step(y_hi - y_lo);
        for (double v = std::ceil(y_lo / ys) * ys; v <= y_hi + 1e-9 * ys; v += ys) {
            const double gy = map_y(v);
            out << "<line x1=\"" << px(kLeft - 5) << "\" y1=\"" << px(gy) << "\" x2=\""
                << px(kLeft) << "\" y2=\"" << px(gy) << "\" stroke=\"#333\"/>\n";
            out << "<text x=\"" << px(kLeft - 8) << "\" y=\"" << px(gy + 4)
                << "\" font-size=\"12\" text-anchor=\"end\" font-family=\"sans-serif\">"
                << tick_text(v) << "</text>\n";
        }
        out << "<text x=\"" << px((kLeft + kRight) / 2) << "\" y=\"" << px(kHeight - 15)
            << "\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\">"
            << escape_text(x_label) << "</text>\n";
        out << "<text x=\"20\" y=\"" << px((kTop + kBottom) / 2)
            << "\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "transform=\"rotate(-90 20 "
            << px((kTop + kBottom) / 2) << ")\">" << escape_text(y_label) << "</text>\n";

        // Series, clipped NaN runs into separate polylines.
        for (std::size_t si = 0; si < series.size(); ++si) {
            const auto& s = series[si];
            const std::string color =
                s.color.empty() ? kPalette[si % (sizeof kPalette / sizeof *kPalette)] : s.color;
            const std::string dash_attr =
                s.dash.empty() ? "" : " stroke-dasharray=\"" + s.dash + "\"";
            std::vector<std::pair<double, double>> run;
            const auto flush = [&]() {
                if (run.size() >= 2) {
                    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
                        << dash_attr << " points=\"";
                    for (std::size_t i = 0; i < run.size(); ++i) {
                        if (i) out << ' ';
                        out << px(run[i].first) << ',' << px(run[i].second);
                    }
                    out << "\"/>\n";
                } else if (run.size() == 1) {
                    out << "<circle cx=\"" << px(run[0].first) << "\" cy=\"" << px(run[0].second)
                        << "\" r=\"2\" fill=\"" << color << "\"/>\n";
                }
                run.clear();
            };
            const std::size_t n = std::min(s.x.size(), s.y.size());
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                    flush();
                    continue;
                }
                run.push_back({map_x(s.x[i]), map_y(s.y[i])});
            }
            flush();
        }

        // Legend, top-right inside the frame.
        for (std::size_t si = 0; si < series.size(); ++si) {
            const auto& s = series[si];
            const std::string color =
                s.color.empty() ? kPalette[si % (sizeof kPalette / sizeof *kPalette)] : s.color;
            const double ly = kTop + 18 + 18 * static_cast<double>(si);
            out << "<line x1=\"" << px(kRight - 190) << "\" y1=\"" << px(ly) << "\" x2=\""
                << px(kRight - 160) << "\" y2=\"" << px(ly) << "\" stroke=\"" << color
                << "\" stroke-width=\"1.5\""
                << (s.dash.empty() ? "" : " stroke-dasharray=\"" + s.dash + "\"") << "/>\n";
            out << "<text x=\"" << px(kRight - 152) << "\" y=\"" << px(ly + 4)
                << "\" font-size=\"12\" font-family=\"sans-serif\">"
                << escape_text(s.label + " (" + style_word(s.dash) + ")") << "</text>\n";
        }

        out << "</svg>\n";
        out.flush();
        return out.good();
    } catch (...) {
        return false;
    }
}

}  // namespace funscreen
