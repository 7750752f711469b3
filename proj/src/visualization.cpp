#include "tokshap/visualization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tokshap/errors.hpp"

namespace tokshap {
namespace {

int lerp_channel(int from, int to, double t) {
    return static_cast<int>(std::lround(from + (to - from) * t));
}

Rgb lerp(const Rgb& from, const Rgb& to, double t) {
    return {lerp_channel(from.r, to.r, t), lerp_channel(from.g, to.g, t),
            lerp_channel(from.b, to.b, t)};
}

// Weighted sRGB luminance in [0,1]; decides black vs white foreground.
double luminance(const Rgb& c) {
    return (0.2126 * c.r + 0.7152 * c.g + 0.0722 * c.b) / 255.0;
}

// Signed scale values phi/max|phi|; all zeros map everything to the midpoint.
std::vector<double> scaled_values(const std::vector<double>& phi) {
    double max_abs = 0.0;
    for (double v : phi) max_abs = std::max(max_abs, std::fabs(v));
    std::vector<double> out(phi.size(), 0.0);
    if (max_abs == 0.0) return out;
    for (std::size_t i = 0; i < phi.size(); ++i) out[i] = phi[i] / max_abs;
    return out;
}

std::string html_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&#39;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

}  // namespace

Rgb color_for(double value, const ColorScale& scale) {
    const double v = std::clamp(value, -1.0, 1.0);
    if (v < 0.0) return lerp(scale.midpoint, scale.negative_anchor, -v);
    return lerp(scale.midpoint, scale.positive_anchor, v);
}

std::string render_ansi(const AttributionResult& result, const AnsiOptions& opts) {
    const ColorScale scale;
    const std::vector<double> values = scaled_values(result.phi_raw);

    std::string out;
    int column = 0;
    for (std::size_t i = 0; i < result.units.units.size(); ++i) {
        const std::string& unit = result.units.units[i];
        const int cell = static_cast<int>(unit.size());
        if (column > 0 && column + 1 + cell > opts.width) {
            out += '\n';
            column = 0;
        }
        if (column > 0) {
            out += ' ';
            ++column;
        }
        if (opts.color) {
            const Rgb bg = color_for(values[i], scale);
            const bool dark_text = luminance(bg) > 0.5;
            const int fg = dark_text ? 0 : 255;
            char sgr[64];
            std::snprintf(sgr, sizeof(sgr), "\x1b[38;2;%d;%d;%d;48;2;%d;%d;%dm", fg, fg, fg,
                          bg.r, bg.g, bg.b);
            out += sgr;
            out += unit;
            out += "\x1b[0m";
        } else {
            out += unit;
        }
        column += cell;
    }
    out += '\n';
    return out;
}

std::string render_html_string(const AttributionResult& result) {
    const ColorScale scale;
    const std::vector<double> values = scaled_values(result.phi_raw);

    std::string body;
    for (std::size_t i = 0; i < result.units.units.size(); ++i) {
        const Rgb bg = color_for(values[i], scale);
        const char* fg = luminance(bg) > 0.5 ? "#000000" : "#ffffff";
        body += "<span class=\"unit\" style=\"background-color:rgb(" + std::to_string(bg.r) +
                "," + std::to_string(bg.g) + "," + std::to_string(bg.b) + ");color:" + fg +
                ";padding:2px 4px;margin:1px;border-radius:3px;display:inline-block\" "
                "title=\"phi=" + format_fixed(result.phi_norm[i], 4) + "\">";
        body += html_escape(result.units.units[i]);
        body += "</span>\n";
    }

    std::string html;
    html += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
    html += "<title>Prompt attribution</title>\n</head>\n";
    html += "<body style=\"font-family:monospace;font-size:16px;background:#ffffff;"
            "color:#222222;max-width:60em;margin:2em auto\">\n";
    html += "<h1 style=\"font-size:18px\">Prompt attribution heatmap</h1>\n";
    html += "<p style=\"line-height:2.2\">\n" + body + "</p>\n";
    html += "<hr style=\"border:none;border-top:1px solid #cccccc\">\n";
    html += "<p style=\"font-size:12px;color:#666666\">backend=" +
            html_escape(result.meta.backend_id) +
            " | normalization=" + to_string(result.normalization) +
            " | ratio=" + format_fixed(result.meta.ratio, 3) +
            " | seed=" + std::to_string(result.meta.seed) +
            " | plan_size=" + std::to_string(result.meta.plan_size) +
            " | model_calls=" + std::to_string(result.meta.model_calls) + "</p>\n";
    html += "</body>\n</html>\n";
    return html;
}

void render_html(const AttributionResult& result, const std::string& out_path) {
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + out_path);
    out << render_html_string(result);
    if (!out) throw IoError("write failed: " + out_path);
}

}  // namespace tokshap
