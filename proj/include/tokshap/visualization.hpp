#pragma once

#include <string>

#include "tokshap/shapley.hpp"

namespace tokshap {

struct Rgb {
    int r = 0;
    int g = 0;
    int b = 0;

    bool operator==(const Rgb&) const = default;
};

// Diverging blue-white-red scale; the midpoint renders a signed value of 0.
struct ColorScale {
    Rgb negative_anchor{59, 76, 192};
    Rgb midpoint{242, 242, 242};
    Rgb positive_anchor{180, 4, 38};
};

// Linear per-channel interpolation for value in [-1, 1]: negative values
// between negative_anchor and midpoint, positive between midpoint and
// positive_anchor. Callers scale phi by max|phi| first.
Rgb color_for(double value, const ColorScale& scale = {});

struct AnsiOptions {
    int width = 80;     // wrap column
    bool color = true;  // false renders plain text (for --no-color / pipes)
};

// Terminal heatmap: each unit on a 24-bit background, one combined SGR set
// plus one reset per unit, black or white foreground by background luminance.
std::string render_ansi(const AttributionResult& result, const AnsiOptions& opts = {});

// Self-contained HTML document (inline styles only): one span per unit with
// the unit's color and a phi tooltip, plus a run-metadata footer. Output is
// byte-stable for identical results.
std::string render_html_string(const AttributionResult& result);

// Writes render_html_string to out_path. Throws IoError.
void render_html(const AttributionResult& result, const std::string& out_path);

}  // namespace tokshap
