#include <doctest.h>

#include <fstream>
#include <sstream>

#include "tokshap/visualization.hpp"

using namespace tokshap;

namespace {

AttributionResult fixture_result() {
    AttributionResult result;
    result.units.source = "alpha beta <b>&gamma achtung\"quote";
    result.units.units = {"alpha", "beta", "<b>&gamma", "achtung\"quote"};
    result.units.spans = {{0, 5}, {6, 10}, {11, 20}, {21, 34}};
    result.units.splitter_id = "whitespace";
    result.phi_raw = {0.2, -0.1, 0.0, 0.05};
    result.phi_norm = {0.571429, -0.285714, 0.0, 0.142857};
    result.normalization = Normalization::l1;
    result.baseline_text = "irrelevant";
    result.meta.ratio = 0.5;
    result.meta.seed = 7;
    result.meta.backend_id = "mock:echo";
    result.meta.rng_algorithm = "mt19937_64";
    result.meta.plan_size = 9;
    result.meta.model_calls = 10;
    return result;
}

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

}  // namespace

TEST_CASE("color anchors and midpoint are exact") {
    CHECK(color_for(0.0) == Rgb{242, 242, 242});
    CHECK(color_for(1.0) == Rgb{180, 4, 38});
    CHECK(color_for(-1.0) == Rgb{59, 76, 192});
    CHECK(color_for(0.5) == Rgb{211, 123, 140});  // per-channel midpoint toward red
    // Out-of-range values clamp to the anchors.
    CHECK(color_for(3.0) == Rgb{180, 4, 38});
    CHECK(color_for(-3.0) == Rgb{59, 76, 192});
}

TEST_CASE("color interpolation is monotone per channel and continuous at zero") {
    // Negative half: every channel rises toward the near-white midpoint
    // ((59,76,192) -> (242,242,242)).
    Rgb previous = color_for(-1.0);
    for (int step = 19; step >= 0; --step) {
        const Rgb c = color_for(-0.05 * step);
        CHECK(c.r >= previous.r);
        CHECK(c.g >= previous.g);
        CHECK(c.b >= previous.b);
        previous = c;
    }
    // Positive half: red channel falls 242 -> 180, green falls, blue falls.
    previous = color_for(0.0);
    for (int step = 1; step <= 20; ++step) {
        const Rgb c = color_for(0.05 * step);
        CHECK(c.r <= previous.r);
        CHECK(c.g <= previous.g);
        CHECK(c.b <= previous.b);
        previous = c;
    }
    CHECK(color_for(1e-9) == Rgb{242, 242, 242});
    CHECK(color_for(-1e-9) == Rgb{242, 242, 242});
}

TEST_CASE("ansi rendering emits one set and one reset per unit") {
    const AttributionResult result = fixture_result();
    const std::string out = render_ansi(result, {80, true});
    CHECK(count_occurrences(out, "\x1b[") == 2 * result.units.units.size());
    CHECK(count_occurrences(out, "\x1b[0m") == result.units.units.size());
    // Unit text survives untouched between escapes.
    for (const auto& unit : result.units.units) {
        CHECK(out.find(unit) != std::string::npos);
    }
}

TEST_CASE("ansi rendering without color is the plain text") {
    const AttributionResult result = fixture_result();
    const std::string out = render_ansi(result, {80, false});
    CHECK(out == "alpha beta <b>&gamma achtung\"quote\n");
}

TEST_CASE("ansi rendering wraps at the requested width") {
    AttributionResult result = fixture_result();
    result.units.units = {"aaaa", "bbbb", "cccc", "dddd"};
    result.phi_raw = {0.1, 0.2, 0.3, 0.4};
    result.phi_norm = result.phi_raw;
    const std::string out = render_ansi(result, {9, false});
    CHECK(out == "aaaa bbbb\ncccc dddd\n");
}

TEST_CASE("all-zero phi renders every unit on the midpoint background") {
    AttributionResult result = fixture_result();
    result.phi_raw = {0.0, 0.0, 0.0, 0.0};
    const std::string out = render_ansi(result, {80, true});
    CHECK(count_occurrences(out, "48;2;242;242;242m") == result.units.units.size());
}

TEST_CASE("the unit with the largest phi gets the reddest background") {
    const AttributionResult result = fixture_result();  // max phi at unit 1
    const std::string out = render_ansi(result, {80, true});
    CHECK(out.find("48;2;180;4;38m") != std::string::npos);
    CHECK(out.find("48;2;180;4;38malpha") != std::string::npos);
}

TEST_CASE("html rendering: span per unit, escaping, tooltips") {
    const AttributionResult result = fixture_result();
    const std::string html = render_html_string(result);

    CHECK(count_occurrences(html, "<span class=\"unit\"") == result.units.units.size());
    CHECK(html.find("&lt;b&gt;&amp;gamma") != std::string::npos);
    CHECK(html.find("achtung&quot;quote") != std::string::npos);
    CHECK(html.find("<b>&gamma") == std::string::npos);  // raw markup never leaks
    CHECK(html.find("title=\"phi=0.5714\"") != std::string::npos);
    CHECK(html.find("title=\"phi=-0.2857\"") != std::string::npos);
    // Footer carries run metadata.
    CHECK(html.find("backend=mock:echo") != std::string::npos);
    CHECK(html.find("seed=7") != std::string::npos);
    // Self-contained: no external fetches.
    CHECK(html.find("http://") == std::string::npos);
    CHECK(html.find("https://") == std::string::npos);
    CHECK(html.find("src=") == std::string::npos);
}

TEST_CASE("html output is byte-stable against the golden file") {
    const std::string html = render_html_string(fixture_result());
    const std::string golden_path = std::string(TOKSHAP_TEST_DIR) + "/golden/heatmap.html";
    std::ifstream in(golden_path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "golden file missing: " << golden_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    CHECK(html == buf.str());
}

TEST_CASE("render_html writes the document to disk") {
    const std::string path = "/tmp/tokshap-viz-test.html";
    render_html(fixture_result(), path);
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == render_html_string(fixture_result()));
    std::remove(path.c_str());
}
