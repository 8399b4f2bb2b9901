#include <gtest/gtest.h>

#include "hatescope/plots.hpp"

namespace hatescope::plots {
namespace {

std::size_t count(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
    return n;
}

TEST(Plots, LinePlotOnePolylinePerSeries) {
    const auto svg = line_plot("t <&>", {{"a", {0, 1, 2}, {0, 1, 0}}, {"b", {0, 2}, {1, 1}}}, "x", "y");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_EQ(svg.substr(svg.size() - 7), "</svg>\n");
    EXPECT_EQ(count(svg, "<polyline"), 2u);
    EXPECT_NE(svg.find("t &lt;&amp;&gt;"), std::string::npos);
    EXPECT_EQ(svg.find("nan"), std::string::npos);
}

TEST(Plots, DegenerateInputsStayFinite) {
    for (const auto& svg : {line_plot("", {}, "", ""), line_plot("", {{"c", {3, 3}, {0, 0}}}, "", ""),
                            box_plot("", {{"empty", {}}, {"const", {2, 2, 2}}}, "")}) {
        EXPECT_EQ(svg.find("nan"), std::string::npos);
        EXPECT_EQ(svg.find("inf"), std::string::npos);
    }
}

TEST(Plots, BoxPlotMarksOnlyPointsBeyondWhiskers) {
    // Quartiles of 1..9 are 3 and 7 (IQR 4); 30 lies beyond 7 + 6.
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 30};
    const auto svg = box_plot("b", {{"g", v}}, "v");
    EXPECT_EQ(count(svg, "<circle"), 1u);
    EXPECT_EQ(count(svg, "<rect"), 2u);  // background + box
    EXPECT_NE(svg.find("g (n=10)"), std::string::npos);
}

}  // namespace
}  // namespace hatescope::plots
