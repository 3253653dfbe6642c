// Minimal self-contained SVG line charts. Plots are rendered from data that
// was already written to CSV, never from live state.
#pragma once

#include <string>
#include <vector>

namespace qfc::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series);

}  // namespace qfc::svg
