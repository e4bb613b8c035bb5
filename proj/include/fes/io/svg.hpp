#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fes::io {

struct Series {
    std::string name;
    std::vector<double> x, y;
    std::string color;       ///< empty = palette
    bool markers = false;    ///< draw points instead of a polyline
    bool dashed = false;
};

struct Band {
    double lo = 0.0;
    double hi = 0.0;
    std::string label;
};

class LinePlot {
public:
    std::string title, x_label, y_label;
    std::vector<Series> series;
    std::optional<Band> band;
    bool log_y = false;
    bool equal_aspect = false;  ///< same scale on both axes (plane trajectories)

    [[nodiscard]] std::string render(int width = 760, int height = 440) const;
};

/// Certified-region map over a (tau, eps) grid. Cells are colored by rho,
/// certified cells are outlined, diverged runs get a cross.
struct RegionMap {
    std::string title;
    std::vector<double> tau, eps;
    std::vector<double> rho;        ///< row-major, tau outer
    std::vector<bool> certified;
    std::vector<bool> diverged;     ///< empty = no simulations

    [[nodiscard]] std::string render(int width = 760, int height = 520) const;
};

/// Axis ticks with 1-2-5 spacing covering [lo, hi].
[[nodiscard]] std::vector<double> nice_ticks(double lo, double hi, int target = 6);

}  // namespace fes::io
