#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cdga {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal standalone SVG renderers; values are plotted as given.
std::string line_plot_svg(const std::vector<Series>& series, const std::string& title,
                          const std::string& x_label, const std::string& y_label);
std::string scatter_svg(const std::vector<Series>& groups, const std::string& title);
std::string heatmap_svg(const Eigen::MatrixXd& values, const std::vector<std::string>& rows,
                        const std::vector<std::string>& cols, const std::string& title);

// Long-format sidecar: series,x,y
std::string series_csv(const std::vector<Series>& series);

}  // namespace cdga
