#ifndef LOSSPRED_HARNESS_SVG_H_
#define LOSSPRED_HARNESS_SVG_H_

#include <string>
#include <vector>

namespace losspred::harness {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool lines = false;  // connect points in order
};

// Self-contained scatter (or line) plot with axes, ticks and a legend.
std::string scatter_svg(const std::string& title, const std::string& x_label,
                        const std::string& y_label, const std::vector<Series>& series);

}  // namespace losspred::harness

#endif  // LOSSPRED_HARNESS_SVG_H_
