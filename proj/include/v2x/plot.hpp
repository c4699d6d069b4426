#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace v2x {

/// One row of a PRR CSV.
struct PrrRow {
  std::string scenario;
  std::string mode;
  double lo_m = 0.0;
  double hi_m = 0.0;
  double prr = 0.0;
  std::optional<double> ci95;
  int n_runs = 0;
};

std::vector<PrrRow> read_prr_csv(std::istream& is, const std::string& origin = "<csv>");

/// PRR versus distance as an SVG document, one curve per (scenario, mode)
/// pair in first-appearance order, with a legend and optional CI whiskers.
std::string render_prr_svg(const std::vector<PrrRow>& rows, const std::string& title = {});

}  // namespace v2x
