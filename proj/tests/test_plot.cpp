#include <gtest/gtest.h>

#include <sstream>

#include "v2x/plot.hpp"

using namespace v2x;

namespace {

std::size_t count(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (auto p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(Plot, OneCurveAndLegendEntryPerMode) {
  std::stringstream csv;
  csv << "scenario,mode,bin_lo_m,bin_hi_m,prr,ci95,n_runs\n";
  for (const char* mode : {"None", "VisibleOnly", "HiddenOnly", "VisibleAndHidden"})
    for (int b = 0; b < 12; ++b) csv << "Cam10Hz," << mode << "," << 25 * b << "," << 25 * (b + 1) << ",0.5,0.02,10\n";
  const auto rows = read_prr_csv(csv);
  ASSERT_EQ(rows.size(), 48u);
  EXPECT_EQ(*rows[0].ci95, 0.02);
  const auto svg = render_prr_svg(rows, "PRR <Cam10Hz>");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(count(svg, "<polyline"), 4u);
  EXPECT_EQ(count(svg, "<circle"), 48u);
  for (const char* mode : {"None", "VisibleOnly", "HiddenOnly", "VisibleAndHidden"})
    EXPECT_GE(count(svg, mode), 2u) << mode;  // series group and legend label
  EXPECT_NE(svg.find("&lt;Cam10Hz&gt;"), std::string::npos);
}

TEST(Plot, MalformedCsvIsReported) {
  std::stringstream bad("scenario,mode,bin_lo_m,bin_hi_m,prr,ci95,n_runs\nA,None,0,25\n");
  EXPECT_THROW(read_prr_csv(bad, "x.csv"), std::runtime_error);
  std::stringstream nan("A,None,zero,25,0.5,,1\n");
  EXPECT_THROW(read_prr_csv(nan), std::runtime_error);
  std::stringstream empty_ci("A,None,0,25,0.5,,1\n");
  EXPECT_FALSE(read_prr_csv(empty_ci)[0].ci95);
}
