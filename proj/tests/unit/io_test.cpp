#include <gtest/gtest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "qbo/io/csv.hpp"
#include "qbo/io/svg_plot.hpp"

using namespace qbo;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("qbo_io_" + std::to_string(::getpid()) + "_" + name)).string();
}

std::string strip_timestamp(const std::string& s) {
  std::istringstream in(s);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("# timestamp:", 0) != 0) out += line + '\n';
  return out;
}

}  // namespace

TEST(Csv, RoundTripIsExact) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  Dataset d;
  d.name = "roundtrip";
  d.columns = {"a", "b", "c"};
  for (int i = 0; i < 200; ++i)
    d.rows.push_back({std::ldexp(mant(gen), expo(gen)), mant(gen) / 3.0, std::numeric_limits<double>::denorm_min() * i});
  d.rows.push_back({0.1, -0.0, std::numeric_limits<double>::max()});
  io::RunManifest m{"test", {{"k", "v"}}, io::kToolVersion, "2000-01-01T00:00:00Z", {42}};
  const std::string path = tmp_path("rt.csv");
  io::emit_csv(d, path, m);
  const io::CsvFile f = io::read_csv(path);
  EXPECT_EQ(f.columns, d.columns);
  ASSERT_EQ(f.rows.size(), d.rows.size());
  for (std::size_t i = 0; i < d.rows.size(); ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(f.rows[i][j], d.rows[i][j]) << i << "," << j;
  EXPECT_EQ(f.comments.front(), "# command: test");
  std::filesystem::remove(path);
}

TEST(Csv, EmptyDatasetWritesHeaderAndManifest) {
  Dataset d;
  d.columns = {"t", "v"};
  std::ostringstream os;
  io::write_csv(os, d, {"cmd", {}, io::kToolVersion, "now", {}});
  EXPECT_EQ(os.str(), "# command: cmd\n# version: 0.1.0\n# timestamp: now\nt,v\n");
}

TEST(Csv, ManifestCarriesSeedAndConfig) {
  Dataset d;
  d.columns = {"x"};
  d.meta = {{"points", "3"}};
  std::ostringstream os;
  io::write_csv(os, d, {"cmd", {{"seed", "7"}, {"dt", "0.001"}}, io::kToolVersion, "now", {7}});
  const std::string s = os.str();
  EXPECT_NE(s.find("# seed: 7\n"), std::string::npos);
  EXPECT_NE(s.find("# config: dt=0.001\n"), std::string::npos);
  EXPECT_NE(s.find("# meta: points=3\n"), std::string::npos);
}

TEST(Csv, RepeatRunsIdenticalExceptTimestamp) {
  const Dataset d = run_figure1(Panel::Right);
  std::ostringstream a, b;
  io::write_csv(a, d, {"sweep", {}, io::kToolVersion, io::utc_timestamp(), {}});
  io::write_csv(b, run_figure1(Panel::Right), {"sweep", {}, io::kToolVersion, "later", {}});
  EXPECT_EQ(strip_timestamp(a.str()), strip_timestamp(b.str()));
}

TEST(Csv, UnwritablePathNamesThePath) {
  Dataset d;
  d.columns = {"x"};
  const std::string path = "/nonexistent-dir/out.csv";
  try {
    io::emit_csv(d, path, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
    EXPECT_NE(std::string(e.what()).find(path), std::string::npos);
  }
  EXPECT_THROW(io::read_csv(path), Error);
}

TEST(Csv, FormatValue) {
  EXPECT_EQ(io::format_shortest(0.01), "0.01");
  EXPECT_EQ(io::format_shortest(1e7), "1e+07");
  EXPECT_EQ(std::stod(io::format_value(0.1)), 0.1);
}

TEST(Svg, SinglePointUsesMarkers) {
  Dataset d;
  d.columns = {"t", "a", "b"};
  d.rows = {{1.0, 2.0, 3.0}};
  const std::string svg = io::render_svg(d, {});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  std::size_t circles = 0;
  for (auto pos = svg.find("<circle"); pos != std::string::npos; pos = svg.find("<circle", pos + 1)) ++circles;
  EXPECT_EQ(circles, 2u);
  EXPECT_EQ(svg.find("<path"), std::string::npos);
}

TEST(Svg, ReferenceLineAndStyles) {
  Dataset d;
  d.columns = {"t", "a", "b", "c"};
  for (int i = 0; i < 10; ++i) d.rows.push_back({double(i), 3.0 + i, 3.0 - i, 1.0});
  io::PlotOptions opt;
  opt.reference_y = 3.0;
  opt.title = "kurtosis";
  const std::string svg = io::render_svg(d, opt);
  EXPECT_NE(svg.find("stroke=\"gray\""), std::string::npos);
  EXPECT_NE(svg.find("stroke-dasharray=\"8,5\""), std::string::npos);
  EXPECT_NE(svg.find("stroke-dasharray=\"2,4\""), std::string::npos);
  EXPECT_NE(svg.find(">kurtosis<"), std::string::npos);
}

TEST(Svg, LogAxesSkipNonPositive) {
  Dataset d;
  d.columns = {"gamma", "v"};
  d.rows = {{1e-2, 1.0}, {1.0, 0.0}, {1e2, 10.0}};
  io::PlotOptions opt;
  opt.axes = io::Axes::LogLog;
  const std::string svg = io::render_svg(d, opt);
  EXPECT_NE(svg.find(">1e-2<"), std::string::npos);
  EXPECT_NE(svg.find(">1e2<"), std::string::npos);
  // the zero breaks the line into two pieces
  const auto path = svg.substr(svg.find("<path d=\""));
  EXPECT_EQ(std::count(path.begin(), path.begin() + path.find("\" fill"), 'M'), 2);
}

TEST(Svg, NeedsTwoColumns) {
  Dataset d;
  d.columns = {"t"};
  EXPECT_THROW(io::render_svg(d, {}), Error);
}
