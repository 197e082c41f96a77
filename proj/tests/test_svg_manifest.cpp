// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>

#include "emt/manifest.hpp"
#include "emt/svg.hpp"

using namespace emt;

namespace {

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

bool well_formed(const std::string& svg) {
  return count(svg, "<svg") == 1 && svg.size() >= 7 && svg.substr(svg.size() - 7) == "</svg>\n";
}

}  // namespace

TEST_CASE("svg: scatter of the 8th roots of unity") {
  std::vector<Complex> roots;
  for (int k = 0; k < 8; ++k) roots.push_back(std::polar(1.0, 2 * std::numbers::pi * k / 8));
  const std::string a = svg::eigen_scatter(roots, 8, "roots <8>");
  CHECK(well_formed(a));
  CHECK(count(a, "r=\"3\"") == 8);
  CHECK(count(a, "stroke-dasharray") == 8);
  CHECK(a.find("roots &lt;8&gt;") != std::string::npos);
  CHECK(a.find("-0.00") == std::string::npos);
  CHECK(a == svg::eigen_scatter(roots, 8, "roots <8>"));

  roots.emplace_back(std::numeric_limits<double>::quiet_NaN(), 0.0);
  CHECK(count(svg::eigen_scatter(roots, 8, ""), "r=\"3\"") == 8);
}

TEST_CASE("svg: heatmap shapes") {
  const std::string empty = svg::heatmap(RealMatrix(0, 0), "empty");
  CHECK(well_formed(empty));
  CHECK(count(empty, "<rect") == 1);  // background only
  CHECK(count(empty, "<line") == 2);

  RealMatrix m(2, 3);
  m << 1, -1, 0, 0.5, -0.5, 2;
  const std::string h = svg::heatmap(m, "m");
  CHECK(well_formed(h));
  CHECK(count(h, "<rect") == 7);
  CHECK(h.find("#ffffff") != std::string::npos);  // zero maps to white
  CHECK(h == svg::heatmap(m, "m"));
}

TEST_CASE("fnv1a: published test vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("manifest: round trip through a file") {
  RunManifest m;
  m.argv = {"train", "--out", "x.json"};
  m.working_directory = "/tmp";
  m.config_hash = fnv1a_hex("{}");
  m.seeds = {1, 18446744073709551615ULL};
  m.artifacts["x.json"] = "0123456789abcdef";
  m.wall_seconds = 1.5;
  const auto dir = std::filesystem::temp_directory_path() / "emt_manifest_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "m.json").string();
  save_manifest(path, m);
  const RunManifest back = load_manifest(path);
  CHECK(back.argv == m.argv);
  CHECK(back.working_directory == m.working_directory);
  CHECK(back.config_hash == m.config_hash);
  CHECK(back.seeds == m.seeds);
  CHECK(back.artifacts == m.artifacts);
  CHECK(back.version == kVersion);
  CHECK(back.wall_seconds == 1.5);
  CHECK(manifest_path_for("out/a.csv") == "out/a.csv.manifest.json");

  std::ofstream(dir / "bytes.bin", std::ios::binary) << "foobar";
  CHECK(hash_file((dir / "bytes.bin").string()) == "85944171f73967e8");
  std::filesystem::remove_all(dir);
}
