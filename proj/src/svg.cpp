// SPDX-License-Identifier: Apache-2.0
#include "emt/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace emt::svg {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string num(double v) {
  // Avoid "-0.00" so output does not depend on the sign of zero.
  std::string s = fmt("%.2f", v);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string escape(const std::string& in) {
  std::string out;
  for (char c : in) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) + "\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string color(double v, double scale) {
  const double t = scale > 0.0 ? std::clamp(v / scale, -1.0, 1.0) : 0.0;
  int r = 255, g = 255, b = 255;
  if (t > 0) {
    g = b = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  } else if (t < 0) {
    r = g = static_cast<int>(std::lround(255.0 * (1.0 + t)));
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string eigen_scatter(const std::vector<Complex>& points, int s, const std::string& title) {
  constexpr int size = 480;
  constexpr double c = size / 2.0;
  double extent = 1.2;
  for (const auto& z : points) {
    if (std::isfinite(z.real()) && std::isfinite(z.imag())) {
      extent = std::max(extent, 1.1 * std::max(std::abs(z.real()), std::abs(z.imag())));
    }
  }
  const double px = (c - 30.0) / extent;
  std::string out = header(size, size);
  out += "<text x=\"" + num(c) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) + "</text>\n";
  out += "<line x1=\"20\" y1=\"" + num(c) + "\" x2=\"" + num(size - 20.0) + "\" y2=\"" + num(c) +
         "\" stroke=\"#999\" stroke-width=\"1\"/>\n";
  out += "<line x1=\"" + num(c) + "\" y1=\"30\" x2=\"" + num(c) + "\" y2=\"" + num(size - 20.0) +
         "\" stroke=\"#999\" stroke-width=\"1\"/>\n";
  out += "<circle cx=\"" + num(c) + "\" cy=\"" + num(c) + "\" r=\"" + num(px) +
         "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  for (int k = 0; k < s; ++k) {
    const double th = 2.0 * std::numbers::pi * k / s;
    const double x = c + 1.08 * px * std::cos(th);
    const double y = c - 1.08 * px * std::sin(th);
    out += "<line x1=\"" + num(c) + "\" y1=\"" + num(c) + "\" x2=\"" + num(c + px * std::cos(th)) + "\" y2=\"" +
           num(c - px * std::sin(th)) + "\" stroke=\"#ccc\" stroke-dasharray=\"3,3\"/>\n";
    out += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"10\" text-anchor=\"middle\">" +
           std::to_string(k) + "&#183;2&#960;/" + std::to_string(s) + "</text>\n";
  }
  for (const auto& z : points) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) continue;
    out += "<circle cx=\"" + num(c + px * z.real()) + "\" cy=\"" + num(c - px * z.imag()) +
           "\" r=\"3\" fill=\"#c0392b\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string heatmap(const RealMatrix& m, const std::string& title) {
  constexpr int margin = 40;
  const auto rows = static_cast<int>(m.rows());
  const auto cols = static_cast<int>(m.cols());
  const double cell = std::clamp(480.0 / std::max({rows, cols, 1}), 2.0, 24.0);
  const int w = margin * 2 + static_cast<int>(std::ceil(cell * cols));
  const int h = margin * 2 + static_cast<int>(std::ceil(cell * rows));
  double scale = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (std::isfinite(m.data()[i])) scale = std::max(scale, std::abs(m.data()[i]));
  }
  std::string out = header(std::max(w, 160), h);
  out += "<text x=\"" + num(margin) + "\" y=\"20\" font-size=\"14\">" + escape(title) + "</text>\n";
  out += "<g stroke=\"#333\" stroke-width=\"1\">\n";
  out += "<line x1=\"" + num(margin) + "\" y1=\"" + num(margin) + "\" x2=\"" + num(margin) + "\" y2=\"" +
         num(margin + cell * rows) + "\"/>\n";
  out += "<line x1=\"" + num(margin) + "\" y1=\"" + num(margin + cell * rows) + "\" x2=\"" +
         num(margin + cell * cols) + "\" y2=\"" + num(margin + cell * rows) + "\"/>\n";
  out += "</g>\n";
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double v = m(i, j);
      out += "<rect x=\"" + num(margin + cell * j) + "\" y=\"" + num(margin + cell * i) + "\" width=\"" + num(cell) +
             "\" height=\"" + num(cell) + "\" fill=\"" + (std::isfinite(v) ? color(v, scale) : "#000000") +
             "\"/>\n";
    }
  }
  out += "<text x=\"" + num(margin) + "\" y=\"" + num(h - 10.0) + "\" font-size=\"10\">scale &#177;" +
         fmt("%.4g", scale) + "</text>\n";
  out += "</svg>\n";
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path);
}

}  // namespace emt::svg
