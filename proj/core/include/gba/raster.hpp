#pragma once

#include <cstdint>

#include "gba/command_stream.hpp"

namespace gba {

/// Edge-function rasterizer over 24.8 fixed-point vertices. Pixel (x, y) is
/// sampled at its center; coverage follows the top-left fill convention, so
/// triangles sharing an edge never both cover a sample. Either winding is
/// accepted; zero-area triangles cover nothing.
///
/// `fragment(x, y, depth)` is invoked once per covered pixel inside the
/// width x height viewport, rows top to bottom, columns left to right.
/// Depth is the barycentric interpolation of the vertex depths.
template <typename Fragment>
void rasterize_triangle(const Triangle& tri, int width, int height, Fragment&& fragment) {
  Vertex a = tri.v[0];
  Vertex b = tri.v[1];
  Vertex c = tri.v[2];

  auto edge = [](const Vertex& p, const Vertex& q, std::int64_t x, std::int64_t y) {
    return (x - p.x) * std::int64_t{q.y - p.y} - (y - p.y) * std::int64_t{q.x - p.x};
  };
  std::int64_t area = edge(a, b, c.x, c.y);
  if (area == 0) return;
  if (area < 0) {
    std::swap(b, c);
    area = -area;
  }

  // Interior normal of edge p->q is (dy, -dx): left edges have dy > 0, top
  // edges are horizontal with dx < 0.
  auto is_top_left = [](const Vertex& p, const Vertex& q) {
    const std::int64_t dx = q.x - p.x;
    const std::int64_t dy = q.y - p.y;
    return dy > 0 || (dy == 0 && dx < 0);
  };
  const std::int64_t bias0 = is_top_left(b, c) ? 0 : -1;
  const std::int64_t bias1 = is_top_left(c, a) ? 0 : -1;
  const std::int64_t bias2 = is_top_left(a, b) ? 0 : -1;

  auto floor_px = [](std::int64_t v) { return static_cast<int>((v - kSubpixelOne / 2) >> kSubpixelBits); };
  int minX = floor_px(std::min({a.x, b.x, c.x})) - 1;
  int maxX = floor_px(std::max({a.x, b.x, c.x})) + 1;
  int minY = floor_px(std::min({a.y, b.y, c.y})) - 1;
  int maxY = floor_px(std::max({a.y, b.y, c.y})) + 1;
  minX = std::max(minX, 0);
  minY = std::max(minY, 0);
  maxX = std::min(maxX, width - 1);
  maxY = std::min(maxY, height - 1);
  if (minX > maxX || minY > maxY) return;

  const double invArea = 1.0 / static_cast<double>(area);
  const std::int64_t stepX0 = std::int64_t{c.y - b.y} * kSubpixelOne;
  const std::int64_t stepX1 = std::int64_t{a.y - c.y} * kSubpixelOne;
  const std::int64_t stepX2 = std::int64_t{b.y - a.y} * kSubpixelOne;

  for (int y = minY; y <= maxY; ++y) {
    const std::int64_t sy = std::int64_t{y} * kSubpixelOne + kSubpixelOne / 2;
    const std::int64_t sx0 = std::int64_t{minX} * kSubpixelOne + kSubpixelOne / 2;
    std::int64_t w0 = edge(b, c, sx0, sy);
    std::int64_t w1 = edge(c, a, sx0, sy);
    std::int64_t w2 = edge(a, b, sx0, sy);
    for (int x = minX; x <= maxX; ++x) {
      if (w0 + bias0 >= 0 && w1 + bias1 >= 0 && w2 + bias2 >= 0) {
        const double depth = (static_cast<double>(w0) * a.depth + static_cast<double>(w1) * b.depth +
                              static_cast<double>(w2) * c.depth) *
                             invArea;
        fragment(x, y, depth);
      }
      w0 += stepX0;
      w1 += stepX1;
      w2 += stepX2;
    }
  }
}

}  // namespace gba
