#pragma once

#include "fdm/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fdm {

enum class TerrainKind { plane, obstacles2d, mixed2d3d, stairs3d };

TerrainKind terrain_kind_from_string(const std::string& s);
std::string to_string(TerrainKind k);

// 2.5D heightmap. Cell (ix, iy) covers world
// [ix, ix+1) x [iy, iy+1) * cell_size; its center is at
// ((ix + 0.5) * cell_size, (iy + 0.5) * cell_size).
struct TerrainGrid {
    int W = 0, H = 0;
    double cell_size = 0.1;
    TerrainKind kind = TerrainKind::plane;
    std::uint64_t seed = 0;
    std::vector<float> heights;  // row-major, index iy * W + ix

    double h(int ix, int iy) const { return heights[static_cast<std::size_t>(iy) * W + ix]; }
    float& h_ref(int ix, int iy) { return heights[static_cast<std::size_t>(iy) * W + ix]; }
    bool cell_in_bounds(int ix, int iy) const { return ix >= 0 && ix < W && iy >= 0 && iy < H; }
    bool in_bounds(double x, double y) const {
        return x >= 0.0 && x < W * cell_size && y >= 0.0 && y < H * cell_size;
    }
    double width() const { return W * cell_size; }
    double height_extent() const { return H * cell_size; }

    // Nearest-cell height with coordinates clamped into the grid.
    double height_at(double x, double y) const;

    // A cell is rough if any 4-neighbour differs by more than `threshold`.
    bool is_rough(int ix, int iy, double threshold = 0.02) const;
    bool is_rough_at(double x, double y, double threshold = 0.02) const;

    // Signed terrain slope (rise/run) at (x, y) along direction (dx, dy),
    // central difference over +-probe_radius.
    double slope_along(double x, double y, double dx, double dy, double probe_radius) const;
};

// Deterministic procedural terrain. `size` is the square side length in
// cells. Non-plane kinds get a border wall so the robot cannot leave.
TerrainGrid generate_terrain(TerrainKind kind, std::uint64_t seed, int size,
                             double cell_size = 0.1);

void save_terrain(const TerrainGrid& grid, const std::string& path);
TerrainGrid load_terrain(const std::string& path);

}  // namespace fdm
