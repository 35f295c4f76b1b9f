#include "fdm/terrain.hpp"

#include "fdm/io.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fdm {

TerrainKind terrain_kind_from_string(const std::string& s) {
    if (s == "plane") return TerrainKind::plane;
    if (s == "obstacles2d") return TerrainKind::obstacles2d;
    if (s == "mixed2d3d") return TerrainKind::mixed2d3d;
    if (s == "stairs3d") return TerrainKind::stairs3d;
    throw std::invalid_argument("unknown terrain kind: " + s);
}

std::string to_string(TerrainKind k) {
    switch (k) {
        case TerrainKind::plane: return "plane";
        case TerrainKind::obstacles2d: return "obstacles2d";
        case TerrainKind::mixed2d3d: return "mixed2d3d";
        case TerrainKind::stairs3d: return "stairs3d";
    }
    return "plane";
}

double TerrainGrid::height_at(double x, double y) const {
    int ix = static_cast<int>(std::floor(x / cell_size));
    int iy = static_cast<int>(std::floor(y / cell_size));
    ix = std::clamp(ix, 0, W - 1);
    iy = std::clamp(iy, 0, H - 1);
    return h(ix, iy);
}

bool TerrainGrid::is_rough(int ix, int iy, double threshold) const {
    const double h0 = h(ix, iy);
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
        int nx = ix + dx[k], ny = iy + dy[k];
        if (!cell_in_bounds(nx, ny)) continue;
        if (std::abs(h(nx, ny) - h0) > threshold) return true;
    }
    return false;
}

bool TerrainGrid::is_rough_at(double x, double y, double threshold) const {
    int ix = std::clamp(static_cast<int>(std::floor(x / cell_size)), 0, W - 1);
    int iy = std::clamp(static_cast<int>(std::floor(y / cell_size)), 0, H - 1);
    return is_rough(ix, iy, threshold);
}

double TerrainGrid::slope_along(double x, double y, double dx, double dy,
                                double probe_radius) const {
    const double n = std::sqrt(dx * dx + dy * dy);
    if (n < 1e-12 || probe_radius <= 0.0) return 0.0;
    const double ux = dx / n, uy = dy / n;
    const double hf = height_at(x + ux * probe_radius, y + uy * probe_radius);
    const double hb = height_at(x - ux * probe_radius, y - uy * probe_radius);
    return (hf - hb) / (2.0 * probe_radius);
}

namespace {

void fill_rect(TerrainGrid& g, int x0, int y0, int x1, int y1, double height) {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, g.W - 1);
    y1 = std::min(y1, g.H - 1);
    for (int iy = y0; iy <= y1; ++iy)
        for (int ix = x0; ix <= x1; ++ix)
            g.h_ref(ix, iy) = static_cast<float>(std::max(g.h(ix, iy), height));
}

void add_border_wall(TerrainGrid& g, int thickness, double height) {
    fill_rect(g, 0, 0, g.W - 1, thickness - 1, height);
    fill_rect(g, 0, g.H - thickness, g.W - 1, g.H - 1, height);
    fill_rect(g, 0, 0, thickness - 1, g.H - 1, height);
    fill_rect(g, g.W - thickness, 0, g.W - 1, g.H - 1, height);
}

bool overlaps_center_clearing(const TerrainGrid& g, int x0, int y0, int x1, int y1,
                              double clear_radius) {
    const double cx = 0.5 * g.W * g.cell_size, cy = 0.5 * g.H * g.cell_size;
    const double px0 = x0 * g.cell_size, px1 = (x1 + 1) * g.cell_size;
    const double py0 = y0 * g.cell_size, py1 = (y1 + 1) * g.cell_size;
    const double nx = std::clamp(cx, px0, px1), ny = std::clamp(cy, py0, py1);
    return std::hypot(nx - cx, ny - cy) < clear_radius;
}

void add_pillars(TerrainGrid& g, Rng& rng, int count) {
    for (int i = 0; i < count; ++i) {
        const double w = uniform(rng, 0.3, 1.2), d = uniform(rng, 0.3, 1.2);
        const double cx = uniform(rng, 1.0, g.width() - 1.0);
        const double cy = uniform(rng, 1.0, g.height_extent() - 1.0);
        const double hh = uniform(rng, 1.0, 2.0);
        int x0 = static_cast<int>((cx - w / 2) / g.cell_size);
        int x1 = static_cast<int>((cx + w / 2) / g.cell_size);
        int y0 = static_cast<int>((cy - d / 2) / g.cell_size);
        int y1 = static_cast<int>((cy + d / 2) / g.cell_size);
        if (overlaps_center_clearing(g, x0, y0, x1, y1, 1.2)) continue;
        fill_rect(g, x0, y0, x1, y1, hh);
    }
}

void add_walls(TerrainGrid& g, Rng& rng, int count) {
    for (int i = 0; i < count; ++i) {
        const double len = uniform(rng, 2.0, 5.0);
        const bool along_x = uniform(rng, 0.0, 1.0) < 0.5;
        const double cx = uniform(rng, 1.0, g.width() - 1.0);
        const double cy = uniform(rng, 1.0, g.height_extent() - 1.0);
        const double w = along_x ? len : 0.2, d = along_x ? 0.2 : len;
        int x0 = static_cast<int>((cx - w / 2) / g.cell_size);
        int x1 = static_cast<int>((cx + w / 2) / g.cell_size);
        int y0 = static_cast<int>((cy - d / 2) / g.cell_size);
        int y1 = static_cast<int>((cy + d / 2) / g.cell_size);
        if (overlaps_center_clearing(g, x0, y0, x1, y1, 1.2)) continue;
        fill_rect(g, x0, y0, x1, y1, 1.5);
    }
}

// Square step pyramid: rings of `tread_cells` wide treads rising by `riser`
// per ring, capped at `max_levels`.
void add_step_pyramid(TerrainGrid& g, Rng& rng, int cx, int cy, int half_extent,
                      double riser, int tread_cells, int max_levels) {
    (void)rng;
    int x0 = cx - half_extent, x1 = cx + half_extent;
    int y0 = cy - half_extent, y1 = cy + half_extent;
    if (overlaps_center_clearing(g, x0, y0, x1, y1, 1.2)) return;
    for (int iy = std::max(y0, 0); iy <= std::min(y1, g.H - 1); ++iy) {
        for (int ix = std::max(x0, 0); ix <= std::min(x1, g.W - 1); ++ix) {
            const int from_edge =
                std::min(std::min(ix - x0, x1 - ix), std::min(iy - y0, y1 - iy));
            const int level = std::min(from_edge / tread_cells, max_levels);
            g.h_ref(ix, iy) =
                static_cast<float>(std::max(g.h(ix, iy), level * riser));
        }
    }
}

// Tent ramp rising along x at `slope` (rise/run) to a flat crest.
void add_tent_ramp(TerrainGrid& g, int cx, int cy, int half_len, int half_width,
                   double slope, double peak) {
    int x0 = cx - half_len, x1 = cx + half_len;
    int y0 = cy - half_width, y1 = cy + half_width;
    if (overlaps_center_clearing(g, x0, y0, x1, y1, 1.2)) return;
    for (int iy = std::max(y0, 0); iy <= std::min(y1, g.H - 1); ++iy) {
        for (int ix = std::max(x0, 0); ix <= std::min(x1, g.W - 1); ++ix) {
            const double run = std::min(ix - x0, x1 - ix) * g.cell_size;
            const double hh = std::min(slope * run, peak);
            g.h_ref(ix, iy) = static_cast<float>(std::max(g.h(ix, iy), hh));
        }
    }
}

void add_stair_features(TerrainGrid& g, Rng& rng) {
    const double area = g.width() * g.height_extent();
    const int n_pyramids = std::max(2, static_cast<int>(area / 80.0));
    for (int i = 0; i < n_pyramids; ++i) {
        const int half_extent = static_cast<int>(uniform(rng, 1.5, 2.5) / g.cell_size);
        const int cx = static_cast<int>(uniform(rng, 2.0, g.width() - 2.0) / g.cell_size);
        const int cy =
            static_cast<int>(uniform(rng, 2.0, g.height_extent() - 2.0) / g.cell_size);
        const int max_levels = 3 + static_cast<int>(uniform(rng, 0.0, 3.0));
        add_step_pyramid(g, rng, cx, cy, half_extent, 0.17, 3, max_levels);
    }
    const int n_ramps = std::max(3, static_cast<int>(area / 70.0));
    for (int i = 0; i < n_ramps; ++i) {
        // Alternate between traversable and too-steep ramps so both kinds
        // are always present.
        const double slope = (i % 2 == 0) ? 1.0 : 0.4;
        const int half_len = static_cast<int>(uniform(rng, 1.0, 1.6) / g.cell_size);
        const int half_width = static_cast<int>(uniform(rng, 0.6, 1.2) / g.cell_size);
        const int cx = static_cast<int>(uniform(rng, 2.0, g.width() - 2.0) / g.cell_size);
        const int cy =
            static_cast<int>(uniform(rng, 2.0, g.height_extent() - 2.0) / g.cell_size);
        add_tent_ramp(g, cx, cy, half_len, half_width, slope, 0.9);
    }
}

}  // namespace

TerrainGrid generate_terrain(TerrainKind kind, std::uint64_t seed, int size,
                             double cell_size) {
    if (size <= 0) throw std::invalid_argument("terrain size must be positive");
    TerrainGrid g;
    g.W = g.H = size;
    g.cell_size = cell_size;
    g.kind = kind;
    g.seed = seed;
    g.heights.assign(static_cast<std::size_t>(size) * size, 0.0f);
    if (kind == TerrainKind::plane) return g;

    Rng rng = make_rng(seed, 0x7e55a1 + static_cast<std::uint64_t>(kind));
    add_border_wall(g, 2, 1.5);
    const double area = g.width() * g.height_extent();
    switch (kind) {
        case TerrainKind::plane: break;
        case TerrainKind::obstacles2d:
            add_pillars(g, rng, static_cast<int>(area * 0.05));
            add_walls(g, rng, std::max(2, static_cast<int>(area / 90.0)));
            break;
        case TerrainKind::stairs3d: add_stair_features(g, rng); break;
        case TerrainKind::mixed2d3d:
            add_stair_features(g, rng);
            add_pillars(g, rng, static_cast<int>(area * 0.03));
            add_walls(g, rng, std::max(1, static_cast<int>(area / 150.0)));
            break;
    }
    return g;
}

void save_terrain(const TerrainGrid& grid, const std::string& path) {
    BinWriter w;
    w.put_magic("FDMTG001");
    w.put_u32(static_cast<std::uint32_t>(grid.W));
    w.put_u32(static_cast<std::uint32_t>(grid.H));
    w.put_f32(static_cast<float>(grid.cell_size));
    for (float v : grid.heights) w.put_f32(v);
    atomic_write_file(path, w.bytes());
}

TerrainGrid load_terrain(const std::string& path) {
    BinReader r(read_file(path));
    r.expect_magic("FDMTG001");
    TerrainGrid g;
    g.W = static_cast<int>(r.get_u32());
    g.H = static_cast<int>(r.get_u32());
    g.cell_size = r.get_f32();
    if (g.W <= 0 || g.H <= 0) throw std::runtime_error("terrain file has empty grid");
    g.heights.resize(static_cast<std::size_t>(g.W) * g.H);
    for (float& v : g.heights) v = r.get_f32();
    return g;
}

}  // namespace fdm
