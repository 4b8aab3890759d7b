#include "hho/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

namespace hho {

Mesh build_rect_mesh(int nx, int ny)
{
    if (nx < 1 || ny < 1) throw MeshError("build_rect_mesh: nx and ny must be positive");
    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            vertices.emplace_back(static_cast<double>(i) / nx, static_cast<double>(j) / ny);
    auto id = [nx](int i, int j) { return static_cast<std::size_t>(j * (nx + 1) + i); };
    std::vector<std::vector<std::size_t>> polygons;
    polygons.reserve(static_cast<std::size_t>(nx * ny));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            polygons.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    return Mesh::from_polygons(std::move(vertices), polygons);
}

Mesh build_tri_mesh(int n)
{
    if (n < 1) throw MeshError("build_tri_mesh: n must be positive");
    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
    auto id = [n](int i, int j) { return static_cast<std::size_t>(j * (n + 1) + i); };
    std::vector<std::vector<std::size_t>> polygons;
    polygons.reserve(static_cast<std::size_t>(2 * n * n));
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            polygons.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            polygons.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return Mesh::from_polygons(std::move(vertices), polygons);
}

namespace {

using Polygon = std::vector<Point>;

/// Keeps the part of the polygon on the side of `p` of the bisector of p and q.
Polygon clip_bisector(const Polygon& poly, const Point& p, const Point& q)
{
    const Vector2 d = q - p;
    const Point m = 0.5 * (p + q);
    Polygon out;
    out.reserve(poly.size() + 1);
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point& a = poly[i];
        const Point& b = poly[(i + 1) % poly.size()];
        const double sa = (a - m).dot(d);
        const double sb = (b - m).dot(d);
        if (sa <= 0) out.push_back(a);
        if ((sa < 0 && sb > 0) || (sa > 0 && sb < 0)) {
            const double t = sa / (sa - sb);
            out.push_back(a + t * (b - a));
        }
    }
    return out;
}

Point polygon_centroid(const Polygon& poly)
{
    double area = 0.0;
    Point moment = Point::Zero();
    const Point o = poly.front();
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point a = poly[i] - o;
        const Point b = poly[(i + 1) % poly.size()] - o;
        const double cross = a.x() * b.y() - b.x() * a.y();
        area += 0.5 * cross;
        moment += cross * (a + b) / 6.0;
    }
    return o + moment / area;
}

class BucketGrid {
public:
    explicit BucketGrid(const std::vector<Point>& points)
        : n_(std::max(1, static_cast<int>(std::sqrt(static_cast<double>(points.size()))))),
          buckets_(static_cast<std::size_t>(n_ * n_))
    {
        for (std::size_t i = 0; i < points.size(); ++i) buckets_[index(points[i])].push_back(i);
    }

    int size() const { return n_; }
    double spacing() const { return 1.0 / n_; }
    std::pair<int, int> coords(const Point& p) const
    {
        auto clampi = [this](double v) { return std::clamp(static_cast<int>(v * n_), 0, n_ - 1); };
        return {clampi(p.x()), clampi(p.y())};
    }
    const std::vector<std::size_t>& bucket(int i, int j) const { return buckets_[static_cast<std::size_t>(j * n_ + i)]; }

private:
    std::size_t index(const Point& p) const
    {
        const auto [i, j] = coords(p);
        return static_cast<std::size_t>(j * n_ + i);
    }
    int n_;
    std::vector<std::vector<std::size_t>> buckets_;
};

/// Voronoi cells of `sites` clipped to the unit square. Returns false when
/// two sites coincide or a cell degenerates.
bool clipped_voronoi(const std::vector<Point>& sites, std::vector<Polygon>& cells)
{
    const BucketGrid grid(sites);
    const Polygon square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    cells.assign(sites.size(), {});
    for (std::size_t s = 0; s < sites.size(); ++s) {
        const Point& p = sites[s];
        Polygon poly = square;
        const auto [bi, bj] = grid.coords(p);
        for (int ring = 0; ring <= grid.size(); ++ring) {
            for (int j = bj - ring; j <= bj + ring; ++j)
                for (int i = bi - ring; i <= bi + ring; ++i) {
                    if (std::max(std::abs(i - bi), std::abs(j - bj)) != ring) continue;
                    if (i < 0 || j < 0 || i >= grid.size() || j >= grid.size()) continue;
                    for (std::size_t q : grid.bucket(i, j)) {
                        if (q == s) continue;
                        if ((sites[q] - p).norm() < 1e-12) return false;
                        poly = clip_bisector(poly, p, sites[q]);
                    }
                }
            if (poly.size() < 3) return false;
            double reach = 0.0;
            for (const auto& v : poly) reach = std::max(reach, (v - p).norm());
            // Unvisited sites lie at least ring * spacing away.
            if (2.0 * reach <= ring * grid.spacing()) break;
        }
        cells[s] = std::move(poly);
    }
    return true;
}

double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Merges vertices closer than `tol` and returns index loops.
bool weld(const std::vector<Polygon>& cells, double tol, std::vector<Point>& vertices,
          std::vector<std::vector<std::size_t>>& loops)
{
    std::vector<Point> raw;
    for (const auto& c : cells) raw.insert(raw.end(), c.begin(), c.end());

    // Union-find over a hash grid with cell size tol.
    std::vector<std::size_t> parent(raw.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    auto key = [](long i, long j) { return (static_cast<std::uint64_t>(i) << 32) ^ static_cast<std::uint64_t>(j & 0xffffffff); };
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> hash;
    for (std::size_t r = 0; r < raw.size(); ++r) {
        const long i = static_cast<long>(std::floor(raw[r].x() / tol));
        const long j = static_cast<long>(std::floor(raw[r].y() / tol));
        for (long di = -1; di <= 1; ++di)
            for (long dj = -1; dj <= 1; ++dj) {
                auto it = hash.find(key(i + di, j + dj));
                if (it == hash.end()) continue;
                for (std::size_t o : it->second)
                    if ((raw[o] - raw[r]).norm() <= tol) parent[find(r)] = find(o);
            }
        hash[key(i, j)].push_back(r);
    }

    std::vector<std::size_t> id(raw.size(), no_cell);
    vertices.clear();
    std::vector<int> count;
    for (std::size_t r = 0; r < raw.size(); ++r) {
        const std::size_t root = find(r);
        if (id[root] == no_cell) {
            id[root] = vertices.size();
            vertices.push_back(Point::Zero());
            count.push_back(0);
        }
        vertices[id[root]] += raw[r];
        ++count[id[root]];
    }
    for (std::size_t v = 0; v < vertices.size(); ++v) {
        vertices[v] /= count[v];
        // Keep boundary vertices exactly on the square.
        for (int d = 0; d < 2; ++d) {
            if (std::abs(vertices[v][d]) <= tol) vertices[v][d] = 0.0;
            if (std::abs(vertices[v][d] - 1.0) <= tol) vertices[v][d] = 1.0;
        }
    }

    loops.clear();
    std::size_t offset = 0;
    for (const auto& c : cells) {
        std::vector<std::size_t> loop;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const std::size_t v = id[find(offset + i)];
            if (loop.empty() || loop.back() != v) loop.push_back(v);
        }
        while (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
        if (loop.size() < 3) return false;
        loops.push_back(std::move(loop));
        offset += c.size();
    }
    return true;
}

}  // namespace

Mesh build_voronoi_mesh(int n_cells, std::uint64_t seed, int lloyd_iters)
{
    if (n_cells < 1) throw MeshError("build_voronoi_mesh: n_cells must be positive");
    if (lloyd_iters < 0) throw MeshError("build_voronoi_mesh: lloyd_iters must be non-negative");
    if (n_cells == 1) return build_rect_mesh(1, 1);

    const double tol = 1e-10;
    for (int attempt = 0; attempt < 10; ++attempt) {
        std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt));
        std::vector<Point> sites(static_cast<std::size_t>(n_cells));
        for (auto& s : sites) {
            const double x = uniform01(rng);
            const double y = uniform01(rng);
            s = Point(x, y);
        }
        std::vector<Polygon> cells;
        bool ok = clipped_voronoi(sites, cells);
        for (int it = 0; ok && it < lloyd_iters; ++it) {
            for (std::size_t s = 0; s < sites.size(); ++s) sites[s] = polygon_centroid(cells[s]);
            ok = clipped_voronoi(sites, cells);
        }
        if (!ok) continue;

        std::vector<Point> vertices;
        std::vector<std::vector<std::size_t>> loops;
        if (!weld(cells, tol, vertices, loops)) continue;
        try {
            Mesh mesh = Mesh::from_polygons(std::move(vertices), loops);
            if (validate(mesh).valid) return mesh;
        } catch (const MeshError&) {
        }
    }
    throw MeshError("build_voronoi_mesh: degenerate diagram after 10 attempts");
}

}  // namespace hho
