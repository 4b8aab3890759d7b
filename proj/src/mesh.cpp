#include "hho/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace hho {

double signed_area(const Point& a, const Point& b, const Point& c)
{
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

double diameter(const std::array<Point, 3>& tri)
{
    return std::max({(tri[0] - tri[1]).norm(), (tri[1] - tri[2]).norm(), (tri[2] - tri[0]).norm()});
}

double inradius(const std::array<Point, 3>& tri)
{
    const double perimeter = (tri[0] - tri[1]).norm() + (tri[1] - tri[2]).norm() + (tri[2] - tri[0]).norm();
    return 2.0 * std::abs(signed_area(tri[0], tri[1], tri[2])) / perimeter;
}

Mesh Mesh::from_polygons(std::vector<Point> vertices,
                         const std::vector<std::vector<std::size_t>>& polygons)
{
    MeshTopology topo;
    topo.vertices = std::move(vertices);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_to_face;
    for (std::size_t c = 0; c < polygons.size(); ++c) {
        const auto& poly = polygons[c];
        MeshTopology::CellEntry entry;
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const std::size_t a = poly[i];
            const std::size_t b = poly[(i + 1) % poly.size()];
            const auto key = std::minmax(a, b);
            auto it = edge_to_face.find({key.first, key.second});
            if (it == edge_to_face.end()) {
                edge_to_face.emplace(std::pair{key.first, key.second}, topo.faces.size());
                entry.faces.push_back(topo.faces.size());
                entry.signs.push_back(+1);
                topo.faces.push_back({{a, b}, {c}});
            } else {
                auto& face = topo.faces[it->second];
                if (face.v[0] != b || face.v[1] != a)
                    throw MeshError("face adjacency: edge (" + std::to_string(a) + "," + std::to_string(b) +
                                    ") traversed twice in the same direction");
                face.cells.push_back(c);
                entry.faces.push_back(it->second);
                entry.signs.push_back(-1);
            }
        }
        topo.cells.push_back(std::move(entry));
    }
    return from_topology(topo);
}

Mesh Mesh::from_topology(const MeshTopology& topo)
{
    Mesh mesh;
    mesh.vertices_ = topo.vertices;
    for (const auto& p : mesh.vertices_)
        if (!std::isfinite(p.x()) || !std::isfinite(p.y()))
            throw MeshError("vertex with non-finite coordinates");

    const std::size_t nv = topo.vertices.size();
    const std::size_t nc = topo.cells.size();
    mesh.faces_.resize(topo.faces.size());
    for (std::size_t f = 0; f < topo.faces.size(); ++f) {
        const auto& entry = topo.faces[f];
        if (entry.cells.empty() || entry.cells.size() > 2)
            throw MeshError("face adjacency: face " + std::to_string(f) + " references " +
                            std::to_string(entry.cells.size()) + " cells");
        if (entry.v[0] >= nv || entry.v[1] >= nv || entry.v[0] == entry.v[1])
            throw MeshError("face " + std::to_string(f) + " has invalid vertex indices");
        for (std::size_t c : entry.cells)
            if (c >= nc)
                throw MeshError("face adjacency: face " + std::to_string(f) + " references unknown cell " +
                                std::to_string(c));
        if (entry.cells.size() == 2 && entry.cells[0] == entry.cells[1])
            throw MeshError("face adjacency: face " + std::to_string(f) + " lists the same cell twice");
        mesh.faces_[f].vertices = entry.v;
        mesh.faces_[f].cells[0] = entry.cells[0];
        if (entry.cells.size() == 2) mesh.faces_[f].cells[1] = entry.cells[1];
    }

    mesh.cells_.resize(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        const auto& entry = topo.cells[c];
        if (entry.faces.size() < 3)
            throw MeshError("cell " + std::to_string(c) + " has fewer than three faces");
        if (entry.faces.size() != entry.signs.size())
            throw MeshError("cell " + std::to_string(c) + " has mismatched faces/signs lengths");
        Cell& cell = mesh.cells_[c];
        cell.faces = entry.faces;
        cell.signs = entry.signs;
        for (std::size_t i = 0; i < entry.faces.size(); ++i) {
            const std::size_t f = entry.faces[i];
            if (f >= mesh.faces_.size())
                throw MeshError("cell " + std::to_string(c) + " references unknown face " + std::to_string(f));
            if (entry.signs[i] != 1 && entry.signs[i] != -1)
                throw MeshError("cell " + std::to_string(c) + " has a sign other than +1/-1");
            const auto& fc = mesh.faces_[f].cells;
            if (fc[0] != c && fc[1] != c)
                throw MeshError("face adjacency: cell " + std::to_string(c) + " uses face " + std::to_string(f) +
                                " which does not list it");
        }
        // Chain the oriented edges into a closed vertex loop.
        cell.vertices.resize(entry.faces.size());
        for (std::size_t i = 0; i < entry.faces.size(); ++i) {
            const auto& fv = mesh.faces_[entry.faces[i]].vertices;
            const std::size_t start = entry.signs[i] > 0 ? fv[0] : fv[1];
            const std::size_t end = entry.signs[i] > 0 ? fv[1] : fv[0];
            const auto& next = mesh.faces_[entry.faces[(i + 1) % entry.faces.size()]].vertices;
            const std::size_t next_start = entry.signs[(i + 1) % entry.faces.size()] > 0 ? next[0] : next[1];
            if (end != next_start)
                throw MeshError("cell boundary not closed: cell " + std::to_string(c) + " at face " +
                                std::to_string(entry.faces[i]));
            cell.vertices[i] = start;
        }
        std::vector<std::size_t> sorted = cell.vertices;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw MeshError("cell boundary not closed: cell " + std::to_string(c) + " visits a vertex twice");
    }
    for (std::size_t f = 0; f < mesh.faces_.size(); ++f) {
        for (std::size_t c : topo.faces[f].cells) {
            const auto& faces = mesh.cells_[c].faces;
            if (std::find(faces.begin(), faces.end(), f) == faces.end())
                throw MeshError("face adjacency: face " + std::to_string(f) + " lists cell " + std::to_string(c) +
                                " which does not use it");
        }
    }
    mesh.compute_geometry();
    return mesh;
}

void Mesh::compute_geometry()
{
    for (auto& face : faces_) {
        const Point& a = vertices_[face.vertices[0]];
        const Point& b = vertices_[face.vertices[1]];
        const Vector2 d = b - a;
        face.diameter = d.norm();
        face.tangent = d / face.diameter;
        face.normal = Vector2(face.tangent.y(), -face.tangent.x());
        face.midpoint = 0.5 * (a + b);
    }
    for (auto& cell : cells_) {
        double area = 0.0;
        Point first_moment = Point::Zero();
        const std::size_t n = cell.vertices.size();
        // Shift to the first vertex to limit cancellation.
        const Point origin = vertices_[cell.vertices[0]];
        for (std::size_t i = 0; i < n; ++i) {
            const Point p = vertices_[cell.vertices[i]] - origin;
            const Point q = vertices_[cell.vertices[(i + 1) % n]] - origin;
            const double cross = p.x() * q.y() - q.x() * p.y();
            area += 0.5 * cross;
            first_moment += cross * (p + q) / 6.0;
        }
        cell.area = area;
        cell.centroid = origin + (area != 0.0 ? Point(first_moment / area) : Point::Zero());
        cell.diameter = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                cell.diameter = std::max(cell.diameter, (vertices_[cell.vertices[i]] - vertices_[cell.vertices[j]]).norm());
        cell.touches_boundary = false;
        for (std::size_t f : cell.faces)
            if (faces_[f].is_boundary()) cell.touches_boundary = true;
    }
}

MeshTopology Mesh::topology() const
{
    MeshTopology topo;
    topo.vertices = vertices_;
    for (const auto& face : faces_) {
        MeshTopology::FaceEntry entry{face.vertices, {face.cells[0]}};
        if (!face.is_boundary()) entry.cells.push_back(face.cells[1]);
        topo.faces.push_back(std::move(entry));
    }
    for (const auto& cell : cells_)
        topo.cells.push_back({cell.faces, cell.signs});
    return topo;
}

std::size_t Mesh::num_boundary_faces() const
{
    return static_cast<std::size_t>(
        std::count_if(faces_.begin(), faces_.end(), [](const Face& f) { return f.is_boundary(); }));
}

std::array<Point, 2> Mesh::bounding_box() const
{
    Point lo = vertices_.front(), hi = vertices_.front();
    for (const auto& p : vertices_) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return {lo, hi};
}

double Mesh::h_max() const
{
    double h = 0.0;
    for (const auto& c : cells_) h = std::max(h, c.diameter);
    return h;
}

double Mesh::domain_area() const
{
    double area = 0.0;
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        const Face& face = faces_[f];
        if (!face.is_boundary()) continue;
        const Point& a = vertices_[face.vertices[0]];
        const Point& b = vertices_[face.vertices[1]];
        const int i = local_face_index(face.cells[0], f);
        area += 0.5 * cells_[face.cells[0]].signs[static_cast<std::size_t>(i)] * (a.x() * b.y() - b.x() * a.y());
    }
    return area;
}

int Mesh::local_face_index(std::size_t cell_id, std::size_t face_id) const
{
    const auto& faces = cells_[cell_id].faces;
    auto it = std::find(faces.begin(), faces.end(), face_id);
    return it == faces.end() ? -1 : static_cast<int>(it - faces.begin());
}

Mesh Mesh::with_flipped_face(std::size_t face_id) const
{
    MeshTopology topo = topology();
    auto& entry = topo.faces.at(face_id);
    std::swap(entry.v[0], entry.v[1]);
    for (std::size_t c : entry.cells) {
        const int i = local_face_index(c, face_id);
        topo.cells[c].signs[static_cast<std::size_t>(i)] *= -1;
    }
    return from_topology(topo);
}

namespace {

bool segments_cross(const Point& a, const Point& b, const Point& c, const Point& d)
{
    const double d1 = signed_area(c, d, a), d2 = signed_area(c, d, b);
    const double d3 = signed_area(a, b, c), d4 = signed_area(a, b, d);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

bool point_in_triangle(const Point& p, const Point& a, const Point& b, const Point& c)
{
    return signed_area(a, b, p) >= 0 && signed_area(b, c, p) >= 0 && signed_area(c, a, p) >= 0;
}

}  // namespace

SubTriangulation subtriangulate(const Mesh& mesh, std::size_t cell_id)
{
    const Cell& cell = mesh.cell(cell_id);
    std::vector<Point> poly;
    poly.reserve(cell.vertices.size());
    for (std::size_t v : cell.vertices) poly.push_back(mesh.vertex(v));
    const std::size_t n = poly.size();

    SubTriangulation sub;
    sub.cell = cell_id;
    if (n == 3) {
        if (signed_area(poly[0], poly[1], poly[2]) <= 0)
            throw MeshError("cell " + std::to_string(cell_id) + " is degenerate or clockwise");
        sub.triangles.push_back({poly[0], poly[1], poly[2]});
        return sub;
    }

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;
            if (segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]))
                throw MeshError("cell " + std::to_string(cell_id) + " is self-intersecting");
        }

    const double tol = 1e-14 * cell.diameter * cell.diameter;
    bool star = cell.area > tol;
    for (std::size_t i = 0; i < n && star; ++i)
        star = signed_area(cell.centroid, poly[i], poly[(i + 1) % n]) > tol;
    if (star) {
        for (std::size_t i = 0; i < n; ++i)
            sub.triangles.push_back({cell.centroid, poly[i], poly[(i + 1) % n]});
        return sub;
    }

    // Ear clipping.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    while (idx.size() > 3) {
        bool clipped = false;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const Point& a = poly[idx[(i + idx.size() - 1) % idx.size()]];
            const Point& b = poly[idx[i]];
            const Point& c = poly[idx[(i + 1) % idx.size()]];
            if (signed_area(a, b, c) <= tol) continue;
            bool ear = true;
            for (std::size_t j = 0; j < idx.size() && ear; ++j) {
                const Point& p = poly[idx[j]];
                if (&p == &a || &p == &b || &p == &c) continue;
                if (point_in_triangle(p, a, b, c)) ear = false;
            }
            if (!ear) continue;
            sub.triangles.push_back({a, b, c});
            idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
            clipped = true;
            break;
        }
        if (!clipped)
            throw MeshError("cell " + std::to_string(cell_id) + " could not be triangulated");
    }
    if (signed_area(poly[idx[0]], poly[idx[1]], poly[idx[2]]) <= tol)
        throw MeshError("cell " + std::to_string(cell_id) + " is degenerate");
    sub.triangles.push_back({poly[idx[0]], poly[idx[1]], poly[idx[2]]});
    return sub;
}

ValidationReport validate(const Mesh& mesh)
{
    ValidationReport report;
    auto fail = [&](const std::string& msg) {
        report.valid = false;
        report.failures.push_back(msg);
    };

    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        const Face& face = mesh.face(f);
        if (!(face.diameter > 0))
            fail("face " + std::to_string(f) + " has zero length");
        if (std::abs(face.normal.norm() - 1.0) > 1e-14)
            fail("face " + std::to_string(f) + " normal is not unit");
        if (std::abs(face.normal.dot(face.tangent)) > 1e-14)
            fail("face " + std::to_string(f) + " normal is not perpendicular to the segment");
        if (face.is_boundary()) {
            const int i = mesh.local_face_index(face.cells[0], f);
            if (i < 0 || mesh.cell(face.cells[0]).signs[static_cast<std::size_t>(i)] != 1)
                fail("boundary face " + std::to_string(f) + " is not outward oriented");
        }
    }

    double total_area = 0.0;
    report.rho = 1.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const Cell& cell = mesh.cell(c);
        report.max_faces_per_cell = std::max(report.max_faces_per_cell, cell.faces.size());
        total_area += cell.area;
        const double hk2 = cell.diameter * cell.diameter;
        if (!(cell.area > 1e-14 * hk2)) {
            fail("cell " + std::to_string(c) + " has non-positive area");
            continue;
        }
        for (std::size_t i = 0; i < cell.faces.size(); ++i) {
            const Face& face = mesh.face(cell.faces[i]);
            const bool forward = face.vertices[0] == cell.vertices[i];
            if ((cell.signs[i] > 0) != forward)
                fail("cell " + std::to_string(c) + " has an inconsistent sign for face " + std::to_string(cell.faces[i]));
            if (face.diameter > cell.diameter * (1 + 1e-12))
                fail("face " + std::to_string(cell.faces[i]) + " is longer than cell " + std::to_string(c));
        }
        try {
            const auto sub = subtriangulate(mesh, c);
            double sub_area = 0.0;
            for (const auto& tri : sub.triangles) {
                const double a = signed_area(tri[0], tri[1], tri[2]);
                if (a <= 0) fail("cell " + std::to_string(c) + " has a non-positive sub-triangle");
                sub_area += a;
                const double hs = diameter(tri);
                report.rho = std::min({report.rho, inradius(tri) / hs, hs / cell.diameter});
            }
            if (std::abs(sub_area - cell.area) > 1e-12 * hk2)
                fail("cell " + std::to_string(c) + " sub-triangulation area mismatch");
        } catch (const MeshError& e) {
            fail(e.what());
        }
    }

    const long euler = static_cast<long>(mesh.num_vertices()) - static_cast<long>(mesh.num_faces()) +
                       static_cast<long>(mesh.num_cells());
    if (euler != 1)
        fail("Euler relation violated: V - E + C = " + std::to_string(euler));
    const double domain = mesh.domain_area();
    if (std::abs(total_area - domain) > 1e-10 * std::max(1.0, domain))
        fail("cell areas do not sum to the domain area");
    return report;
}

}  // namespace hho
