#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hho {

using Point = Eigen::Vector2d;
using Vector2 = Eigen::Vector2d;

constexpr std::size_t no_cell = static_cast<std::size_t>(-1);

/// Raised for malformed mesh input (schema, topology, or geometry).
class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A straight mesh edge. The normal is the tangent rotated clockwise, so it
/// points out of the cell that traverses the face from vertices[0] to
/// vertices[1]. Boundary faces are stored with the outward orientation.
struct Face {
    std::array<std::size_t, 2> vertices{};
    std::array<std::size_t, 2> cells{no_cell, no_cell};
    Vector2 normal = Vector2::Zero();
    Vector2 tangent = Vector2::Zero();
    Point midpoint = Point::Zero();
    double diameter = 0.0;

    bool is_boundary() const { return cells[1] == no_cell; }
    std::size_t num_cells() const { return cells[1] == no_cell ? 1 : 2; }
};

struct Cell {
    /// Counterclockwise loop of faces.
    std::vector<std::size_t> faces;
    /// sign[i] = n_F . n_K for faces[i]; +1 when the face normal points out of the cell.
    std::vector<int> signs;
    /// Counterclockwise vertex loop; vertices[i] is the start of faces[i].
    std::vector<std::size_t> vertices;
    Point centroid = Point::Zero();
    double area = 0.0;
    double diameter = 0.0;

    bool touches_boundary = false;
};

/// Raw topology as it appears in the JSON file format.
struct MeshTopology {
    struct FaceEntry {
        std::array<std::size_t, 2> v{};
        std::vector<std::size_t> cells;
    };
    struct CellEntry {
        std::vector<std::size_t> faces;
        std::vector<int> signs;
    };
    std::vector<Point> vertices;
    std::vector<FaceEntry> faces;
    std::vector<CellEntry> cells;
};

/// Immutable polygonal mesh of a 2D polygonal domain.
class Mesh {
public:
    Mesh() = default;

    /// Builds a mesh from polygons given as counterclockwise vertex loops.
    /// Faces are created for every distinct vertex pair in the loops.
    static Mesh from_polygons(std::vector<Point> vertices,
                              const std::vector<std::vector<std::size_t>>& polygons);

    /// Builds a mesh from an explicit face/cell topology; throws MeshError
    /// on adjacency or loop-closure defects.
    static Mesh from_topology(const MeshTopology& topo);

    MeshTopology topology() const;

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return faces_; }
    const std::vector<Cell>& cells() const { return cells_; }
    const Point& vertex(std::size_t i) const { return vertices_[i]; }
    const Face& face(std::size_t i) const { return faces_[i]; }
    const Cell& cell(std::size_t i) const { return cells_[i]; }
    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_faces() const { return faces_.size(); }
    std::size_t num_cells() const { return cells_.size(); }
    std::size_t num_boundary_faces() const;
    std::size_t num_interior_faces() const { return num_faces() - num_boundary_faces(); }

    /// Axis-aligned bounding box as {min, max}.
    std::array<Point, 2> bounding_box() const;
    /// Largest cell diameter.
    double h_max() const;
    /// Area enclosed by the boundary faces.
    double domain_area() const;

    /// Local index of a face in the cell's loop, or -1.
    int local_face_index(std::size_t cell_id, std::size_t face_id) const;

    /// Reverses the stored direction of an interior face, flipping its normal,
    /// tangent, and the signs of both adjacent cells.
    Mesh with_flipped_face(std::size_t face_id) const;

private:
    void compute_geometry();

    std::vector<Point> vertices_;
    std::vector<Face> faces_;
    std::vector<Cell> cells_;
};

struct ValidationReport {
    bool valid = true;
    std::vector<std::string> failures;
    /// Shape-regularity estimate: min over sub-triangles S of min(r_S/h_S, h_S/h_K).
    double rho = 0.0;
    std::size_t max_faces_per_cell = 0;
};

ValidationReport validate(const Mesh& mesh);

struct SubTriangulation {
    std::size_t cell = 0;
    std::vector<std::array<Point, 3>> triangles;
};

/// Centroid fan when the cell is star-shaped with respect to its centroid,
/// ear clipping otherwise. Throws MeshError for self-intersecting loops.
SubTriangulation subtriangulate(const Mesh& mesh, std::size_t cell_id);

double signed_area(const Point& a, const Point& b, const Point& c);
/// Inradius of a triangle.
double inradius(const std::array<Point, 3>& tri);
double diameter(const std::array<Point, 3>& tri);

// Generators on the unit square.
Mesh build_rect_mesh(int nx, int ny);
Mesh build_tri_mesh(int n);
Mesh build_voronoi_mesh(int n_cells, std::uint64_t seed, int lloyd_iters);

// JSON file format "hho-mesh-v1".
void save_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh load_mesh(const std::filesystem::path& path);
std::string mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const std::string& text);

}  // namespace hho
