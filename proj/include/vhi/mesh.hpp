#pragma once

// Polygonal meshes of the unit square with tagged boundary edges.
//
// Boundary tagging rule: the edge y = 1 is clamped (Dirichlet), the sides
// x = 0 and x = 1 carry tractions (Neumann), and y = 0 is the contact
// boundary.

#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vhi {

using Point = Eigen::Vector2d;

enum class BoundaryTag { dirichlet, neumann, contact };

char tag_code(BoundaryTag tag);

struct BoundaryEdge {
    int v0 = 0;
    int v1 = 0;
    BoundaryTag tag = BoundaryTag::neumann;
};

class Mesh2D {
public:
    /// Validates every invariant. When `boundary` is empty the topological
    /// boundary is found and tagged by the unit-square rule.
    Mesh2D(std::vector<Point> vertices, std::vector<std::vector<int>> cells,
           std::vector<BoundaryEdge> boundary = {});

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<std::vector<int>>& cells() const { return cells_; }
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_cells() const { return static_cast<int>(cells_.size()); }
    const Point& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
    std::span<const int> cell(int c) const { return cells_[static_cast<std::size_t>(c)]; }

    /// Vertex coordinates of cell c in counterclockwise order.
    std::vector<Point> cell_points(int c) const;

    bool is_triangular() const;
    /// True when every vertex touches an edge with the given tag.
    std::vector<bool> vertices_on(BoundaryTag tag) const;
    double tagged_length(BoundaryTag tag) const;

private:
    void validate_cells() const;
    void build_or_check_boundary(std::vector<BoundaryEdge> given);

    std::vector<Point> vertices_;
    std::vector<std::vector<int>> cells_;
    std::vector<BoundaryEdge> boundary_;
};

/// Tag for a boundary segment by the unit-square rule; throws
/// InvariantViolation when the segment does not lie on a side.
BoundaryTag classify_boundary_segment(const Point& a, const Point& b);

double polygon_signed_area(std::span<const Point> poly);
Point polygon_centroid(std::span<const Point> poly);
double polygon_diameter(std::span<const Point> poly);

/// n x n squares split along the lower-left to upper-right diagonal.
Mesh2D gen_tri(int n);
/// n x n squares.
Mesh2D gen_quad(int n);

/// Parse the `vhimesh 1` text format.
Mesh2D load_poly(std::string_view text);
Mesh2D load_poly_file(const std::string& path);
/// Serialize with 17 significant digits so coordinates round-trip exactly.
std::string save_poly(const Mesh2D& mesh);

struct MeshQuality {
    double h = 0.0;
    double h_min = 0.0;
    /// Minimum over cells of min(vertex spacing, inscribed-disk diameter
    /// about the centroid) relative to the cell diameter.
    double delta_est = 0.0;

    bool is_shape_regular(double threshold = 0.05) const { return delta_est >= threshold; }
};

MeshQuality quality(const Mesh2D& mesh);
MeshQuality cell_quality(std::span<const Point> poly);

/// Containing cell and local coordinates of a point: barycentric (3) for
/// triangles, bilinear (s, t) for quadrilaterals, empty for other polygons.
struct PointLocation {
    int cell = -1;
    std::vector<double> local;
};

/// Locate every vertex of `reference` in `coarse`.
std::vector<PointLocation> prolongation_points(const Mesh2D& coarse, const Mesh2D& reference);

/// Reusable point locator over the cells of one mesh.
class CellLocator {
public:
    explicit CellLocator(const Mesh2D& mesh);
    CellLocator(Mesh2D&&) = delete;
    /// Throws PointNotLocated when no cell contains p within `slack`.
    PointLocation locate(const Point& p, double slack = 1e-12) const;

private:
    const Mesh2D& mesh_;
    Point lo_;
    Point hi_;
    int grid_ = 1;
    std::vector<std::vector<int>> buckets_;
};

}  // namespace vhi
