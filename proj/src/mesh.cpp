#include "vhi/mesh.hpp"

#include "vhi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace vhi {

namespace {

constexpr double kSideTol = 1e-12;

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

int orientation(const Point& a, const Point& b, const Point& c)
{
    const double v = cross(b - a, c - a);
    return (v > 0.0) - (v < 0.0);
}

bool on_segment(const Point& a, const Point& b, const Point& p)
{
    return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) && std::min(a.y(), b.y()) <= p.y() &&
           p.y() <= std::max(a.y(), b.y());
}

bool segments_touch(const Point& a, const Point& b, const Point& c, const Point& d)
{
    const int o1 = orientation(a, b, c);
    const int o2 = orientation(a, b, d);
    const int o3 = orientation(c, d, a);
    const int o4 = orientation(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

double point_segment_distance(const Point& p, const Point& a, const Point& b)
{
    const Point ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (a + t * ab - p).norm();
}

std::pair<int, int> edge_key(int a, int b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

std::string cell_label(std::size_t c) { return "cell " + std::to_string(c); }

}  // namespace

char tag_code(BoundaryTag tag)
{
    switch (tag) {
    case BoundaryTag::dirichlet: return 'D';
    case BoundaryTag::neumann: return 'N';
    case BoundaryTag::contact: return 'C';
    }
    return '?';
}

BoundaryTag classify_boundary_segment(const Point& a, const Point& b)
{
    auto near = [](double v, double target) { return std::abs(v - target) <= kSideTol; };
    if (near(a.y(), 1.0) && near(b.y(), 1.0)) return BoundaryTag::dirichlet;
    if (near(a.y(), 0.0) && near(b.y(), 0.0)) return BoundaryTag::contact;
    if ((near(a.x(), 0.0) && near(b.x(), 0.0)) || (near(a.x(), 1.0) && near(b.x(), 1.0))) return BoundaryTag::neumann;
    std::ostringstream msg;
    msg << "boundary edge (" << a.x() << "," << a.y() << ")-(" << b.x() << "," << b.y()
        << ") does not lie on a side of the unit square";
    throw InvariantViolation(msg.str());
}

double polygon_signed_area(std::span<const Point> poly)
{
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
    return 0.5 * a;
}

Point polygon_centroid(std::span<const Point> poly)
{
    // Shift to the first vertex to limit cancellation.
    const Point o = poly[0];
    double a = 0.0;
    Point c = Point::Zero();
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point p = poly[i] - o;
        const Point q = poly[(i + 1) % poly.size()] - o;
        const double w = cross(p, q);
        a += w;
        c += w * (p + q);
    }
    return o + c / (3.0 * a);
}

double polygon_diameter(std::span<const Point> poly)
{
    double d = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        for (std::size_t j = i + 1; j < poly.size(); ++j) d = std::max(d, (poly[i] - poly[j]).norm());
    }
    return d;
}

// ---------------------------------------------------------------------------
// Mesh2D

Mesh2D::Mesh2D(std::vector<Point> vertices, std::vector<std::vector<int>> cells, std::vector<BoundaryEdge> boundary)
    : vertices_(std::move(vertices)), cells_(std::move(cells))
{
    validate_cells();
    build_or_check_boundary(std::move(boundary));
}

std::vector<Point> Mesh2D::cell_points(int c) const
{
    std::vector<Point> pts;
    pts.reserve(cells_[static_cast<std::size_t>(c)].size());
    for (int v : cells_[static_cast<std::size_t>(c)]) pts.push_back(vertices_[static_cast<std::size_t>(v)]);
    return pts;
}

bool Mesh2D::is_triangular() const
{
    return std::all_of(cells_.begin(), cells_.end(), [](const auto& c) { return c.size() == 3; });
}

void Mesh2D::validate_cells() const
{
    if (vertices_.empty() || cells_.empty()) throw InvariantViolation("mesh has no vertices or no cells");
    for (const Point& p : vertices_) {
        if (!std::isfinite(p.x()) || !std::isfinite(p.y())) throw InvariantViolation("non-finite vertex coordinate");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        const auto& cell = cells_[c];
        if (cell.size() < 3) throw InvariantViolation(cell_label(c) + " has fewer than 3 vertices");
        for (int v : cell) {
            if (v < 0 || v >= num_vertices()) throw InvariantViolation(cell_label(c) + " references a missing vertex");
        }
        std::vector<int> sorted = cell;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw InvariantViolation(cell_label(c) + " repeats a vertex");
        }
        const auto pts = cell_points(static_cast<int>(c));
        const double area = polygon_signed_area(pts);
        const double diam = polygon_diameter(pts);
        if (!(area > 1e-14 * diam * diam)) {
            throw InvariantViolation(cell_label(c) + (area < 0.0 ? " is clockwise" : " is degenerate"));
        }
        const std::size_t n = pts.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 2; j < n; ++j) {
                if (i == 0 && j == n - 1) continue;
                if (segments_touch(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n])) {
                    throw InvariantViolation(cell_label(c) + " is not a simple polygon");
                }
            }
        }
        total += area;
    }
    if (std::abs(total - 1.0) > 1e-10) {
        std::ostringstream msg;
        msg << std::setprecision(12) << "cell areas sum to " << total << ", expected 1 (unit square coverage)";
        throw InvariantViolation(msg.str());
    }
}

void Mesh2D::build_or_check_boundary(std::vector<BoundaryEdge> given)
{
    // Count directed uses of each undirected edge.
    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> uses;
    for (const auto& cell : cells_) {
        for (std::size_t i = 0; i < cell.size(); ++i) {
            const int a = cell[i];
            const int b = cell[(i + 1) % cell.size()];
            uses[edge_key(a, b)].emplace_back(a, b);
        }
    }
    std::vector<std::pair<int, int>> topo;
    for (const auto& [key, dirs] : uses) {
        if (dirs.size() > 2) {
            throw InvariantViolation("edge " + std::to_string(key.first) + "-" + std::to_string(key.second) +
                                     " is shared by more than two cells");
        }
        if (dirs.size() == 2 && dirs[0] == dirs[1]) {
            throw InvariantViolation("edge " + std::to_string(key.first) + "-" + std::to_string(key.second) +
                                     " has inconsistent orientation");
        }
        if (dirs.size() == 1) topo.push_back(dirs[0]);
    }

    if (given.empty()) {
        for (const auto& [a, b] : topo) {
            boundary_.push_back({a, b, classify_boundary_segment(vertices_[static_cast<std::size_t>(a)],
                                                                 vertices_[static_cast<std::size_t>(b)])});
        }
    } else {
        std::map<std::pair<int, int>, std::pair<int, int>> topo_set;
        for (const auto& e : topo) topo_set[edge_key(e.first, e.second)] = e;
        std::map<std::pair<int, int>, BoundaryTag> seen;
        for (const auto& e : given) {
            const auto key = edge_key(e.v0, e.v1);
            auto it = topo_set.find(key);
            if (it == topo_set.end()) {
                throw InvariantViolation("boundary edge " + std::to_string(e.v0) + "-" + std::to_string(e.v1) +
                                         " is not on the mesh boundary");
            }
            if (!seen.emplace(key, e.tag).second) {
                throw InvariantViolation("boundary edge " + std::to_string(e.v0) + "-" + std::to_string(e.v1) +
                                         " is listed twice");
            }
            if (e.tag != classify_boundary_segment(vertex(e.v0), vertex(e.v1))) {
                throw InvariantViolation("boundary edge " + std::to_string(e.v0) + "-" + std::to_string(e.v1) +
                                         " has tag " + tag_code(e.tag) + " but lies on a side tagged " +
                                         tag_code(classify_boundary_segment(vertex(e.v0), vertex(e.v1))));
            }
        }
        if (seen.size() != topo_set.size()) throw InvariantViolation("boundary section does not cover the boundary");
        for (const auto& [key, e] : topo_set) boundary_.push_back({e.first, e.second, seen.at(key)});
    }

    double len = 0.0;
    for (const auto& e : boundary_) len += (vertex(e.v1) - vertex(e.v0)).norm();
    if (std::abs(len - 4.0) > 1e-10) throw InvariantViolation("boundary length differs from 4");
}

std::vector<bool> Mesh2D::vertices_on(BoundaryTag tag) const
{
    std::vector<bool> on(vertices_.size(), false);
    for (const auto& e : boundary_) {
        if (e.tag != tag) continue;
        on[static_cast<std::size_t>(e.v0)] = true;
        on[static_cast<std::size_t>(e.v1)] = true;
    }
    return on;
}

double Mesh2D::tagged_length(BoundaryTag tag) const
{
    double len = 0.0;
    for (const auto& e : boundary_) {
        if (e.tag == tag) len += (vertex(e.v1) - vertex(e.v0)).norm();
    }
    return len;
}

// ---------------------------------------------------------------------------
// Generators

namespace {

std::vector<Point> grid_vertices(int n)
{
    std::vector<Point> v;
    v.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) v.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
    }
    return v;
}

}  // namespace

Mesh2D gen_tri(int n)
{
    if (n < 1) throw std::invalid_argument("gen_tri requires n >= 1");
    std::vector<std::vector<int>> cells;
    cells.reserve(static_cast<std::size_t>(2 * n * n));
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    return Mesh2D(grid_vertices(n), std::move(cells));
}

Mesh2D gen_quad(int n)
{
    if (n < 1) throw std::invalid_argument("gen_quad requires n >= 1");
    std::vector<std::vector<int>> cells;
    cells.reserve(static_cast<std::size_t>(n * n));
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    }
    return Mesh2D(grid_vertices(n), std::move(cells));
}

// ---------------------------------------------------------------------------
// Text format

namespace {

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    // Next non-empty line with comments stripped; false at end of input.
    bool next(std::istringstream& out)
    {
        while (pos_ < text_.size()) {
            const auto end = text_.find('\n', pos_);
            std::string line(text_.substr(pos_, end == std::string_view::npos ? std::string_view::npos : end - pos_));
            pos_ = end == std::string_view::npos ? text_.size() : end + 1;
            ++line_;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            out.clear();
            out.str(line);
            return true;
        }
        return false;
    }

    int line() const { return line_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 0;
};

void expect_end(std::istringstream& in, int line)
{
    std::string extra;
    if (in >> extra) throw ParseError(line, "unexpected token '" + extra + "'");
}

long read_count(LineReader& r, std::istringstream& in, const std::string& keyword)
{
    if (!r.next(in)) throw ParseError(r.line(), "missing section '" + keyword + "'");
    std::string word;
    long count = -1;
    if (!(in >> word) || word != keyword) throw ParseError(r.line(), "expected section '" + keyword + "'");
    if (!(in >> count) || count < 0) throw ParseError(r.line(), "bad count for section '" + keyword + "'");
    expect_end(in, r.line());
    return count;
}

}  // namespace

Mesh2D load_poly(std::string_view text)
{
    LineReader r(text);
    std::istringstream in;
    if (!r.next(in)) throw ParseError(r.line(), "empty mesh file");
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "vhimesh" || version != 1) {
        throw ParseError(r.line(), "expected header 'vhimesh 1'");
    }
    expect_end(in, r.line());

    const long nv = read_count(r, in, "vertices");
    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>(nv));
    for (long i = 0; i < nv; ++i) {
        if (!r.next(in)) throw ParseError(r.line(), "missing vertex line");
        double x = 0.0;
        double y = 0.0;
        if (!(in >> x >> y)) throw ParseError(r.line(), "expected 'x y'");
        expect_end(in, r.line());
        vertices.emplace_back(x, y);
    }

    const long nc = read_count(r, in, "cells");
    std::vector<std::vector<int>> cells;
    cells.reserve(static_cast<std::size_t>(nc));
    for (long c = 0; c < nc; ++c) {
        if (!r.next(in)) throw ParseError(r.line(), "missing cell line");
        int k = 0;
        if (!(in >> k) || k < 3) throw ParseError(r.line(), "cell needs a vertex count >= 3");
        std::vector<int> cell(static_cast<std::size_t>(k));
        for (int& v : cell) {
            if (!(in >> v)) throw ParseError(r.line(), "cell has fewer indices than declared");
            if (v < 0 || v >= nv) throw ParseError(r.line(), "vertex index out of range");
        }
        expect_end(in, r.line());
        cells.push_back(std::move(cell));
    }

    std::vector<BoundaryEdge> boundary;
    if (r.next(in)) {
        std::string word;
        long nb = -1;
        if (!(in >> word) || word != "boundary") throw ParseError(r.line(), "expected section 'boundary'");
        if (!(in >> nb) || nb < 0) throw ParseError(r.line(), "bad count for section 'boundary'");
        expect_end(in, r.line());
        for (long b = 0; b < nb; ++b) {
            if (!r.next(in)) throw ParseError(r.line(), "missing boundary line");
            BoundaryEdge e;
            std::string tag;
            if (!(in >> e.v0 >> e.v1 >> tag)) throw ParseError(r.line(), "expected 'i j tag'");
            if (e.v0 < 0 || e.v0 >= nv || e.v1 < 0 || e.v1 >= nv) throw ParseError(r.line(), "vertex index out of range");
            if (tag == "D") e.tag = BoundaryTag::dirichlet;
            else if (tag == "N") e.tag = BoundaryTag::neumann;
            else if (tag == "C") e.tag = BoundaryTag::contact;
            else throw ParseError(r.line(), "unknown boundary tag '" + tag + "'");
            expect_end(in, r.line());
            boundary.push_back(e);
        }
        if (r.next(in)) throw ParseError(r.line(), "trailing content after boundary section");
    }
    return Mesh2D(std::move(vertices), std::move(cells), std::move(boundary));
}

Mesh2D load_poly_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mesh file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return load_poly(buf.str());
}

std::string save_poly(const Mesh2D& mesh)
{
    std::ostringstream out;
    out << std::setprecision(17);
    out << "vhimesh 1\n";
    out << "vertices " << mesh.num_vertices() << "\n";
    for (const Point& p : mesh.vertices()) out << p.x() << " " << p.y() << "\n";
    out << "cells " << mesh.num_cells() << "\n";
    for (const auto& cell : mesh.cells()) {
        out << cell.size();
        for (int v : cell) out << " " << v;
        out << "\n";
    }
    out << "boundary " << mesh.boundary_edges().size() << "\n";
    for (const auto& e : mesh.boundary_edges()) out << e.v0 << " " << e.v1 << " " << tag_code(e.tag) << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Quality

MeshQuality cell_quality(std::span<const Point> poly)
{
    const double diam = polygon_diameter(poly);
    double spacing = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poly.size(); ++i) {
        for (std::size_t j = i + 1; j < poly.size(); ++j) spacing = std::min(spacing, (poly[i] - poly[j]).norm());
    }
    const Point c = polygon_centroid(poly);
    double inradius = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poly.size(); ++i) {
        inradius = std::min(inradius, point_segment_distance(c, poly[i], poly[(i + 1) % poly.size()]));
    }
    return {diam, diam, std::min(spacing, 2.0 * inradius) / diam};
}

MeshQuality quality(const Mesh2D& mesh)
{
    MeshQuality q{0.0, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto pts = mesh.cell_points(c);
        const MeshQuality cq = cell_quality(pts);
        q.h = std::max(q.h, cq.h);
        q.h_min = std::min(q.h_min, cq.h);
        q.delta_est = std::min(q.delta_est, cq.delta_est);
    }
    return q;
}

// ---------------------------------------------------------------------------
// Point location

namespace {

bool inside_polygon(std::span<const Point> poly, const Point& p, double slack)
{
    bool in = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = poly[i];
        const Point& b = poly[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
            if (p.x() < x) in = !in;
        }
    }
    if (in) return true;
    for (std::size_t i = 0; i < n; ++i) {
        if (point_segment_distance(p, poly[i], poly[(i + 1) % n]) <= slack) return true;
    }
    return false;
}

std::vector<double> local_coordinates(std::span<const Point> poly, const Point& p)
{
    if (poly.size() == 3) {
        const double area = cross(poly[1] - poly[0], poly[2] - poly[0]);
        const double l1 = cross(p - poly[0], poly[2] - poly[0]) / area;
        const double l2 = cross(poly[1] - poly[0], p - poly[0]) / area;
        return {1.0 - l1 - l2, l1, l2};
    }
    if (poly.size() == 4) {
        // Invert the bilinear map x(s,t) = sum N_i(s,t) x_i by Newton.
        double s = 0.5;
        double t = 0.5;
        for (int it = 0; it < 30; ++it) {
            const Point x = (1 - s) * (1 - t) * poly[0] + s * (1 - t) * poly[1] + s * t * poly[2] + (1 - s) * t * poly[3];
            const Point r = x - p;
            if (r.norm() <= 1e-15 * std::max(1.0, p.norm())) break;
            const Point ds = (1 - t) * (poly[1] - poly[0]) + t * (poly[2] - poly[3]);
            const Point dt = (1 - s) * (poly[3] - poly[0]) + s * (poly[2] - poly[1]);
            const double det = cross(ds, dt);
            s -= cross(r, dt) / det;
            t -= cross(ds, r) / det;
        }
        return {s, t};
    }
    return {};
}

}  // namespace

CellLocator::CellLocator(const Mesh2D& mesh) : mesh_(mesh)
{
    lo_ = mesh.vertices().front();
    hi_ = lo_;
    for (const Point& p : mesh.vertices()) {
        lo_ = lo_.cwiseMin(p);
        hi_ = hi_.cwiseMax(p);
    }
    grid_ = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(mesh.num_cells())))));
    buckets_.assign(static_cast<std::size_t>(grid_ * grid_), {});
    const Point span = (hi_ - lo_).cwiseMax(Point(1e-300, 1e-300));
    auto bucket = [&](double v, double lo, double w) {
        return std::clamp(static_cast<int>(std::floor((v - lo) / w * grid_)), 0, grid_ - 1);
    };
    for (int c = 0; c < mesh.num_cells(); ++c) {
        Point blo = mesh.vertex(mesh.cell(c)[0]);
        Point bhi = blo;
        for (int v : mesh.cell(c)) {
            blo = blo.cwiseMin(mesh.vertex(v));
            bhi = bhi.cwiseMax(mesh.vertex(v));
        }
        const double pad = 1e-9 * std::max(span.x(), span.y());
        const int i0 = bucket(blo.x() - pad, lo_.x(), span.x());
        const int i1 = bucket(bhi.x() + pad, lo_.x(), span.x());
        const int j0 = bucket(blo.y() - pad, lo_.y(), span.y());
        const int j1 = bucket(bhi.y() + pad, lo_.y(), span.y());
        for (int j = j0; j <= j1; ++j) {
            for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j * grid_ + i)].push_back(c);
        }
    }
}

PointLocation CellLocator::locate(const Point& p, double slack) const
{
    const Point span = (hi_ - lo_).cwiseMax(Point(1e-300, 1e-300));
    const int i = std::clamp(static_cast<int>(std::floor((p.x() - lo_.x()) / span.x() * grid_)), 0, grid_ - 1);
    const int j = std::clamp(static_cast<int>(std::floor((p.y() - lo_.y()) / span.y() * grid_)), 0, grid_ - 1);
    for (int c : buckets_[static_cast<std::size_t>(j * grid_ + i)]) {
        const auto pts = mesh_.cell_points(c);
        if (inside_polygon(pts, p, slack)) return {c, local_coordinates(pts, p)};
    }
    std::ostringstream msg;
    msg << "point (" << p.x() << ", " << p.y() << ") lies outside every cell";
    throw PointNotLocated(msg.str());
}

std::vector<PointLocation> prolongation_points(const Mesh2D& coarse, const Mesh2D& reference)
{
    const CellLocator locator(coarse);
    std::vector<PointLocation> out;
    out.reserve(static_cast<std::size_t>(reference.num_vertices()));
    for (const Point& p : reference.vertices()) out.push_back(locator.locate(p));
    return out;
}

}  // namespace vhi
