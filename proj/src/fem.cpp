#include "vhi/fem.hpp"

#include "vhi/errors.hpp"

#include <algorithm>
#include <cmath>

namespace vhi {

DofMap::DofMap(const Mesh2D& mesh) : DofMap(mesh, mesh.vertices_on(BoundaryTag::dirichlet)) {}

DofMap::DofMap(const Mesh2D& mesh, const std::vector<bool>& fixed)
{
    if (static_cast<int>(fixed.size()) != mesh.num_vertices()) throw DimensionMismatch("fixed-vertex mask size");
    index_.resize(fixed.size());
    for (std::size_t v = 0; v < fixed.size(); ++v) {
        if (fixed[v]) {
            index_[v] = {-1, -1};
        } else {
            index_[v] = {num_free_, num_free_ + 1};
            num_free_ += 2;
        }
    }
    const auto w = contact_weights(mesh);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (w[static_cast<std::size_t>(v)] > 0.0 && !fixed[static_cast<std::size_t>(v)]) {
            contact_.push_back({v, w[static_cast<std::size_t>(v)]});
        }
    }
    std::stable_sort(contact_.begin(), contact_.end(), [&](const ContactVertex& a, const ContactVertex& b) {
        return mesh.vertex(a.vertex).x() < mesh.vertex(b.vertex).x();
    });
}

std::vector<double> contact_weights(const Mesh2D& mesh)
{
    std::vector<double> w(static_cast<std::size_t>(mesh.num_vertices()), 0.0);
    for (const auto& e : mesh.boundary_edges()) {
        if (e.tag != BoundaryTag::contact) continue;
        const double half = 0.5 * (mesh.vertex(e.v1) - mesh.vertex(e.v0)).norm();
        w[static_cast<std::size_t>(e.v0)] += half;
        w[static_cast<std::size_t>(e.v1)] += half;
    }
    return w;
}

Eigen::Matrix<double, 3, 6> p1_strain_matrix(const Point& a, const Point& b, const Point& c)
{
    const double twice_area = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    const std::array<Point, 3> p{a, b, c};
    Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
    for (int i = 0; i < 3; ++i) {
        const Point& q = p[static_cast<std::size_t>((i + 1) % 3)];
        const Point& r = p[static_cast<std::size_t>((i + 2) % 3)];
        const double dx = (q.y() - r.y()) / twice_area;
        const double dy = (r.x() - q.x()) / twice_area;
        B(0, 2 * i) = dx;
        B(1, 2 * i + 1) = dy;
        B(2, 2 * i) = 0.5 * dy;
        B(2, 2 * i + 1) = 0.5 * dx;
    }
    return B;
}

SparseMatrix assemble_full_p1(const Mesh2D& mesh, const Eigen::Matrix3d& energy)
{
    if (!mesh.is_triangular()) throw NonTriangleCell("P1 assembly requires a triangular mesh");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(36 * mesh.num_cells()));
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto cell = mesh.cell(c);
        const Point& a = mesh.vertex(cell[0]);
        const Point& b = mesh.vertex(cell[1]);
        const Point& d = mesh.vertex(cell[2]);
        const double area = 0.5 * ((b - a).x() * (d - a).y() - (b - a).y() * (d - a).x());
        const auto B = p1_strain_matrix(a, b, d);
        Eigen::Matrix<double, 6, 6> Ke = area * B.transpose() * energy * B;
        Ke = 0.5 * (Ke + Ke.transpose()).eval();
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) trip.emplace_back(2 * cell[i / 2] + i % 2, 2 * cell[j / 2] + j % 2, Ke(i, j));
        }
    }
    SparseMatrix K(2 * mesh.num_vertices(), 2 * mesh.num_vertices());
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

Assembled assemble_stiffness_p1(const Mesh2D& mesh, const MaterialParams& params)
{
    Assembled out;
    out.K_full = assemble_full_p1(mesh, strain_energy_matrix(params));
    out.dofs = DofMap(mesh);
    out.K = restrict_matrix(out.K_full, out.dofs);
    return out;
}

namespace {

std::vector<int> full_to_reduced(const DofMap& dofs)
{
    std::vector<int> map(static_cast<std::size_t>(2 * dofs.num_vertices()));
    for (int v = 0; v < dofs.num_vertices(); ++v) {
        map[static_cast<std::size_t>(2 * v)] = dofs.dof(v, 0);
        map[static_cast<std::size_t>(2 * v + 1)] = dofs.dof(v, 1);
    }
    return map;
}

void check_full(const Eigen::VectorXd& v, const DofMap& dofs, const char* what)
{
    if (v.size() != 2 * dofs.num_vertices()) throw DimensionMismatch(std::string(what) + ": full vector size");
}

}  // namespace

SparseMatrix restrict_matrix(const SparseMatrix& full, const DofMap& dofs)
{
    if (full.rows() != 2 * dofs.num_vertices() || full.cols() != full.rows()) {
        throw DimensionMismatch("restrict_matrix: matrix size");
    }
    const auto map = full_to_reduced(dofs);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(full.nonZeros()));
    for (int j = 0; j < full.outerSize(); ++j) {
        const int rj = map[static_cast<std::size_t>(j)];
        if (rj < 0) continue;
        for (SparseMatrix::InnerIterator it(full, j); it; ++it) {
            const int ri = map[static_cast<std::size_t>(it.row())];
            if (ri >= 0) trip.emplace_back(ri, rj, it.value());
        }
    }
    SparseMatrix K(dofs.num_free(), dofs.num_free());
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

Eigen::VectorXd restrict_vector(const Eigen::VectorXd& full, const DofMap& dofs)
{
    check_full(full, dofs, "restrict_vector");
    Eigen::VectorXd r(dofs.num_free());
    for (int v = 0; v < dofs.num_vertices(); ++v) {
        for (int c = 0; c < 2; ++c) {
            if (const int d = dofs.dof(v, c); d >= 0) r(d) = full(2 * v + c);
        }
    }
    return r;
}

Eigen::VectorXd expand(const Eigen::VectorXd& reduced, const DofMap& dofs, const Eigen::VectorXd& fixed_values)
{
    if (reduced.size() != dofs.num_free()) throw DimensionMismatch("expand: reduced vector size");
    Eigen::VectorXd full = fixed_values.size() == 0 ? Eigen::VectorXd::Zero(2 * dofs.num_vertices()) : fixed_values;
    check_full(full, dofs, "expand");
    for (int v = 0; v < dofs.num_vertices(); ++v) {
        for (int c = 0; c < 2; ++c) {
            if (const int d = dofs.dof(v, c); d >= 0) full(2 * v + c) = reduced(d);
        }
    }
    return full;
}

Eigen::VectorXd lift_dirichlet(const SparseMatrix& K_full, const Eigen::VectorXd& f_full, const Eigen::VectorXd& u_full,
                               const DofMap& dofs)
{
    check_full(f_full, dofs, "lift_dirichlet");
    check_full(u_full, dofs, "lift_dirichlet");
    Eigen::VectorXd u_fixed = u_full;
    for (int v = 0; v < dofs.num_vertices(); ++v) {
        if (!dofs.is_fixed(v)) u_fixed.segment<2>(2 * v).setZero();
    }
    return restrict_vector(f_full - K_full * u_fixed, dofs);
}

Eigen::VectorXd traction_load(const Mesh2D& mesh, const LoadSpec& load)
{
    load.validate();
    Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * mesh.num_vertices());
    for (const auto& e : mesh.boundary_edges()) {
        if (e.tag != BoundaryTag::neumann) continue;
        const Point& a = mesh.vertex(e.v0);
        const Point& b = mesh.vertex(e.v1);
        const Eigen::Vector2d t = a.x() < 0.5 ? load.f2_left : load.f2_right;
        // Parameter range s in [s0, s1] of a + s (b - a) with y >= y_min.
        double s0 = 0.0;
        double s1 = 1.0;
        const double dy = b.y() - a.y();
        if (dy == 0.0) {
            if (a.y() < load.traction_y_min) continue;
        } else {
            const double s_cut = (load.traction_y_min - a.y()) / dy;
            if (dy > 0.0) s0 = std::max(s0, s_cut);
            else s1 = std::min(s1, s_cut);
        }
        if (s1 <= s0) continue;
        const double len = (b - a).norm();
        // Integrals of (1 - s) and s over [s0, s1], times the edge length.
        const double ib = 0.5 * (s1 * s1 - s0 * s0) * len;
        const double ia = (s1 - s0) * len - ib;
        f.segment<2>(2 * e.v0) += ia * t;
        f.segment<2>(2 * e.v1) += ib * t;
    }
    return f;
}

Eigen::VectorXd assemble_full_load_p1(const Mesh2D& mesh, const LoadSpec& load)
{
    if (!mesh.is_triangular()) throw NonTriangleCell("P1 load assembly requires a triangular mesh");
    Eigen::VectorXd f = traction_load(mesh, load);
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto pts = mesh.cell_points(c);
        const double area = polygon_signed_area(pts);
        for (int v : mesh.cell(c)) f.segment<2>(2 * v) += (area / 3.0) * load.f0;
    }
    return f;
}

Eigen::VectorXd assemble_load(const Mesh2D& mesh, const DofMap& dofs, const LoadSpec& load)
{
    return restrict_vector(assemble_full_load_p1(mesh, load), dofs);
}

const TriangleRule& triangle_rule()
{
    static const TriangleRule rule = [] {
        // Gauss-Legendre on [0, 1], 4 points, mapped through the Duffy collapse.
        const double g[4] = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281, 0.9305681557970263};
        const double w[4] = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731, 0.1739274225687269};
        TriangleRule r;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                const double s = g[i];
                const double t = g[j] * (1.0 - s);
                r.bary.emplace_back(1.0 - s - t, s, t);
                r.weight.push_back(2.0 * w[i] * w[j] * (1.0 - s));
            }
        }
        return r;
    }();
    return rule;
}

Eigen::VectorXd assemble_body_load_p1(const Mesh2D& mesh, const VectorField& f)
{
    if (!mesh.is_triangular()) throw NonTriangleCell("P1 load assembly requires a triangular mesh");
    const auto& rule = triangle_rule();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * mesh.num_vertices());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto pts = mesh.cell_points(c);
        const double area = polygon_signed_area(pts);
        const auto cell = mesh.cell(c);
        for (std::size_t q = 0; q < rule.weight.size(); ++q) {
            const Eigen::Vector3d& l = rule.bary[q];
            const Point x = l(0) * pts[0] + l(1) * pts[1] + l(2) * pts[2];
            const Eigen::Vector2d fx = f(x);
            for (int i = 0; i < 3; ++i) out.segment<2>(2 * cell[i]) += area * rule.weight[q] * l(i) * fx;
        }
    }
    return out;
}

Eigen::VectorXd interpolate_full(const Mesh2D& mesh, const VectorField& field)
{
    Eigen::VectorXd u(2 * mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v) u.segment<2>(2 * v) = field(mesh.vertex(v));
    return u;
}

Eigen::VectorXd interpolate_p1(const Mesh2D& mesh, const DofMap& dofs, const VectorField& field)
{
    return restrict_vector(interpolate_full(mesh, field), dofs);
}

double energy_norm(const SparseMatrix& K, const Eigen::VectorXd& v)
{
    if (K.rows() != v.size() || K.cols() != v.size()) throw DimensionMismatch("energy_norm: sizes differ");
    return std::sqrt(std::max(0.0, v.dot(K * v)));
}

double energy_error_p1(const Mesh2D& mesh, const MaterialParams& params, const Eigen::VectorXd& u_full,
                       const GradientField& grad)
{
    if (u_full.size() != 2 * mesh.num_vertices()) throw DimensionMismatch("energy_error_p1: field size");
    const Eigen::Matrix3d W = strain_energy_matrix(params);
    const auto& rule = triangle_rule();
    double sum = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto pts = mesh.cell_points(c);
        const auto cell = mesh.cell(c);
        const double area = polygon_signed_area(pts);
        Eigen::Matrix<double, 6, 1> ue;
        for (int i = 0; i < 3; ++i) ue.segment<2>(2 * i) = u_full.segment<2>(2 * cell[i]);
        const Eigen::Vector3d eh = p1_strain_matrix(pts[0], pts[1], pts[2]) * ue;
        for (std::size_t q = 0; q < rule.weight.size(); ++q) {
            const Eigen::Vector3d& l = rule.bary[q];
            const Eigen::Matrix2d g = grad(l(0) * pts[0] + l(1) * pts[1] + l(2) * pts[2]);
            const Eigen::Vector3d e(g(0, 0), g(1, 1), 0.5 * (g(0, 1) + g(1, 0)));
            const Eigen::Vector3d d = eh - e;
            sum += area * rule.weight[q] * d.dot(W * d);
        }
    }
    return std::sqrt(sum);
}

double contact_trace_error(const Mesh2D& mesh, const Eigen::VectorXd& u_full, const VectorField& field)
{
    if (u_full.size() != 2 * mesh.num_vertices()) throw DimensionMismatch("contact_trace_error: field size");
    const double g[4] = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281, 0.9305681557970263};
    const double w[4] = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731, 0.1739274225687269};
    double sum = 0.0;
    for (const auto& e : mesh.boundary_edges()) {
        if (e.tag != BoundaryTag::contact) continue;
        const Point& a = mesh.vertex(e.v0);
        const Point& b = mesh.vertex(e.v1);
        const double len = (b - a).norm();
        for (int q = 0; q < 4; ++q) {
            const Eigen::Vector2d uh = (1.0 - g[q]) * u_full.segment<2>(2 * e.v0) + g[q] * u_full.segment<2>(2 * e.v1);
            sum += len * w[q] * (uh - field(a + g[q] * (b - a))).squaredNorm();
        }
    }
    return std::sqrt(sum);
}

}  // namespace vhi
