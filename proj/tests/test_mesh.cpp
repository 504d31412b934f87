#include "vhi/errors.hpp"
#include "vhi/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <string>

using namespace vhi;

namespace {

const char* kSquare = R"(vhimesh 1
# one cell
vertices 4
0 0
1 0
1 1
0 1
cells 1
4 0 1 2 3
)";

std::string voronoi_path() { return std::string(VHI_DATA_DIR) + "/sample_voronoi.vhimesh"; }

std::set<std::pair<double, double>> vertex_set(const Mesh2D& m)
{
    std::set<std::pair<double, double>> s;
    for (const Point& p : m.vertices()) s.insert({p.x(), p.y()});
    return s;
}

}  // namespace

TEST(GenTri, Counts)
{
    const Mesh2D m = gen_tri(2);
    EXPECT_EQ(m.num_vertices(), 9);
    EXPECT_EQ(m.num_cells(), 8);
    EXPECT_TRUE(m.is_triangular());
    for (int n : {1, 3, 7}) {
        const Mesh2D g = gen_tri(n);
        EXPECT_EQ(g.num_vertices(), (n + 1) * (n + 1));
        EXPECT_EQ(g.num_cells(), 2 * n * n);
    }
}

TEST(GenTri, SingleCellBottomIsContact)
{
    const Mesh2D m = gen_tri(1);
    int contact = 0;
    for (const auto& e : m.boundary_edges()) {
        const bool bottom = m.vertex(e.v0).y() == 0.0 && m.vertex(e.v1).y() == 0.0;
        if (bottom) {
            EXPECT_EQ(e.tag, BoundaryTag::contact);
            ++contact;
        }
    }
    EXPECT_EQ(contact, 1);
}

TEST(GenTri, DiagonalAndDiameter)
{
    const MeshQuality q = quality(gen_tri(8));
    EXPECT_NEAR(q.h, std::sqrt(2.0) / 8.0, 1e-15);
    EXPECT_NEAR(q.h_min, q.h, 1e-15);
    const Mesh2D m = gen_tri(1);
    for (int c = 0; c < m.num_cells(); ++c) {
        std::set<std::pair<double, double>> pts;
        for (const Point& p : m.cell_points(c)) pts.insert({p.x(), p.y()});
        EXPECT_TRUE(pts.count({0.0, 0.0}) && pts.count({1.0, 1.0}));
    }
}

TEST(GenQuad, CountsAndShape)
{
    EXPECT_EQ(gen_quad(8).num_cells(), 64);
    EXPECT_EQ(gen_quad(8).num_vertices(), 81);
    const Mesh2D m = gen_quad(2);
    for (int c = 0; c < m.num_cells(); ++c) {
        const auto pts = m.cell_points(c);
        ASSERT_EQ(pts.size(), 4u);
        EXPECT_NEAR(polygon_signed_area(pts), 0.25, 1e-15);
    }
    EXPECT_NEAR(quality(gen_quad(16)).delta_est, 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(quality(gen_quad(8)).h, std::sqrt(2.0) / 8.0, 1e-15);
}

TEST(MeshInvariants, BoundaryLengthsAndTags)
{
    for (const Mesh2D& m : {gen_tri(5), gen_quad(6), load_poly_file(voronoi_path())}) {
        double total = 0.0;
        for (BoundaryTag t : {BoundaryTag::dirichlet, BoundaryTag::neumann, BoundaryTag::contact}) total += m.tagged_length(t);
        EXPECT_NEAR(total, 4.0, 1e-10);
        EXPECT_NEAR(m.tagged_length(BoundaryTag::contact), 1.0, 1e-10);
        EXPECT_NEAR(m.tagged_length(BoundaryTag::dirichlet), 1.0, 1e-10);
        for (const auto& e : m.boundary_edges()) {
            const Point mid = 0.5 * (m.vertex(e.v0) + m.vertex(e.v1));
            if (e.tag == BoundaryTag::contact) EXPECT_NEAR(mid.y(), 0.0, 1e-14);
            if (e.tag == BoundaryTag::dirichlet) EXPECT_NEAR(mid.y(), 1.0, 1e-14);
            if (e.tag == BoundaryTag::neumann) EXPECT_TRUE(std::abs(mid.x()) < 1e-14 || std::abs(mid.x() - 1) < 1e-14);
        }
    }
}

TEST(MeshInvariants, Nestedness)
{
    for (int n : {1, 2, 4, 8}) {
        const auto tc = vertex_set(gen_tri(n)), tf = vertex_set(gen_tri(2 * n));
        const auto qc = vertex_set(gen_quad(n)), qf = vertex_set(gen_quad(2 * n));
        for (const auto& p : tc) EXPECT_TRUE(tf.count(p));
        for (const auto& p : qc) EXPECT_TRUE(qf.count(p));
    }
}

TEST(LoadPoly, SingleSquare)
{
    const Mesh2D m = load_poly(kSquare);
    EXPECT_EQ(m.num_vertices(), 4);
    EXPECT_EQ(m.num_cells(), 1);
    EXPECT_EQ(m.boundary_edges().size(), 4u);
}

TEST(LoadPoly, ClockwiseCellRejected)
{
    const std::string text = "vhimesh 1\nvertices 4\n0 0\n1 0\n1 1\n0 1\ncells 1\n4 0 3 2 1\n";
    try {
        load_poly(text);
        FAIL();
    } catch (const InvariantViolation& e) {
        EXPECT_NE(std::string(e.what()).find("cell 0"), std::string::npos);
    }
}

TEST(LoadPoly, CoverageDeficitRejected)
{
    const std::string text = "vhimesh 1\nvertices 4\n0 0\n1 0\n1 0.9\n0 0.9\ncells 1\n4 0 1 2 3\n";
    EXPECT_THROW(load_poly(text), InvariantViolation);
}

TEST(LoadPoly, ParseErrorsCarryLineNumbers)
{
    const std::vector<std::pair<std::string, int>> cases = {
        {"vhimesh 2\n", 1},
        {"vhimesh 1\nvertices 4\n0 0\n1 0\n1 x\n", 5},
        {"vhimesh 1\n\n# c\nvertices 1\n0 0\ncells 1\n3 0 0 7\n", 7},
        {"vhimesh 1\nvertices 4\n0 0\n1 0\n1 1\n0 1\ncells 1\n4 0 1 2 3\nboundary 1\n0 1 Q\n", 10},
    };
    for (const auto& [text, line] : cases) {
        try {
            load_poly(text);
            FAIL() << text;
        } catch (const ParseError& e) {
            EXPECT_EQ(e.line(), line) << e.what();
        }
    }
}

TEST(LoadPoly, ExplicitBoundaryChecked)
{
    const std::string base = "vhimesh 1\nvertices 4\n0 0\n1 0\n1 1\n0 1\ncells 1\n4 0 1 2 3\n";
    EXPECT_NO_THROW(load_poly(base + "boundary 4\n0 1 C\n1 2 N\n2 3 D\n3 0 N\n"));
    EXPECT_THROW(load_poly(base + "boundary 3\n0 1 C\n1 2 N\n2 3 D\n"), InvariantViolation);
    EXPECT_THROW(load_poly(base + "boundary 4\n0 1 N\n1 2 N\n2 3 D\n3 0 N\n"), InvariantViolation);
}

TEST(LoadPoly, RejectsNonSimpleAndNonManifold)
{
    // bow tie
    EXPECT_THROW(Mesh2D({{0, 0}, {1, 1}, {1, 0}, {0, 1}}, {{0, 1, 2, 3}}), InvariantViolation);
    // two copies of the same triangle pair
    auto m = gen_tri(1);
    auto cells = m.cells();
    cells.push_back(cells[0]);
    EXPECT_THROW(Mesh2D(m.vertices(), cells), InvariantViolation);
}

TEST(SavePoly, RoundTripIsBitIdentical)
{
    for (const Mesh2D& m : {gen_tri(3), load_poly_file(voronoi_path())}) {
        const Mesh2D r = load_poly(save_poly(m));
        ASSERT_EQ(r.num_vertices(), m.num_vertices());
        for (int i = 0; i < m.num_vertices(); ++i) {
            EXPECT_EQ(r.vertex(i).x(), m.vertex(i).x());
            EXPECT_EQ(r.vertex(i).y(), m.vertex(i).y());
        }
        EXPECT_EQ(r.cells(), m.cells());
        EXPECT_EQ(save_poly(r), save_poly(m));
    }
}

TEST(Quality, SliverFlagged)
{
    const std::vector<Point> sliver = {{0, 0}, {1, 0}, {0.5, 1e-3}};
    const MeshQuality q = cell_quality(sliver);
    EXPECT_GT(q.delta_est, 0.0);
    EXPECT_FALSE(q.is_shape_regular());
    EXPECT_TRUE(quality(gen_tri(4)).is_shape_regular());
    const MeshQuality v = quality(load_poly_file(voronoi_path()));
    EXPECT_GT(v.delta_est, 0.0);
    EXPECT_LE(v.h_min, v.h);
}

TEST(Prolongation, QuadCornersAndMidpoint)
{
    const Mesh2D coarse = gen_quad(2), ref = gen_quad(4);
    const auto loc = prolongation_points(coarse, ref);
    ASSERT_EQ(static_cast<int>(loc.size()), ref.num_vertices());
    for (int i = 0; i < ref.num_vertices(); ++i) {
        ASSERT_GE(loc[i].cell, 0);
        ASSERT_EQ(loc[i].local.size(), 2u);
        const Point& p = ref.vertex(i);
        const bool corner = std::fmod(p.x() * 2, 1.0) == 0.0 && std::fmod(p.y() * 2, 1.0) == 0.0;
        for (double s : loc[i].local) {
            if (corner) EXPECT_TRUE(std::abs(s) < 1e-14 || std::abs(s - 1) < 1e-14);
            else EXPECT_TRUE(std::abs(s) < 1e-14 || std::abs(s - 0.5) < 1e-14 || std::abs(s - 1) < 1e-14);
        }
    }
    const CellLocator locator(coarse);
    const PointLocation mid = locator.locate({0.25, 0.75});
    EXPECT_NEAR(mid.local[0], 0.5, 1e-14);
    EXPECT_NEAR(mid.local[1], 0.5, 1e-14);
}

TEST(Prolongation, TriangleBarycentricSumsToOne)
{
    const Mesh2D coarse = gen_tri(2), ref = gen_tri(4);
    const auto loc = prolongation_points(coarse, ref);
    for (int i = 0; i < ref.num_vertices(); ++i) {
        ASSERT_EQ(loc[i].local.size(), 3u);
        double sum = 0.0;
        Point rebuilt = Point::Zero();
        const auto cell = coarse.cell(loc[i].cell);
        for (int k = 0; k < 3; ++k) {
            EXPECT_GE(loc[i].local[k], -1e-12);
            sum += loc[i].local[k];
            rebuilt += loc[i].local[k] * coarse.vertex(cell[k]);
        }
        EXPECT_NEAR(sum, 1.0, 1e-14);
        EXPECT_NEAR((rebuilt - ref.vertex(i)).norm(), 0.0, 1e-14);
    }
}

TEST(Prolongation, OutsidePointThrows)
{
    const Mesh2D coarse = gen_quad(2);
    const CellLocator locator(coarse);
    EXPECT_THROW(locator.locate({1.5, 0.5}), PointNotLocated);
    EXPECT_THROW(locator.locate({0.5, -1e-9}), PointNotLocated);
    EXPECT_NO_THROW(locator.locate({0.5, -1e-13}));
}
