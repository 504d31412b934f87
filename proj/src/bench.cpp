#include "vhi/bench.hpp"

#include "vhi/errors.hpp"
#include "vhi/vem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace vhi {

// ---------------------------------------------------------------------------
// Names and config text

std::string method_name(Method m) { return m == Method::fem ? "fem" : "vem"; }

Method parse_method(std::string_view text)
{
    if (text == "fem") return Method::fem;
    if (text == "vem") return Method::vem;
    throw std::invalid_argument("unknown method '" + std::string(text) + "'");
}

ErrorMode parse_error_mode(std::string_view text)
{
    if (text == "nodal") return ErrorMode::nodal;
    if (text == "prolong") return ErrorMode::prolong;
    throw std::invalid_argument("error must be nodal or prolong, got '" + std::string(text) + "'");
}

MeshFamily MeshFamily::parse(std::string_view text)
{
    MeshFamily f;
    if (text == "tri") {
        f.kind = Kind::tri;
    } else if (text == "quad") {
        f.kind = Kind::quad;
    } else if (text.substr(0, 5) == "poly:" && text.size() > 5) {
        f.kind = Kind::poly;
        f.file = std::string(text.substr(5));
    } else {
        throw std::invalid_argument("mesh must be tri, quad or poly:<file>, got '" + std::string(text) + "'");
    }
    return f;
}

std::string MeshFamily::str() const
{
    switch (kind) {
    case Kind::tri: return "tri";
    case Kind::quad: return "quad";
    case Kind::poly: return "poly:" + file;
    }
    return "";
}

void ExperimentConfig::validate() const
{
    if (example < 1 || example > 3) throw InvariantViolation("example must be 1, 2 or 3");
    params.material.validate();
    params.load.validate();
    solver.validate();
    if (params.gap < 0.0) throw InvariantViolation("gap must be nonnegative");
    if (params.fb < 0.0) throw InvariantViolation("fb must be nonnegative");
    if (mesh.kind == MeshFamily::Kind::poly) return;
    if (h_list.empty()) throw InvariantViolation("h list is empty");
    auto pow2 = [](int n) { return n >= 1 && (n & (n - 1)) == 0; };
    for (std::size_t i = 0; i < h_list.size(); ++i) {
        if (!pow2(h_list[i])) throw InvariantViolation("mesh divisors must be powers of two");
        if (i > 0 && h_list[i] <= h_list[i - 1]) throw InvariantViolation("mesh divisors must increase");
    }
    if (!pow2(ref_n)) throw InvariantViolation("reference divisor must be a power of two");
    if (ref_n <= h_list.back()) throw InvariantViolation("reference divisor must exceed every mesh divisor");
}

namespace {

double parse_double(const std::string& s, int line)
{
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (s.empty() || end != begin + s.size() || !std::isfinite(v)) throw ParseError(line, "bad number '" + s + "'");
    return v;
}

int parse_int(const std::string& s, int line)
{
    const double v = parse_double(s, line);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ParseError(line, "bad integer '" + s + "'");
    return static_cast<int>(v);
}

std::vector<double> parse_list(const std::string& s, int line)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(item, line));
    if (s.empty() || s.back() == ',') throw ParseError(line, "bad list '" + s + "'");
    return out;
}

Eigen::Vector2d parse_vec2(const std::string& s, int line)
{
    const auto v = parse_list(s, line);
    if (v.size() != 2) throw ParseError(line, "expected two components in '" + s + "'");
    return {v[0], v[1]};
}

bool parse_bool(const std::string& s, int line)
{
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ParseError(line, "bad boolean '" + s + "'");
}

using Pairs = std::vector<std::pair<std::string, std::string>>;

Pairs split_pairs(const std::string& raw, int line)
{
    static const std::regex eq(R"(\s*=\s*)");
    const std::string text = std::regex_replace(raw, eq, "=");
    std::istringstream in(text);
    std::string tok;
    Pairs out;
    while (in >> tok) {
        while (!tok.empty() && tok.back() == ',') tok.pop_back();
        if (tok.empty()) continue;
        const auto pos = tok.find('=');
        if (pos == std::string::npos) {
            // Continuation of a comma-separated value.
            if (out.empty()) throw ParseError(line, "expected key = value, got '" + tok + "'");
            out.back().second += "," + tok;
            continue;
        }
        if (pos == 0) throw ParseError(line, "missing key before '='");
        out.emplace_back(tok.substr(0, pos), tok.substr(pos + 1));
    }
    return out;
}

ScalarLaw parse_law(const std::string& kind, const Pairs& args, int line)
{
    std::map<std::string, std::string> kv;
    for (const auto& [k, v] : args) {
        if (!kv.emplace(k, v).second) throw ParseError(line, "law parameter '" + k + "' given twice");
    }
    auto need = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(line, "law parameter '" + key + "' missing");
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    try {
        if (kind == "expfriction") {
            const double a = parse_double(need("a"), line);
            const double b = parse_double(need("b"), line);
            const double beta = parse_double(need("beta"), line);
            if (!kv.empty()) throw ParseError(line, "unknown law parameter '" + kv.begin()->first + "'");
            return ExpFrictionLaw(a, b, beta);
        }
        if (kind == "piecewise") {
            const auto slopes = parse_list(need("slopes"), line);
            const auto intercepts = parse_list(need("intercepts"), line);
            std::vector<double> bps;
            if (auto it = kv.find("breakpoints"); it != kv.end()) {
                if (it->second != "none") bps = parse_list(it->second, line);
                kv.erase(it);
            }
            Eigen::Vector2d anchor = Eigen::Vector2d::Zero();
            if (auto it = kv.find("anchor"); it != kv.end()) {
                anchor = parse_vec2(it->second, line);
                kv.erase(it);
            }
            if (!kv.empty()) throw ParseError(line, "unknown law parameter '" + kv.begin()->first + "'");
            if (slopes.size() != intercepts.size()) throw ParseError(line, "slopes and intercepts differ in length");
            std::vector<AffinePiece> pieces;
            for (std::size_t i = 0; i < slopes.size(); ++i) pieces.push_back({slopes[i], intercepts[i]});
            return PiecewiseGraphLaw(std::move(bps), std::move(pieces), anchor(0), anchor(1));
        }
    } catch (const std::invalid_argument& e) {
        throw ParseError(line, e.what());
    }
    throw ParseError(line, "unknown law kind '" + kind + "'");
}

std::string join(const std::vector<double>& v)
{
    std::string s;
    char buf[40];
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", v[i]);
        s += (i ? "," : "") + std::string(buf);
    }
    return s;
}

std::string law_text(const ScalarLaw& law)
{
    if (const auto* e = std::get_if<ExpFrictionLaw>(&law)) {
        return "expfriction a=" + join({e->a()}) + " b=" + join({e->b()}) + " beta=" + join({e->beta()});
    }
    const auto& p = std::get<PiecewiseGraphLaw>(law);
    std::vector<double> sl;
    std::vector<double> ic;
    for (const auto& piece : p.pieces()) {
        sl.push_back(piece.slope);
        ic.push_back(piece.intercept);
    }
    return "piecewise breakpoints=" + (p.breakpoints().empty() ? std::string("none") : join(p.breakpoints())) +
           " slopes=" + join(sl) + " intercepts=" + join(ic) + " anchor=0," + join({p.potential(0.0)});
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, ExperimentConfig c)
{
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        Pairs pairs = split_pairs(raw, line);
        if (pairs.empty()) continue;
        if (pairs.front().first == "law") {
            const std::string kind = pairs.front().second;
            pairs.erase(pairs.begin());
            c.params.law = parse_law(kind, pairs, line);
            continue;
        }
        for (const auto& [key, value] : pairs) {
            try {
                if (key == "example") c.example = parse_int(value, line);
                else if (key == "method") c.method = parse_method(value);
                else if (key == "mesh") c.mesh = MeshFamily::parse(value);
                else if (key == "h") {
                    c.h_list.clear();
                    for (double v : parse_list(value, line)) c.h_list.push_back(parse_int(join({v}), line));
                }
                else if (key == "ref") c.ref_n = parse_int(value, line);
                else if (key == "error") c.error_mode = parse_error_mode(value);
                else if (key == "E") c.params.material.E = parse_double(value, line);
                else if (key == "kappa") c.params.material.kappa = parse_double(value, line);
                else if (key == "f0") c.params.load.f0 = parse_vec2(value, line);
                else if (key == "f2") {
                    c.params.load.f2_left = parse_vec2(value, line);
                    c.params.load.f2_right = -c.params.load.f2_left;
                }
                else if (key == "f2_right") c.params.load.f2_right = parse_vec2(value, line);
                else if (key == "traction_y_min") c.params.load.traction_y_min = parse_double(value, line);
                else if (key == "gap") c.params.gap = parse_double(value, line);
                else if (key == "fb") c.params.fb = parse_double(value, line);
                else if (key == "tol_inc") c.solver.tol_inc = parse_double(value, line);
                else if (key == "tol_res") c.solver.tol_res = parse_double(value, line);
                else if (key == "max_sweeps") c.solver.max_sweeps = parse_int(value, line);
                else if (key == "omega") c.solver.omega = parse_double(value, line);
                else if (key == "linear_tol") c.solver.linear_tol = parse_double(value, line);
                else if (key == "accelerate") c.solver.accelerate = parse_bool(value, line);
                else if (key == "reverse_order") c.solver.reverse_order = parse_bool(value, line);
                else if (key == "out") c.output_dir = value;
                else if (key == "svg") c.svg = parse_bool(value, line);
                else if (key == "scale") c.deform_scale = parse_double(value, line);
                else throw ParseError(line, "unknown key '" + key + "'");
            } catch (const std::invalid_argument& e) {
                throw ParseError(line, e.what());
            }
        }
    }
    return c;
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), std::move(base));
}

std::string format_config(const ExperimentConfig& c)
{
    std::ostringstream s;
    std::vector<double> h(c.h_list.begin(), c.h_list.end());
    s << "example = " << c.example << "\n";
    s << "method = " << method_name(c.method) << "\n";
    s << "mesh = " << c.mesh.str() << "\n";
    s << "h = " << join(h) << "\n";
    s << "ref = " << c.ref_n << "\n";
    s << "error = " << (c.error_mode == ErrorMode::nodal ? "nodal" : "prolong") << "\n";
    s << "E = " << join({c.params.material.E}) << " kappa = " << join({c.params.material.kappa}) << "\n";
    s << "f0 = " << join({c.params.load.f0.x(), c.params.load.f0.y()}) << "\n";
    s << "f2 = " << join({c.params.load.f2_left.x(), c.params.load.f2_left.y()}) << "\n";
    s << "f2_right = " << join({c.params.load.f2_right.x(), c.params.load.f2_right.y()}) << "\n";
    s << "traction_y_min = " << join({c.params.load.traction_y_min}) << "\n";
    if (c.params.law) s << "law = " << law_text(*c.params.law) << "\n";
    s << "gap = " << join({c.params.gap}) << " fb = " << join({c.params.fb}) << "\n";
    s << "tol_inc = " << join({c.solver.tol_inc}) << ", tol_res = " << join({c.solver.tol_res})
      << ", max_sweeps = " << c.solver.max_sweeps << ", omega = " << join({c.solver.omega}) << "\n";
    s << "linear_tol = " << join({c.solver.linear_tol}) << " accelerate = " << (c.solver.accelerate ? "true" : "false")
      << " reverse_order = " << (c.solver.reverse_order ? "true" : "false") << "\n";
    s << "out = " << c.output_dir << "\n";
    s << "svg = " << (c.svg ? "true" : "false") << " scale = " << join({c.deform_scale}) << "\n";
    return s.str();
}

// ---------------------------------------------------------------------------
// Problems

Mesh2D make_mesh(const MeshFamily& family, int n)
{
    switch (family.kind) {
    case MeshFamily::Kind::tri: return gen_tri(n);
    case MeshFamily::Kind::quad: return gen_quad(n);
    case MeshFamily::Kind::poly: return load_poly_file(family.file);
    }
    throw std::invalid_argument("unknown mesh family");
}

ExampleProblem build_example(int id, Method method, const Mesh2D& mesh, const ExampleParams& params)
{
    if (id < 1 || id > 3) throw std::invalid_argument("example id must be 1, 2 or 3");
    params.material.validate();
    params.load.validate();
    Assembled a = method == Method::fem ? assemble_stiffness_p1(mesh, params.material) : assemble_vem(mesh, params.material);
    const Eigen::VectorXd f_full =
        method == Method::fem ? assemble_full_load_p1(mesh, params.load) : load_fh_full(mesh, params.load);

    ExampleProblem p;
    p.vhi.K = std::move(a.K);
    p.vhi.f = restrict_vector(f_full, a.dofs);
    for (const auto& cv : a.dofs.contact()) {
        ContactNode node;
        node.weight = cv.weight;
        node.normal_dof = a.dofs.dof(cv.vertex, DofMap::normal_component);
        node.tangent_dof = a.dofs.dof(cv.vertex, DofMap::tangent_component);
        node.tresca_bound = params.fb;
        if (id == 1) {
            node.constraint = NormalConstraint::fixed_zero;
            node.tangent_law = params.law ? *params.law : ScalarLaw(laws::slip_weakening_friction());
        } else {
            node.normal_law = params.law ? *params.law : ScalarLaw(laws::multivalued_compliance());
            if (id == 3) {
                node.constraint = NormalConstraint::upper_bound;
                node.gap = params.gap;
            }
        }
        p.vhi.contacts.push_back(std::move(node));
    }
    p.dofs = std::move(a.dofs);
    p.K_full = std::move(a.K_full);
    return p;
}

SparseMatrix gram_operator(Method method, const Mesh2D& mesh, const DofMap& dofs)
{
    const Eigen::Matrix3d G = strain_gram_matrix();
    return restrict_matrix(method == Method::fem ? assemble_full_p1(mesh, G) : assemble_full_vem(mesh, G), dofs);
}

// ---------------------------------------------------------------------------
// Prolongation and errors

namespace {

using CoordKey = std::pair<long long, long long>;

CoordKey key_of(const Point& p)
{
    return {std::llround(p.x() * 1e10), std::llround(p.y() * 1e10)};
}

std::map<CoordKey, int> vertex_index(const Mesh2D& mesh)
{
    std::map<CoordKey, int> m;
    for (int v = 0; v < mesh.num_vertices(); ++v) m.emplace(key_of(mesh.vertex(v)), v);
    return m;
}

}  // namespace

Eigen::VectorXd prolong(const Mesh2D& coarse, const Eigen::VectorXd& u_coarse, Method method, const Mesh2D& reference)
{
    if (u_coarse.size() != 2 * coarse.num_vertices()) throw DimensionMismatch("prolong: coarse field size");
    const auto ref_index = vertex_index(reference);
    for (const Point& p : coarse.vertices()) {
        if (!ref_index.count(key_of(p))) throw NotNested("a coarse vertex is not a reference vertex");
    }
    Eigen::VectorXd out(2 * reference.num_vertices());
    const CellLocator locator(coarse);

    if (method == Method::fem) {
        if (!coarse.is_triangular()) throw NonTriangleCell("P1 prolongation requires a triangular mesh");
        for (int v = 0; v < reference.num_vertices(); ++v) {
            const PointLocation loc = locator.locate(reference.vertex(v));
            const auto cell = coarse.cell(loc.cell);
            Eigen::Vector2d val = Eigen::Vector2d::Zero();
            for (int i = 0; i < 3; ++i) val += loc.local[static_cast<std::size_t>(i)] * u_coarse.segment<2>(2 * cell[i]);
            out.segment<2>(2 * v) = val;
        }
        return out;
    }

    const auto coarse_index = vertex_index(coarse);
    std::vector<std::optional<std::pair<VemProjector, Eigen::Matrix<double, 6, 1>>>> proxy(
        static_cast<std::size_t>(coarse.num_cells()));
    for (int v = 0; v < reference.num_vertices(); ++v) {
        const Point& p = reference.vertex(v);
        if (auto it = coarse_index.find(key_of(p)); it != coarse_index.end()) {
            out.segment<2>(2 * v) = u_coarse.segment<2>(2 * it->second);
            continue;
        }
        const PointLocation loc = locator.locate(p);
        const auto cell = coarse.cell(loc.cell);
        const auto pts = coarse.cell_points(loc.cell);
        const std::size_t n = pts.size();
        bool on_edge = false;
        for (std::size_t i = 0; i < n && !on_edge; ++i) {
            const Point& a = pts[i];
            const Point& b = pts[(i + 1) % n];
            const Point ab = b - a;
            const double t = (p - a).dot(ab) / ab.squaredNorm();
            if (t < 0.0 || t > 1.0 || (a + t * ab - p).norm() > 1e-12) continue;
            out.segment<2>(2 * v) = (1.0 - t) * u_coarse.segment<2>(2 * cell[i]) + t * u_coarse.segment<2>(2 * cell[(i + 1) % n]);
            on_edge = true;
        }
        if (on_edge) continue;
        auto& slot = proxy[static_cast<std::size_t>(loc.cell)];
        if (!slot) {
            VemProjector pr = local_projector(pts, strain_gram_matrix());
            Eigen::VectorXd ue(2 * static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) ue.segment<2>(2 * static_cast<Eigen::Index>(i)) = u_coarse.segment<2>(2 * cell[i]);
            const Eigen::Matrix<double, 6, 1> coef = pr.P * ue;
            slot.emplace(std::move(pr), coef);
        }
        out.segment<2>(2 * v) = slot->first.evaluate(slot->second, p);
    }
    return out;
}

Eigen::VectorXd restrict_to_coarse(const Mesh2D& reference, const Eigen::VectorXd& u_ref, const Mesh2D& coarse)
{
    if (u_ref.size() != 2 * reference.num_vertices()) throw DimensionMismatch("restrict_to_coarse: field size");
    const auto ref_index = vertex_index(reference);
    Eigen::VectorXd out(2 * coarse.num_vertices());
    for (int v = 0; v < coarse.num_vertices(); ++v) {
        const auto it = ref_index.find(key_of(coarse.vertex(v)));
        if (it == ref_index.end()) throw NotNested("a coarse vertex is not a reference vertex");
        out.segment<2>(2 * v) = u_ref.segment<2>(2 * it->second);
    }
    return out;
}

double relative_error_nodal(const Eigen::VectorXd& u_coarse, const Mesh2D& coarse, const SparseMatrix& K_coarse_full,
                            const Eigen::VectorXd& u_ref, const Mesh2D& reference)
{
    const Eigen::VectorXd iu = restrict_to_coarse(reference, u_ref, coarse);
    const double denom = energy_norm(K_coarse_full, iu);
    if (!(denom > 0.0)) throw InvariantViolation("reference solution has zero energy");
    return energy_norm(K_coarse_full, iu - u_coarse) / denom;
}

double relative_error(const Eigen::VectorXd& u_coarse, const Mesh2D& coarse, const Eigen::VectorXd& u_ref,
                      const Mesh2D& reference, const SparseMatrix& K_ref_full, Method method)
{
    const Eigen::VectorXd diff = u_ref - prolong(coarse, u_coarse, method, reference);
    const double denom = energy_norm(K_ref_full, u_ref);
    if (!(denom > 0.0)) throw InvariantViolation("reference solution has zero energy");
    return energy_norm(K_ref_full, diff) / denom;
}

// ---------------------------------------------------------------------------
// Driver

namespace {

struct SolvedCase {
    Eigen::VectorXd u_full;
    SparseMatrix K_full;
    CaseRecord record;
};

SolvedCase solve_case(const ExperimentConfig& cfg, const Mesh2D& mesh, int n, bool with_smallness)
{
    const auto t0 = std::chrono::steady_clock::now();
    const ExampleProblem p = build_example(cfg.example, cfg.method, mesh, cfg.params);
    const SolveResult res = solve(p.vhi, cfg.solver);
    const ResidualReport rep = residual_check(p.vhi, res.u);
    SolvedCase out;
    out.u_full = expand(res.u, p.dofs);
    out.K_full = p.K_full;
    out.record.n = n;
    out.record.sweeps = res.sweeps;
    out.record.residual = rep.max;
    out.record.interior_residual = rep.interior_relative;
    if (with_smallness) {
        out.record.smallness = check_smallness(p.vhi, gram_operator(cfg.method, mesh, p.dofs), cfg.params.material);
    }
    out.record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::string g17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string case_line(const CaseRecord& r)
{
    std::string s = "n = " + std::to_string(r.n) + " sweeps = " + std::to_string(r.sweeps) +
                    " residual = " + g17(r.residual) + " interior_residual = " + g17(r.interior_residual) +
                    " seconds = " + g17(r.seconds);
    if (r.smallness) {
        s += " alpha_psi = " + g17(r.smallness->alpha_psi) + " lambda_est = " + g17(r.smallness->lambda_est) +
             " m_a = " + g17(r.smallness->m_a_est) + " smallness = " + (r.smallness->satisfied ? "satisfied" : "violated");
    }
    return s;
}

void append_profile(std::string& csv, const Mesh2D& mesh, int n, const Eigen::VectorXd& u_full)
{
    std::vector<int> verts;
    const auto on = mesh.vertices_on(BoundaryTag::contact);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (on[static_cast<std::size_t>(v)]) verts.push_back(v);
    }
    std::sort(verts.begin(), verts.end(), [&](int a, int b) { return mesh.vertex(a).x() < mesh.vertex(b).x(); });
    for (int v : verts) {
        csv += std::to_string(n) + "," + g17(mesh.vertex(v).x()) + "," +
               g17(DofMap::normal_sign * u_full(2 * v + DofMap::normal_component)) + "," +
               g17(DofMap::tangent_sign * u_full(2 * v + DofMap::tangent_component)) + "\n";
    }
}

}  // namespace

RunOutput run(const ExperimentConfig& config)
{
    config.validate();
    namespace fs = std::filesystem;
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    const auto start = std::chrono::steady_clock::now();

    RunOutput out;
    out.report.example = config.example;
    out.report.method = config.method;
    out.report.ref_n = config.mesh.kind == MeshFamily::Kind::poly ? 0 : config.ref_n;
    std::vector<std::string> lines;
    std::string profile = "n,x,u_nu,u_tau\n";

    auto write_manifest = [&](const std::string& status) {
        std::ofstream m(dir / "manifest.txt");
        m << "# vhi-bench run manifest\n" << format_config(config);
        for (const auto& l : lines) m << l << "\n";
        m << "total_seconds = "
          << g17(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()) << "\n";
        m << "status = " << status << "\n";
        if (!m) throw IoError("cannot write manifest");
    };

    try {
        if (config.mesh.kind == MeshFamily::Kind::poly) {
            const Mesh2D mesh = load_poly_file(config.mesh.file);
            const SolvedCase sc = solve_case(config, mesh, mesh.num_cells(), true);
            out.cases.push_back(sc.record);
            lines.push_back("case " + case_line(sc.record));
            append_profile(profile, mesh, mesh.num_cells(), sc.u_full);
            if (config.svg) {
                emit_deformed_mesh(mesh, sc.u_full, config.deform_scale,
                                   (dir / ("deformed_" + std::to_string(mesh.num_cells()) + ".svg")).string());
            }
        } else {
            const Mesh2D ref_mesh = make_mesh(config.mesh, config.ref_n);
            const SolvedCase ref = solve_case(config, ref_mesh, config.ref_n, false);
            out.reference = ref.record;
            lines.push_back("reference " + case_line(ref.record));
            const double ref_norm = energy_norm(ref.K_full, ref.u_full);

            std::vector<double> hs;
            std::vector<double> errors;
            Eigen::VectorXd prev;
            for (int n : config.h_list) {
                const Mesh2D mesh = make_mesh(config.mesh, n);
                const SolvedCase sc = solve_case(config, mesh, n, true);
                const Eigen::VectorXd pu = prolong(mesh, sc.u_full, config.method, ref_mesh);
                hs.push_back(1.0 / n);
                errors.push_back(config.error_mode == ErrorMode::nodal
                                     ? relative_error_nodal(sc.u_full, mesh, sc.K_full, ref.u_full, ref_mesh)
                                     : energy_norm(ref.K_full, ref.u_full - pu) / ref_norm);
                if (prev.size() > 0) out.cauchy.push_back(energy_norm(ref.K_full, pu - prev) / ref_norm);
                prev = pu;
                out.cases.push_back(sc.record);
                lines.push_back("case " + case_line(sc.record) + " rel_error = " + g17(errors.back()));
                append_profile(profile, mesh, n, sc.u_full);
                if (config.svg) {
                    emit_deformed_mesh(mesh, sc.u_full, config.deform_scale,
                                       (dir / ("deformed_" + std::to_string(n) + ".svg")).string());
                }
            }
            append_profile(profile, ref_mesh, config.ref_n, ref.u_full);
            out.report = make_report(config.example, config.method, config.ref_n, hs, errors);
            for (std::size_t i = 0; i < out.cauchy.size(); ++i) {
                lines.push_back("cauchy " + std::to_string(config.h_list[i]) + "->" + std::to_string(config.h_list[i + 1]) +
                                " = " + g17(out.cauchy[i]));
            }
        }
        emit_csv(out.report, (dir / "report.csv").string());
        emit_svg_loglog(out.report, (dir / "convergence.svg").string());
        std::ofstream(dir / "profile.csv") << profile;
        write_manifest("ok");
    } catch (const std::exception& e) {
        emit_csv(out.report, (dir / "report.csv").string());
        write_manifest(std::string("failed: ") + e.what());
        throw;
    }
    return out;
}

}  // namespace vhi
