#pragma once

// Experiment harness for the three contact examples on the unit square:
// problem construction, reference-solution comparison, convergence tables,
// CSV and SVG output.

#include "vhi/elasticity.hpp"
#include "vhi/fem.hpp"
#include "vhi/mesh.hpp"
#include "vhi/nonsmooth.hpp"
#include "vhi/solver.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vhi {

enum class Method { fem, vem };

/// How coarse solutions are compared with the reference: by injecting the
/// reference nodal values into the coarse mesh (coarse energy norm), or by
/// prolonging the coarse solution to the reference mesh (reference norm).
enum class ErrorMode { nodal, prolong };

struct MeshFamily {
    enum class Kind { tri, quad, poly } kind = Kind::tri;
    std::string file;  // for poly

    static MeshFamily parse(std::string_view text);
    std::string str() const;
};

/// Parameters shared by every example.
struct ExampleParams {
    MaterialParams material;
    LoadSpec load;
    /// Replaces the normal law (examples 2, 3) or the friction law (example 1).
    std::optional<ScalarLaw> law;
    double gap = 0.06;
    double fb = 0.0;
};

struct ExperimentConfig {
    int example = 2;
    Method method = Method::fem;
    MeshFamily mesh;
    std::vector<int> h_list{8, 16, 32, 64};
    int ref_n = 256;
    ErrorMode error_mode = ErrorMode::nodal;
    ExampleParams params;
    SolverConfig solver;
    std::string output_dir = "vhi-out";
    bool svg = true;
    double deform_scale = 1.0;

    /// Throws InvariantViolation.
    void validate() const;
};

/// `key = value` lines; several `key=value` pairs may share a line, separated
/// by spaces or commas. A `law = ...` line takes the rest of the line as law
/// parameters. Values in `base` not mentioned are kept. Throws ParseError.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});
std::string format_config(const ExperimentConfig& config);

std::string method_name(Method m);
Method parse_method(std::string_view text);
ErrorMode parse_error_mode(std::string_view text);

Mesh2D make_mesh(const MeshFamily& family, int n);

struct ExampleProblem {
    DiscreteVHI vhi;
    DofMap dofs;
    SparseMatrix K_full;
};

/// Example 1: bilateral normal constraint and slip-dependent friction.
/// Example 2: multivalued normal compliance. Example 3: example 2 plus
/// u_nu <= gap. Throws std::invalid_argument for other ids.
ExampleProblem build_example(int id, Method method, const Mesh2D& mesh, const ExampleParams& params = {});

/// Plain e : e operator on the same reduced dofs, for the smallness check.
SparseMatrix gram_operator(Method method, const Mesh2D& mesh, const DofMap& dofs);

/// Full coarse field evaluated at every vertex of `reference`. Throws
/// NotNested when a coarse vertex is missing from the reference mesh.
Eigen::VectorXd prolong(const Mesh2D& coarse, const Eigen::VectorXd& u_coarse, Method method, const Mesh2D& reference);

/// ||u_ref - P u_h||_K / ||u_ref||_K on the reference mesh (full vectors).
double relative_error(const Eigen::VectorXd& u_coarse, const Mesh2D& coarse, const Eigen::VectorXd& u_ref,
                      const Mesh2D& reference, const SparseMatrix& K_ref_full, Method method);

/// Reference values at the coarse vertices. Throws NotNested.
Eigen::VectorXd restrict_to_coarse(const Mesh2D& reference, const Eigen::VectorXd& u_ref, const Mesh2D& coarse);

/// ||I u_ref - u_h||_K / ||I u_ref||_K on the coarse mesh, with I the nodal
/// injection of the reference solution.
double relative_error_nodal(const Eigen::VectorXd& u_coarse, const Mesh2D& coarse, const SparseMatrix& K_coarse_full,
                            const Eigen::VectorXd& u_ref, const Mesh2D& reference);

/// log2(e[i-1] / e[i]); the first entry is empty.
std::vector<std::optional<double>> convergence_orders(const std::vector<double>& errors);

struct ConvergenceRow {
    double h = 0.0;
    double rel_error = 0.0;
    std::optional<double> order;
};

struct ConvergenceReport {
    int example = 0;
    Method method = Method::fem;
    int ref_n = 0;
    std::vector<ConvergenceRow> rows;
};

ConvergenceReport make_report(int example, Method method, int ref_n, const std::vector<double>& h,
                              const std::vector<double>& errors);

std::string format_csv(const ConvergenceReport& report);
void emit_csv(const ConvergenceReport& report, const std::string& path);
std::string svg_loglog(const ConvergenceReport& report);
void emit_svg_loglog(const ConvergenceReport& report, const std::string& path);
std::string svg_deformed_mesh(const Mesh2D& mesh, const Eigen::VectorXd& u_full, double scale);
void emit_deformed_mesh(const Mesh2D& mesh, const Eigen::VectorXd& u_full, double scale, const std::string& path);

struct CaseRecord {
    int n = 0;
    long sweeps = 0;
    double residual = 0.0;
    double interior_residual = 0.0;
    double seconds = 0.0;
    std::optional<SmallnessReport> smallness;
};

struct RunOutput {
    ConvergenceReport report;
    /// Energy distance between consecutive prolonged solutions, relative to
    /// the reference norm; one entry per consecutive pair.
    std::vector<double> cauchy;
    std::vector<CaseRecord> cases;
    CaseRecord reference;
};

/// Solves the reference and every mesh in h_list (or the single file mesh for
/// poly), writes report.csv, convergence.svg, deformed_<n>.svg, profile.csv
/// and manifest.txt into output_dir. On failure the manifest is still written
/// with a failure marker and the error is rethrown.
RunOutput run(const ExperimentConfig& config);

}  // namespace vhi
