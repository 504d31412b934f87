#include "vhi/bench.hpp"

#include "vhi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace vhi {

namespace {

std::string fmt(const char* spec, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

void write_text(const std::string& text, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace

std::vector<std::optional<double>> convergence_orders(const std::vector<double>& errors)
{
    std::vector<std::optional<double>> out(errors.size());
    for (std::size_t i = 1; i < errors.size(); ++i) {
        if (!(errors[i - 1] > 0.0) || !(errors[i] > 0.0)) throw std::invalid_argument("errors must be positive");
        out[i] = std::log2(errors[i - 1] / errors[i]);
    }
    return out;
}

ConvergenceReport make_report(int example, Method method, int ref_n, const std::vector<double>& h,
                              const std::vector<double>& errors)
{
    if (h.size() != errors.size()) throw DimensionMismatch("h and error lists differ in length");
    ConvergenceReport r{example, method, ref_n, {}};
    const auto orders = convergence_orders(errors);
    for (std::size_t i = 0; i < h.size(); ++i) r.rows.push_back({h[i], errors[i], orders[i]});
    return r;
}

std::string format_csv(const ConvergenceReport& report)
{
    std::string out = "h,rel_error,order\n";
    for (const auto& row : report.rows) {
        out += fmt("%.6g", row.h) + "," + fmt("%.6g", row.rel_error) + ",";
        if (row.order) out += fmt("%.6g", *row.order);
        out += "\n";
    }
    return out;
}

void emit_csv(const ConvergenceReport& report, const std::string& path) { write_text(format_csv(report), path); }

std::string svg_loglog(const ConvergenceReport& report)
{
    const double W = 480.0;
    const double H = 360.0;
    const double left = 70.0;
    const double right = 20.0;
    const double top = 30.0;
    const double bottom = 50.0;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << " " << H << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">Example "
      << report.example << ", " << method_name(report.method) << ", reference n = " << report.ref_n << "</text>\n";
    s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right << "\" height=\""
      << H - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    if (report.rows.empty()) {
        s << "</svg>\n";
        return s.str();
    }

    const auto& fin = report.rows.back();
    auto guide = [&](double h) { return fin.rel_error * h / fin.h; };
    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -xmin;
    double ymin = xmin;
    double ymax = -xmin;
    for (const auto& row : report.rows) {
        xmin = std::min(xmin, std::log10(row.h));
        xmax = std::max(xmax, std::log10(row.h));
        for (double e : {row.rel_error, guide(row.h)}) {
            ymin = std::min(ymin, std::log10(e));
            ymax = std::max(ymax, std::log10(e));
        }
    }
    const double padx = std::max(0.1, 0.08 * (xmax - xmin));
    const double pady = std::max(0.1, 0.08 * (ymax - ymin));
    xmin -= padx;
    xmax += padx;
    ymin -= pady;
    ymax += pady;
    auto px = [&](double h) { return left + (std::log10(h) - xmin) / (xmax - xmin) * (W - left - right); };
    auto py = [&](double e) { return top + (ymax - std::log10(e)) / (ymax - ymin) * (H - top - bottom); };

    const double hmin = report.rows.back().h;
    const double hmax = report.rows.front().h;
    s << "<line class=\"guide\" x1=\"" << px(hmax) << "\" y1=\"" << py(guide(hmax)) << "\" x2=\"" << px(hmin)
      << "\" y2=\"" << py(guide(hmin)) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    s << "<text x=\"" << px(hmax) << "\" y=\"" << py(guide(hmax)) - 6
      << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"gray\">slope 1</text>\n";
    if (report.rows.size() > 1) {
        s << "<polyline class=\"errors\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
        for (const auto& row : report.rows) s << px(row.h) << "," << py(row.rel_error) << " ";
        s << "\"/>\n";
    }
    for (const auto& row : report.rows) {
        s << "<circle class=\"point\" cx=\"" << px(row.h) << "\" cy=\"" << py(row.rel_error)
          << "\" r=\"3.5\" fill=\"steelblue\"/>\n";
    }
    s << "<text x=\"" << W / 2 << "\" y=\"" << H - 15
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">h (log scale)</text>\n";
    s << "<text x=\"15\" y=\"" << H / 2 << "\" transform=\"rotate(-90 15 " << H / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">relative error (log scale)</text>\n";
    s << "</svg>\n";
    return s.str();
}

void emit_svg_loglog(const ConvergenceReport& report, const std::string& path) { write_text(svg_loglog(report), path); }

std::string svg_deformed_mesh(const Mesh2D& mesh, const Eigen::VectorXd& u_full, double scale)
{
    if (u_full.size() != 2 * mesh.num_vertices()) throw DimensionMismatch("displacement size does not match the mesh");
    std::vector<Point> pos(static_cast<std::size_t>(mesh.num_vertices()));
    Point lo = Point::Constant(std::numeric_limits<double>::infinity());
    Point hi = -lo;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        pos[static_cast<std::size_t>(v)] = mesh.vertex(v) + scale * u_full.segment<2>(2 * v);
        lo = lo.cwiseMin(pos[static_cast<std::size_t>(v)]);
        hi = hi.cwiseMax(pos[static_cast<std::size_t>(v)]);
    }
    const double size = 500.0;
    const double margin = 10.0;
    const double span = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-12});
    const double k = (size - 2 * margin) / span;
    std::ostringstream s;
    s.precision(10);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
      << size << " " << size << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<g fill=\"none\" stroke=\"black\" stroke-width=\"0.5\">\n";
    for (int c = 0; c < mesh.num_cells(); ++c) {
        s << "<polygon points=\"";
        for (int v : mesh.cell(c)) {
            const Point& p = pos[static_cast<std::size_t>(v)];
            s << margin + (p.x() - lo.x()) * k << "," << size - margin - (p.y() - lo.y()) * k << " ";
        }
        s << "\"/>\n";
    }
    s << "</g>\n</svg>\n";
    return s.str();
}

void emit_deformed_mesh(const Mesh2D& mesh, const Eigen::VectorXd& u_full, double scale, const std::string& path)
{
    write_text(svg_deformed_mesh(mesh, u_full, scale), path);
}

}  // namespace vhi
