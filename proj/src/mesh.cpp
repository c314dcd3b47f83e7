#include "cloaksim/mesh.hpp"

#include "cloaksim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

namespace cloaksim {

double TriMesh::area(std::size_t tri) const {
    const auto& t = triangles[tri];
    const Vec2 e1 = vertices[t[1]] - vertices[t[0]];
    const Vec2 e2 = vertices[t[2]] - vertices[t[0]];
    return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

Vec2 TriMesh::centroid(std::size_t tri) const {
    const auto& t = triangles[tri];
    return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

double TriMesh::compute_h_max() {
    double h = 0.0;
    for (const auto& t : triangles) {
        for (int k = 0; k < 3; ++k) {
            h = std::max(h, (vertices[t[k]] - vertices[t[(k + 1) % 3]]).norm());
        }
    }
    h_max = h;
    return h;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct SizeField {
    double h_target;
    DiskMeshOptions opt;

    double angular(double rho) const {
        if (opt.grading <= 0.0) return h_target;
        return std::min(h_target, std::max(opt.h_min, opt.grading * rho));
    }

    double radial(double rho) const {
        double h = angular(rho);
        for (const auto& b : opt.bands) {
            if (rho >= b.inner && rho <= b.outer) h = std::min(h, b.h_radial);
        }
        return h;
    }
};

/// Ring radii strictly inside (a, b] with spacing following the radial size field.
void place_rings(const SizeField& size, double a, double b, std::vector<double>& rings) {
    constexpr int kSub = 4000;
    std::vector<double> cum(kSub + 1, 0.0);
    const double d = (b - a) / kSub;
    for (int i = 0; i < kSub; ++i) {
        cum[i + 1] = cum[i] + d / size.radial(a + (i + 0.5) * d);
    }
    const int n = std::max(1, static_cast<int>(std::ceil(cum.back() - 1e-9)));
    for (int k = 1; k < n; ++k) {
        const double target = cum.back() * k / n;
        const auto it = std::lower_bound(cum.begin(), cum.end(), target);
        const auto i = static_cast<int>(std::distance(cum.begin(), it));
        const double frac = (target - cum[i - 1]) / (cum[i] - cum[i - 1]);
        rings.push_back(a + (i - 1 + frac) * d);
    }
    rings.push_back(b);
}

}  // namespace

TriMesh build_disk_mesh(double radius, const std::vector<double>& aligned_radii, double h_target,
                        const DiskMeshOptions& options) {
    if (!(radius > 0.0) || !(h_target > 0.0)) {
        throw PreconditionError("build_disk_mesh: radius and h_target must be positive");
    }
    for (std::size_t i = 0; i < aligned_radii.size(); ++i) {
        const double r = aligned_radii[i];
        if (!(r > 0.0 && r < radius)) {
            std::ostringstream msg;
            msg << "build_disk_mesh: aligned radius " << r << " outside (0, " << radius << ")";
            throw PreconditionError(msg.str());
        }
        if (i > 0 && !(r > aligned_radii[i - 1])) {
            throw PreconditionError("build_disk_mesh: aligned radii must be strictly increasing");
        }
    }

    SizeField size{h_target, options};
    if (size.opt.grading > 0.0 && size.opt.h_min <= 0.0) {
        const double smallest = aligned_radii.empty() ? radius : aligned_radii.front();
        size.opt.h_min = 0.25 * size.opt.grading * smallest;
    }
    for (double r : aligned_radii) {
        const double natural = kTwoPi * r / size.angular(r);
        if (natural < options.min_circle_vertices) {
            std::ostringstream msg;
            msg << "build_disk_mesh: h too coarse for aligned circle r=" << r << " ("
                << natural << " < " << options.min_circle_vertices << " vertices)";
            throw PreconditionError(msg.str());
        }
    }

    std::vector<double> breaks{0.0};
    breaks.insert(breaks.end(), aligned_radii.begin(), aligned_radii.end());
    breaks.push_back(radius);
    std::vector<double> rings;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) place_rings(size, breaks[i], breaks[i + 1], rings);
    // Snap aligned radii exactly.
    for (double r : aligned_radii) {
        auto it = std::min_element(rings.begin(), rings.end(),
                                   [r](double a, double b) { return std::abs(a - r) < std::abs(b - r); });
        *it = r;
    }
    rings.back() = radius;

    TriMesh mesh;
    mesh.outer_radius = radius;
    mesh.aligned_radii = aligned_radii;
    mesh.vertices.emplace_back(0.0, 0.0);

    std::vector<int> ring_start, ring_count;
    for (double rho : rings) {
        const int n = std::max(options.min_circle_vertices,
                               static_cast<int>(std::ceil(kTwoPi * rho / size.angular(rho) - 1e-9)));
        ring_start.push_back(static_cast<int>(mesh.vertices.size()));
        ring_count.push_back(n);
        for (int k = 0; k < n; ++k) {
            const double th = kTwoPi * k / n;
            mesh.vertices.emplace_back(rho * std::cos(th), rho * std::sin(th));
        }
    }

    // Fan around the center.
    for (int k = 0; k < ring_count[0]; ++k) {
        mesh.triangles.push_back({0, ring_start[0] + k, ring_start[0] + (k + 1) % ring_count[0]});
    }
    // Stitch consecutive rings, advancing along whichever ring gives the shorter diagonal.
    for (std::size_t r = 0; r + 1 < rings.size(); ++r) {
        const int na = ring_count[r], nb = ring_count[r + 1];
        const int sa = ring_start[r], sb = ring_start[r + 1];
        const auto A = [&](int i) { return sa + (i % na); };
        const auto B = [&](int j) { return sb + (j % nb); };
        int i = 0, j = 0;
        while (i < na || j < nb) {
            bool advance_a;
            if (i == na) {
                advance_a = false;
            } else if (j == nb) {
                advance_a = true;
            } else {
                const double da = (mesh.vertices[A(i + 1)] - mesh.vertices[B(j)]).squaredNorm();
                const double db = (mesh.vertices[A(i)] - mesh.vertices[B(j + 1)]).squaredNorm();
                advance_a = da < db;
            }
            if (advance_a) {
                mesh.triangles.push_back({A(i), A(i + 1), B(j)});
                ++i;
            } else {
                mesh.triangles.push_back({A(i), B(j + 1), B(j)});
                ++j;
            }
        }
    }
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (mesh.area(t) < 0.0) std::swap(mesh.triangles[t][1], mesh.triangles[t][2]);
    }
    const int last = static_cast<int>(rings.size()) - 1;
    for (int k = 0; k < ring_count[last]; ++k) mesh.boundary.push_back(ring_start[last] + k);
    mesh.compute_h_max();
    return mesh;
}

std::string check_mesh(const TriMesh& mesh, double tol) {
    std::ostringstream err;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (!(mesh.area(t) > 0.0)) {
            err << "triangle " << t << " has non-positive area; ";
            break;
        }
    }
    std::map<std::pair<int, int>, int> edges;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            ++edges[{std::min(a, b), std::max(a, b)}];
        }
    }
    std::size_t boundary_edges = 0;
    for (const auto& [e, c] : edges) {
        if (c > 2) {
            err << "edge (" << e.first << "," << e.second << ") shared by " << c << " triangles; ";
            break;
        }
        if (c == 1) ++boundary_edges;
    }
    if (boundary_edges != mesh.boundary.size()) {
        err << "boundary edge count " << boundary_edges << " != boundary loop size "
            << mesh.boundary.size() << "; ";
    }
    for (std::size_t k = 0; k < mesh.boundary.size(); ++k) {
        const int a = mesh.boundary[k], b = mesh.boundary[(k + 1) % mesh.boundary.size()];
        const auto it = edges.find({std::min(a, b), std::max(a, b)});
        if (it == edges.end() || it->second != 1) {
            err << "boundary loop edge (" << a << "," << b << ") is not a boundary edge; ";
            break;
        }
    }
    for (double r : mesh.aligned_radii) {
        const bool realized = std::any_of(mesh.vertices.begin(), mesh.vertices.end(),
                                          [&](const Vec2& v) { return std::abs(v.norm() - r) <= tol * std::max(1.0, r); });
        if (!realized) err << "aligned radius " << r << " has no vertices; ";
        for (const auto& [e, c] : edges) {
            const double ra = mesh.vertices[e.first].norm() - r;
            const double rb = mesh.vertices[e.second].norm() - r;
            if ((ra < -tol && rb > tol) || (ra > tol && rb < -tol)) {
                err << "edge (" << e.first << "," << e.second << ") crosses aligned circle " << r << "; ";
                break;
            }
        }
    }
    return err.str();
}

void write_mesh(std::ostream& out, const TriMesh& mesh) {
    out << std::setprecision(17);
    if (!mesh.aligned_radii.empty()) {
        out << "# aligned";
        for (double r : mesh.aligned_radii) out << ' ' << r;
        out << '\n';
    }
    out << mesh.vertices.size() << '\n';
    for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << '\n';
    for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (std::size_t k = 0; k < mesh.boundary.size(); ++k) out << (k ? " " : "") << mesh.boundary[k];
    out << '\n';
}

TriMesh read_mesh(std::istream& in) {
    TriMesh mesh;
    std::string line;
    std::vector<std::vector<long>> rows;
    long n_vertices = -1;
    long read_vertices = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream s(line.substr(1));
            std::string tag;
            s >> tag;
            if (tag == "aligned") {
                double r;
                while (s >> r) mesh.aligned_radii.push_back(r);
            }
            continue;
        }
        std::istringstream s(line);
        if (n_vertices < 0) {
            if (!(s >> n_vertices) || n_vertices < 0) throw IoError("mesh: bad vertex count");
            continue;
        }
        if (read_vertices < n_vertices) {
            double x, y;
            if (!(s >> x >> y)) throw IoError("mesh: bad vertex line '" + line + "'");
            mesh.vertices.emplace_back(x, y);
            ++read_vertices;
            continue;
        }
        std::vector<long> idx;
        long v;
        while (s >> v) idx.push_back(v);
        rows.push_back(std::move(idx));
    }
    if (read_vertices != n_vertices || rows.empty()) throw IoError("mesh: truncated file");
    for (std::size_t r = 0; r + 1 < rows.size(); ++r) {
        if (rows[r].size() != 3) throw IoError("mesh: triangle line without 3 indices");
        mesh.triangles.push_back({static_cast<int>(rows[r][0]), static_cast<int>(rows[r][1]),
                                  static_cast<int>(rows[r][2])});
    }
    for (long b : rows.back()) mesh.boundary.push_back(static_cast<int>(b));
    for (const auto& t : mesh.triangles)
        for (int k : t)
            if (k < 0 || k >= n_vertices) throw IoError("mesh: vertex index out of range");
    double r = 0.0;
    for (int b : mesh.boundary) r = std::max(r, mesh.vertices.at(static_cast<std::size_t>(b)).norm());
    mesh.outer_radius = r;
    mesh.compute_h_max();
    return mesh;
}

void save_mesh(const std::string& path, const TriMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_mesh(out, mesh);
    if (!out) throw IoError("write to '" + path + "' failed");
}

TriMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_mesh(in);
}

}  // namespace cloaksim
