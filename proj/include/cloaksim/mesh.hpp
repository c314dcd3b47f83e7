#pragma once

#include "cloaksim/types.hpp"

#include <array>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace cloaksim {

/// Conforming, positively oriented triangulation of a planar domain.
struct TriMesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    /// Outer boundary vertices in counter-clockwise order.
    std::vector<int> boundary;
    /// Radii realized exactly as mesh circles.
    std::vector<double> aligned_radii;
    double h_max = 0.0;
    double outer_radius = 0.0;

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t triangle_count() const { return triangles.size(); }

    double area(std::size_t tri) const;
    Vec2 centroid(std::size_t tri) const;
    /// Longest edge; recomputes `h_max`.
    double compute_h_max();
};

using MeshPtr = std::shared_ptr<const TriMesh>;

/// Radial refinement band: ring spacing at most `h_radial` for inner ≤ ρ ≤ outer.
struct RadialBand {
    double inner = 0.0;
    double outer = 0.0;
    double h_radial = 0.0;
};

/// Local mesh size controls for layered disk meshes.
///
/// The angular (in-ring) size is min(h_target, max(h_min, grading·ρ)) when grading > 0 and
/// h_target otherwise; the radial spacing is the angular size capped by any band covering ρ.
struct DiskMeshOptions {
    double grading = 0.0;
    double h_min = 0.0;
    std::vector<RadialBand> bands;
    int min_circle_vertices = 8;
};

/// Layered disk mesh: concentric rings of angularly uniform vertices, stitched into
/// triangles, with every radius in `aligned_radii` realized as a ring.
///
/// Throws PreconditionError when an aligned radius is outside (0, radius) or unsorted, or when
/// the local size would put fewer than `min_circle_vertices` on an aligned circle.
TriMesh build_disk_mesh(double radius, const std::vector<double>& aligned_radii, double h_target,
                        const DiskMeshOptions& options = {});

/// Structural invariants: orientation, conformity, aligned circles. Empty string when valid.
std::string check_mesh(const TriMesh& mesh, double tol = 1e-12);

/// Plain-text format: vertex count, "x y" lines, "i j k" lines, then one line of boundary
/// indices. Lines starting with '#' are comments; "# aligned r1 r2 ..." restores the aligned
/// radii.
void write_mesh(std::ostream& out, const TriMesh& mesh);
TriMesh read_mesh(std::istream& in);
void save_mesh(const std::string& path, const TriMesh& mesh);
TriMesh load_mesh(const std::string& path);

}  // namespace cloaksim
