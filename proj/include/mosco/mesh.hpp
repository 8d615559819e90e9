#pragma once

#include <array>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mosco {

struct Point {
    double x{0.0};
    double y{0.0};
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }

/// Raised for invalid geometry requests and broken mesh invariants.
class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class BoundaryTag { outer, crack_upper, crack_lower, hole };

std::string_view to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(std::string_view s);

struct BoundaryEdge {
    int a{0};
    int b{0};
    BoundaryTag tag{BoundaryTag::outer};
};

/// Two topologically distinct vertices at identical coordinates (crack lips).
struct SeamPair {
    int upper{0};
    int lower{0};
};

enum class LipSide { none, upper, lower };

using Triangle = std::array<int, 3>;

struct Location {
    int triangle{-1};
    std::array<double, 3> bary{};
};

inline constexpr double tol_geo = 1e-12;

/// Conforming triangulation with crack seams. Immutable after construction;
/// the constructor validates every invariant and builds the point-location index.
class Mesh {
public:
    Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
         std::vector<BoundaryEdge> boundary_edges, std::vector<SeamPair> seams,
         double holdall_radius);

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }
    const std::vector<SeamPair>& seams() const { return seams_; }
    double holdall_radius() const { return holdall_radius_; }

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_triangles() const { return static_cast<int>(triangles_.size()); }

    double signed_area(int t) const;
    double total_area() const;
    Point centroid(int t) const;

    /// true for vertices that lie on any boundary edge.
    const std::vector<bool>& boundary_vertices() const { return on_boundary_; }
    LipSide lip_side(int v) const { return lip_side_[static_cast<std::size_t>(v)]; }

    /// Containing triangle and barycentrics, or nullopt for points outside the
    /// triangulated domain. Ties (edges, crack line) go to the most interior
    /// candidate, then to the candidate lying above the query (upper lip).
    std::optional<Location> locate(Point p) const;

    /// Same as locate() but restricted to triangles on the side of the query
    /// indicated by `hint` (a nearby point strictly inside the wanted triangle).
    std::optional<Location> locate_from(Point p, Point hint) const;

    /// Number of connected components of the triangle adjacency graph.
    int connected_components() const;

    friend bool operator==(const Mesh& a, const Mesh& b);

private:
    void validate() const;
    void build_index();
    std::vector<int> candidates(Point p) const;
    std::array<double, 3> barycentric(int t, Point p) const;

    std::vector<Point> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<BoundaryEdge> boundary_edges_;
    std::vector<SeamPair> seams_;
    double holdall_radius_{1.0};

    std::vector<bool> on_boundary_;
    std::vector<LipSide> lip_side_;

    // uniform bucket grid over the bounding box
    double box_x0_{0}, box_y0_{0}, cell_{1};
    int nbx_{1}, nby_{1};
    std::vector<std::vector<int>> buckets_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

std::optional<Location> locate_point(const Mesh& mesh, Point x);

/// Hold-all ball radius rule shared by generators and the file reader.
double holdall_radius_for(const std::vector<Point>& vertices);

// ---------------------------------------------------------------------------
// Generators

/// Unit disk slit along {(x,0): delta <= x <= 1}; delta = 0 is the limit domain.
Mesh generate_cracked_disk(double delta, double h);
/// Two unit-square chambers joined by a handle of length 1/2.
Mesh generate_dumbbell(double handle_width, double h);
/// Unit disk minus the closed ball of the given radius.
Mesh generate_fixed_hole(double radius, double h);
Mesh generate_unit_disk(double h);
Mesh generate_rectangle(double x0, double x1, double y0, double y1, double h);

inline constexpr double dumbbell_handle_length = 0.5;

// ---------------------------------------------------------------------------
// Families

enum class FamilyKind { cracked_disk, dumbbell, fixed_hole, custom };

std::string_view to_string(FamilyKind kind);
FamilyKind family_kind_from_string(std::string_view s);

/// Sequence of domains Omega_1, Omega_2, ... with a declared limit Omega.
/// Built-in families derive every member and the limit from one shared base
/// triangulation, so only the domain changes along the sequence.
struct DomainFamily {
    FamilyKind kind{FamilyKind::custom};
    std::vector<double> params;  // delta_n, handle widths, or hole radius per n
    double limit_param{0.0};
    double h{0.0};
    std::vector<MeshPtr> members;
    MeshPtr limit;
    /// Unslit, hole-free triangulation sharing the family's vertex positions
    /// (disk families only; null otherwise).
    MeshPtr background;

    int size() const { return static_cast<int>(members.size()); }
};

/// delta_n = 2^{-n}, n = 1..n_max.
std::vector<double> geometric_deltas(int n_max);

DomainFamily make_cracked_disk_family(const std::vector<double>& deltas, double h);
DomainFamily make_dumbbell_family(const std::vector<double>& widths, double h);
DomainFamily make_fixed_hole_family(double radius, int n_max, double h);
/// Omega_n = Omega for every n (self-comparison family).
DomainFamily make_repeated_family(MeshPtr limit, const std::vector<double>& params);

// ---------------------------------------------------------------------------
// Text I/O

void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);
void write_mesh_file(const std::string& path, const Mesh& mesh);
Mesh read_mesh_file(const std::string& path);

}  // namespace mosco
