#include "mosco/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

namespace mosco {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double norm(Point p) { return std::hypot(p.x, p.y); }

double cross(Point a, Point b, Point c)
{
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

std::pair<int, int> edge_key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

// uniform subdivision of [a,b] with spacing <= s, endpoints included
std::vector<double> lines(double a, double b, double s)
{
    const int k = std::max(1, static_cast<int>(std::ceil((b - a) / s - 1e-9)));
    std::vector<double> out(static_cast<std::size_t>(k) + 1);
    for (int i = 0; i <= k; ++i) out[static_cast<std::size_t>(i)] = a + (b - a) * i / k;
    out.back() = b;
    return out;
}

struct Ring {
    double radius{0.0};
    int count{0};
    int first{0};  // index of the angle-0 vertex
    double radial_below{0.0};
    double radial_above{0.0};
    double angular{0.0};
};

struct PolarBase {
    std::vector<Point> points;
    std::vector<Triangle> triangles;
    std::vector<Ring> rings;
    bool has_center{false};
};

struct Anchor {
    double radius;
    bool tip;
};

// Concentric-ring triangulation of the annulus inner_radius <= |x| <= 1 (a disk
// when inner_radius == 0). Every ring carries a vertex at angle 0, so the
// segment {(x,0): x >= inner_radius} is a union of mesh edges. Anchors are
// forced ring radii; a tip anchor grades the mesh so the local size around it
// is at most half its radius.
PolarBase build_polar(double h, std::vector<Anchor> anchors, double inner_radius)
{
    std::sort(anchors.begin(), anchors.end(),
              [](const Anchor& a, const Anchor& b) { return a.radius < b.radius; });
    std::vector<Anchor> knots{{inner_radius, false}};
    for (const auto& a : anchors) {
        if (a.radius <= inner_radius + 1e-12 || a.radius >= 1.0 - 1e-12) continue;
        if (std::abs(a.radius - knots.back().radius) <= 1e-12) {
            knots.back().tip = knots.back().tip || a.tip;
            continue;
        }
        knots.push_back(a);
    }
    knots.push_back({1.0, false});

    struct Interval {
        double a, b, s;
    };
    std::vector<Interval> intervals;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double a = knots[i].radius;
        const double b = knots[i + 1].radius;
        double s = h;
        if (a > 0.0 && knots[i].tip) s = std::min(s, 0.5 * a);
        if (a == 0.0 && knots[i + 1].tip) s = std::min(s, 0.25 * b);
        intervals.push_back({a, b, s});
    }

    // ring radii with the radial spacing on each side
    std::vector<Ring> rings;
    for (const auto& iv : intervals) {
        const auto r = lines(iv.a, iv.b, iv.s);
        const double spacing = (iv.b - iv.a) / static_cast<double>(r.size() - 1);
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (!rings.empty() && std::abs(rings.back().radius - r[j]) <= 1e-14) {
                rings.back().radial_above = spacing;
                continue;
            }
            Ring ring;
            ring.radius = r[j];
            ring.radial_below = j == 0 ? 0.0 : spacing;
            ring.radial_above = spacing;
            rings.push_back(ring);
        }
    }
    rings.back().radial_above = 0.0;

    PolarBase base;
    std::size_t first_ring = 0;
    if (inner_radius == 0.0) {
        base.has_center = true;
        base.points.push_back({0.0, 0.0});
        first_ring = 1;  // rings[0] is the center itself
    }
    for (std::size_t j = first_ring; j < rings.size(); ++j) {
        auto& ring = rings[j];
        const double local = std::min({h, ring.radial_below > 0 ? ring.radial_below : h,
                                       ring.radial_above > 0 ? ring.radial_above : h});
        ring.count = std::max(12, static_cast<int>(std::ceil(two_pi * ring.radius / local - 1e-9)));
        ring.angular = two_pi * ring.radius / ring.count;
        ring.first = static_cast<int>(base.points.size());
        for (int k = 0; k < ring.count; ++k) {
            const double phi = two_pi * k / ring.count;
            base.points.push_back(k == 0 ? Point{ring.radius, 0.0}
                                         : Point{ring.radius * std::cos(phi), ring.radius * std::sin(phi)});
        }
    }
    if (base.has_center) rings.front().first = 0;

    auto push = [&base](int a, int b, int c) {
        Triangle t{a, b, c};
        if (cross(base.points[static_cast<std::size_t>(a)], base.points[static_cast<std::size_t>(b)],
                  base.points[static_cast<std::size_t>(c)]) < 0)
            std::swap(t[1], t[2]);
        base.triangles.push_back(t);
    };

    if (base.has_center) {
        const auto& r1 = rings[1];
        for (int k = 0; k < r1.count; ++k) push(0, r1.first + k, r1.first + (k + 1) % r1.count);
    }
    for (std::size_t j = first_ring; j + 1 < rings.size(); ++j) {
        const auto& in = rings[j];
        const auto& out = rings[j + 1];
        int i = 0, k = 0;
        while (i < in.count || k < out.count) {
            const double next_in = static_cast<double>(i + 1) / in.count;
            const double next_out = static_cast<double>(k + 1) / out.count;
            const int a = in.first + i % in.count;
            const int b = out.first + k % out.count;
            if (k == out.count || (i < in.count && next_in < next_out)) {
                push(a, b, in.first + (i + 1) % in.count);
                ++i;
            } else {
                push(a, b, out.first + (k + 1) % out.count);
                ++k;
            }
        }
    }
    base.rings = std::move(rings);
    return base;
}

// Boundary edges from triangle adjacency; tags come from geometry.
std::vector<BoundaryEdge> find_boundary(const std::vector<Point>& pts, const std::vector<Triangle>& tris,
                                        double hole_radius, bool disk)
{
    std::map<std::pair<int, int>, std::pair<int, int>> count;  // edge -> (count, triangle)
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
        const auto& tri = tris[static_cast<std::size_t>(t)];
        for (int e = 0; e < 3; ++e) {
            auto& c = count[edge_key(tri[static_cast<std::size_t>(e)], tri[static_cast<std::size_t>((e + 1) % 3)])];
            ++c.first;
            c.second = t;
        }
    }
    std::vector<BoundaryEdge> out;
    for (const auto& [key, c] : count) {
        if (c.first != 1) continue;
        // keep the orientation of the owning triangle
        const auto& tri = tris[static_cast<std::size_t>(c.second)];
        int a = key.first, b = key.second;
        for (int e = 0; e < 3; ++e) {
            if (edge_key(tri[static_cast<std::size_t>(e)], tri[static_cast<std::size_t>((e + 1) % 3)]) == key) {
                a = tri[static_cast<std::size_t>(e)];
                b = tri[static_cast<std::size_t>((e + 1) % 3)];
            }
        }
        const Point pa = pts[static_cast<std::size_t>(a)];
        const Point pb = pts[static_cast<std::size_t>(b)];
        BoundaryTag tag = BoundaryTag::outer;
        if (disk) {
            if (pa.y == 0.0 && pb.y == 0.0) {
                const Point c = pts[static_cast<std::size_t>(tri[0])] + pts[static_cast<std::size_t>(tri[1])] +
                                pts[static_cast<std::size_t>(tri[2])];
                tag = c.y > 0 ? BoundaryTag::crack_upper : BoundaryTag::crack_lower;
            } else if (norm(pa) > 1.0 - 1e-9 && norm(pb) > 1.0 - 1e-9) {
                tag = BoundaryTag::outer;
            } else if (hole_radius > 0 && std::abs(norm(pa) - hole_radius) < 1e-9 &&
                       std::abs(norm(pb) - hole_radius) < 1e-9) {
                tag = BoundaryTag::hole;
            } else {
                throw GeometryError("unclassifiable boundary edge");
            }
        }
        out.push_back({a, b, tag});
    }
    return out;
}

// Duplicate the angle-0 vertices with x > delta; triangles below the axis get
// the lower copy.
Mesh slit_disk(const PolarBase& base, double delta)
{
    auto pts = base.points;
    auto tris = base.triangles;
    std::vector<SeamPair> seams;
    std::vector<int> copy_of(pts.size(), -1);
    for (std::size_t j = base.has_center ? 1 : 0; j < base.rings.size(); ++j) {
        const auto& ring = base.rings[j];
        if (ring.radius > delta + 1e-14) {
            const int v = ring.first;
            copy_of[static_cast<std::size_t>(v)] = static_cast<int>(pts.size());
            seams.push_back({v, static_cast<int>(pts.size())});
            pts.push_back(pts[static_cast<std::size_t>(v)]);
        }
    }
    for (auto& tri : tris) {
        const double cy = pts[static_cast<std::size_t>(tri[0])].y + pts[static_cast<std::size_t>(tri[1])].y +
                          pts[static_cast<std::size_t>(tri[2])].y;
        if (cy >= 0) continue;
        for (auto& v : tri)
            if (v < static_cast<int>(copy_of.size()) && copy_of[static_cast<std::size_t>(v)] >= 0)
                v = copy_of[static_cast<std::size_t>(v)];
    }
    auto bnd = find_boundary(pts, tris, 0.0, true);
    const double r = holdall_radius_for(pts);
    return Mesh(std::move(pts), std::move(tris), std::move(bnd), std::move(seams), r);
}

Mesh unslit_disk(const PolarBase& base, double hole_radius)
{
    std::vector<Triangle> kept;
    for (const auto& tri : base.triangles) {
        const Point c = (1.0 / 3.0) * (base.points[static_cast<std::size_t>(tri[0])] +
                                       base.points[static_cast<std::size_t>(tri[1])] +
                                       base.points[static_cast<std::size_t>(tri[2])]);
        if (norm(c) > hole_radius) kept.push_back(tri);
    }
    std::vector<int> remap(base.points.size(), -1);
    std::vector<Point> pts;
    for (auto& tri : kept)
        for (auto& v : tri) {
            auto& m = remap[static_cast<std::size_t>(v)];
            if (m < 0) {
                m = static_cast<int>(pts.size());
                pts.push_back(base.points[static_cast<std::size_t>(v)]);
            }
            v = m;
        }
    auto bnd = find_boundary(pts, kept, hole_radius, true);
    const double r = holdall_radius_for(pts);
    return Mesh(std::move(pts), std::move(kept), std::move(bnd), {}, r);
}

void check_tip_resolution(const PolarBase& base, double delta)
{
    for (const auto& ring : base.rings) {
        if (std::abs(ring.radius - delta) > 1e-14) continue;
        const double local = std::max({ring.radial_below, ring.radial_above, ring.angular});
        if (local > 0.5 * delta + 1e-14)
            throw GeometryError("slit tip at delta=" + std::to_string(delta) + " under-resolved: local size " +
                                std::to_string(local) + " > delta/2");
        return;
    }
    throw GeometryError("no mesh ring through slit tip");
}

// Tensor-product grid restricted to cells whose center satisfies `keep`.
template <typename Keep>
Mesh tensor_mesh(const std::vector<double>& xs, const std::vector<double>& ys, Keep keep)
{
    const int nx = static_cast<int>(xs.size());
    const int ny = static_cast<int>(ys.size());
    std::vector<int> id(static_cast<std::size_t>(nx * ny), -1);
    std::vector<Point> pts;
    std::vector<Triangle> tris;
    auto vid = [&](int i, int j) {
        auto& v = id[static_cast<std::size_t>(j * nx + i)];
        if (v < 0) {
            v = static_cast<int>(pts.size());
            pts.push_back({xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(j)]});
        }
        return v;
    };
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const Point c{0.5 * (xs[static_cast<std::size_t>(i)] + xs[static_cast<std::size_t>(i + 1)]),
                          0.5 * (ys[static_cast<std::size_t>(j)] + ys[static_cast<std::size_t>(j + 1)])};
            if (!keep(c)) continue;
            const int v00 = vid(i, j), v10 = vid(i + 1, j), v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
            tris.push_back({v00, v10, v11});
            tris.push_back({v00, v11, v01});
        }
    auto bnd = find_boundary(pts, tris, 0.0, false);
    const double r = holdall_radius_for(pts);
    return Mesh(std::move(pts), std::move(tris), std::move(bnd), {}, r);
}

std::vector<double> merge_lines(std::vector<double> fixed, const std::vector<double>& soft, double min_gap)
{
    std::sort(fixed.begin(), fixed.end());
    fixed.erase(std::unique(fixed.begin(), fixed.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                fixed.end());
    std::vector<double> out = fixed;
    for (double s : soft) {
        const bool near = std::any_of(fixed.begin(), fixed.end(), [&](double f) { return std::abs(f - s) < min_gap; });
        if (!near) out.push_back(s);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              out.end());
    return out;
}

struct DumbbellGrid {
    std::vector<double> xs, ys;
};

DumbbellGrid dumbbell_grid(const std::vector<double>& widths, double h)
{
    constexpr double half = 0.5 * dumbbell_handle_length;
    DumbbellGrid g;
    for (const auto& piece : {lines(-1.0 - half, -half, h), lines(-half, half, h), lines(half, 1.0 + half, h)})
        g.xs.insert(g.xs.end(), piece.begin(), piece.end());
    g.xs = merge_lines(g.xs, {}, 0.0);

    std::vector<double> band{-0.5, 0.5};
    double min_band = h;
    for (double w : widths) {
        const double s = std::min(h, 0.5 * w);
        min_band = std::min(min_band, s);
        const auto l = lines(-0.5 * w, 0.5 * w, s);
        band.insert(band.end(), l.begin(), l.end());
    }
    g.ys = merge_lines(band, lines(-0.5, 0.5, h), 0.3 * min_band);
    return g;
}

Mesh dumbbell_member(const DumbbellGrid& g, double width)
{
    constexpr double half = 0.5 * dumbbell_handle_length;
    return tensor_mesh(g.xs, g.ys, [width](Point c) {
        const double ax = std::abs(c.x);
        if (ax > half && ax < 1.0 + half && std::abs(c.y) < 0.5) return true;
        return ax < half && std::abs(c.y) < 0.5 * width;
    });
}

}  // namespace

std::string_view to_string(BoundaryTag tag)
{
    switch (tag) {
    case BoundaryTag::outer: return "outer";
    case BoundaryTag::crack_upper: return "crack_upper";
    case BoundaryTag::crack_lower: return "crack_lower";
    case BoundaryTag::hole: return "hole";
    }
    return "outer";
}

BoundaryTag boundary_tag_from_string(std::string_view s)
{
    if (s == "outer") return BoundaryTag::outer;
    if (s == "crack_upper") return BoundaryTag::crack_upper;
    if (s == "crack_lower") return BoundaryTag::crack_lower;
    if (s == "hole") return BoundaryTag::hole;
    throw GeometryError("unknown boundary tag '" + std::string(s) + "'");
}

std::string_view to_string(FamilyKind kind)
{
    switch (kind) {
    case FamilyKind::cracked_disk: return "cracked_disk";
    case FamilyKind::dumbbell: return "dumbbell";
    case FamilyKind::fixed_hole: return "fixed_hole";
    case FamilyKind::custom: return "custom";
    }
    return "custom";
}

FamilyKind family_kind_from_string(std::string_view s)
{
    if (s == "cracked_disk") return FamilyKind::cracked_disk;
    if (s == "dumbbell") return FamilyKind::dumbbell;
    if (s == "fixed_hole") return FamilyKind::fixed_hole;
    if (s == "custom") return FamilyKind::custom;
    throw GeometryError("unknown family kind '" + std::string(s) + "'");
}

double holdall_radius_for(const std::vector<Point>& vertices)
{
    double r = 0.0;
    for (const auto& p : vertices) r = std::max(r, norm(p));
    if (std::abs(r - 1.0) <= 1e-9) return 1.0;
    return 1.5 * r;
}

// ---------------------------------------------------------------------------
// Mesh

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles, std::vector<BoundaryEdge> boundary_edges,
           std::vector<SeamPair> seams, double holdall_radius)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_edges_(std::move(boundary_edges)),
      seams_(std::move(seams)),
      holdall_radius_(holdall_radius)
{
    validate();
    on_boundary_.assign(vertices_.size(), false);
    for (const auto& e : boundary_edges_) {
        on_boundary_[static_cast<std::size_t>(e.a)] = true;
        on_boundary_[static_cast<std::size_t>(e.b)] = true;
    }
    lip_side_.assign(vertices_.size(), LipSide::none);
    for (const auto& s : seams_) {
        lip_side_[static_cast<std::size_t>(s.upper)] = LipSide::upper;
        lip_side_[static_cast<std::size_t>(s.lower)] = LipSide::lower;
    }
    build_index();
}

void Mesh::validate() const
{
    const int nv = num_vertices();
    if (!(holdall_radius_ > 0)) throw GeometryError("hold-all radius must be positive");
    for (const auto& p : vertices_)
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || norm(p) > holdall_radius_ * (1 + 1e-12))
            throw GeometryError("vertex outside the hold-all ball");
    std::map<std::pair<int, int>, int> count;
    for (int t = 0; t < num_triangles(); ++t) {
        for (int v : triangles_[static_cast<std::size_t>(t)])
            if (v < 0 || v >= nv) throw GeometryError("triangle index out of range");
        if (!(signed_area(t) > 0)) throw GeometryError("triangle " + std::to_string(t) + " has non-positive area");
        const auto& tri = triangles_[static_cast<std::size_t>(t)];
        for (int e = 0; e < 3; ++e)
            ++count[edge_key(tri[static_cast<std::size_t>(e)], tri[static_cast<std::size_t>((e + 1) % 3)])];
    }
    std::size_t n_single = 0;
    for (const auto& [k, c] : count) {
        if (c > 2) throw GeometryError("edge shared by more than two triangles");
        if (c == 1) ++n_single;
    }
    for (const auto& e : boundary_edges_) {
        const auto it = count.find(edge_key(e.a, e.b));
        if (it == count.end() || it->second != 1) throw GeometryError("boundary edge not owned by exactly one triangle");
    }
    if (n_single != boundary_edges_.size()) throw GeometryError("boundary edge list incomplete");
    for (const auto& s : seams_) {
        if (s.upper < 0 || s.upper >= nv || s.lower < 0 || s.lower >= nv || s.upper == s.lower)
            throw GeometryError("bad seam pair");
        const Point a = vertices_[static_cast<std::size_t>(s.upper)];
        const Point b = vertices_[static_cast<std::size_t>(s.lower)];
        if (a.x != b.x || a.y != b.y) throw GeometryError("seam pair coordinates differ");
    }
}

double Mesh::signed_area(int t) const
{
    const auto& tri = triangles_[static_cast<std::size_t>(t)];
    return 0.5 * cross(vertices_[static_cast<std::size_t>(tri[0])], vertices_[static_cast<std::size_t>(tri[1])],
                       vertices_[static_cast<std::size_t>(tri[2])]);
}

double Mesh::total_area() const
{
    double a = 0.0;
    for (int t = 0; t < num_triangles(); ++t) a += signed_area(t);
    return a;
}

Point Mesh::centroid(int t) const
{
    const auto& tri = triangles_[static_cast<std::size_t>(t)];
    return (1.0 / 3.0) * (vertices_[static_cast<std::size_t>(tri[0])] + vertices_[static_cast<std::size_t>(tri[1])] +
                          vertices_[static_cast<std::size_t>(tri[2])]);
}

void Mesh::build_index()
{
    double x0 = vertices_.front().x, x1 = x0, y0 = vertices_.front().y, y1 = y0;
    for (const auto& p : vertices_) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    const double mean_size = std::sqrt(total_area() / std::max(1, num_triangles()));
    cell_ = std::max(2.0 * mean_size, 1e-9);
    box_x0_ = x0 - 1e-9;
    box_y0_ = y0 - 1e-9;
    nbx_ = std::max(1, static_cast<int>(std::ceil((x1 - x0 + 2e-9) / cell_)));
    nby_ = std::max(1, static_cast<int>(std::ceil((y1 - y0 + 2e-9) / cell_)));
    buckets_.assign(static_cast<std::size_t>(nbx_ * nby_), {});
    for (int t = 0; t < num_triangles(); ++t) {
        const auto& tri = triangles_[static_cast<std::size_t>(t)];
        double tx0 = 1e300, tx1 = -1e300, ty0 = 1e300, ty1 = -1e300;
        for (int v : tri) {
            const Point p = vertices_[static_cast<std::size_t>(v)];
            tx0 = std::min(tx0, p.x);
            tx1 = std::max(tx1, p.x);
            ty0 = std::min(ty0, p.y);
            ty1 = std::max(ty1, p.y);
        }
        const int i0 = std::clamp(static_cast<int>((tx0 - box_x0_) / cell_ - 1e-6), 0, nbx_ - 1);
        const int i1 = std::clamp(static_cast<int>((tx1 - box_x0_) / cell_ + 1e-6), 0, nbx_ - 1);
        const int j0 = std::clamp(static_cast<int>((ty0 - box_y0_) / cell_ - 1e-6), 0, nby_ - 1);
        const int j1 = std::clamp(static_cast<int>((ty1 - box_y0_) / cell_ + 1e-6), 0, nby_ - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j * nbx_ + i)].push_back(t);
    }
}

std::vector<int> Mesh::candidates(Point p) const
{
    const double fx = (p.x - box_x0_) / cell_;
    const double fy = (p.y - box_y0_) / cell_;
    if (fx < 0 || fy < 0 || fx >= nbx_ || fy >= nby_) return {};
    return buckets_[static_cast<std::size_t>(static_cast<int>(fy) * nbx_ + static_cast<int>(fx))];
}

std::array<double, 3> Mesh::barycentric(int t, Point p) const
{
    const auto& tri = triangles_[static_cast<std::size_t>(t)];
    const Point a = vertices_[static_cast<std::size_t>(tri[0])];
    const Point b = vertices_[static_cast<std::size_t>(tri[1])];
    const Point c = vertices_[static_cast<std::size_t>(tri[2])];
    const double det = cross(a, b, c);
    const double l1 = cross(p, b, c) / det;
    const double l2 = cross(a, p, c) / det;
    return {l1, l2, 1.0 - l1 - l2};
}

std::optional<Location> Mesh::locate(Point p) const
{
    std::optional<Location> best;
    double best_min = 0.0;
    bool best_upper = false;
    for (int t : candidates(p)) {
        const auto l = barycentric(t, p);
        const double m = std::min({l[0], l[1], l[2]});
        if (m < -tol_geo) continue;
        const bool upper = centroid(t).y >= p.y;
        const bool better = !best || m > best_min + tol_geo ||
                            (std::abs(m - best_min) <= tol_geo && upper && !best_upper);
        if (better) {
            best = Location{t, l};
            best_min = m;
            best_upper = upper;
        }
    }
    return best;
}

std::optional<Location> Mesh::locate_from(Point p, Point hint) const
{
    const auto h = locate(hint);
    if (!h) return std::nullopt;
    return Location{h->triangle, barycentric(h->triangle, p)};
}

int Mesh::connected_components() const
{
    std::vector<int> parent(vertices_.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
        while (parent[static_cast<std::size_t>(v)] != v) {
            parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
            v = parent[static_cast<std::size_t>(v)];
        }
        return v;
    };
    std::vector<bool> used(vertices_.size(), false);
    for (const auto& tri : triangles_) {
        for (int v : tri) used[static_cast<std::size_t>(v)] = true;
        parent[static_cast<std::size_t>(find(tri[1]))] = find(tri[0]);
        parent[static_cast<std::size_t>(find(tri[2]))] = find(tri[0]);
    }
    int n = 0;
    for (int v = 0; v < num_vertices(); ++v)
        if (used[static_cast<std::size_t>(v)] && find(v) == v) ++n;
    return n;
}

bool operator==(const Mesh& a, const Mesh& b)
{
    auto same_pt = [](const Point& p, const Point& q) { return p.x == q.x && p.y == q.y; };
    auto same_edge = [](const BoundaryEdge& p, const BoundaryEdge& q) {
        return p.a == q.a && p.b == q.b && p.tag == q.tag;
    };
    auto same_seam = [](const SeamPair& p, const SeamPair& q) { return p.upper == q.upper && p.lower == q.lower; };
    return a.holdall_radius_ == b.holdall_radius_ &&
           std::equal(a.vertices_.begin(), a.vertices_.end(), b.vertices_.begin(), b.vertices_.end(), same_pt) &&
           a.triangles_ == b.triangles_ &&
           std::equal(a.boundary_edges_.begin(), a.boundary_edges_.end(), b.boundary_edges_.begin(),
                      b.boundary_edges_.end(), same_edge) &&
           std::equal(a.seams_.begin(), a.seams_.end(), b.seams_.begin(), b.seams_.end(), same_seam);
}

std::optional<Location> locate_point(const Mesh& mesh, Point x) { return mesh.locate(x); }

// ---------------------------------------------------------------------------
// Generators

Mesh generate_cracked_disk(double delta, double h)
{
    if (!(delta >= 0.0 && delta < 1.0)) throw GeometryError("cracked disk requires 0 <= delta < 1");
    if (!(h > 0.0)) throw GeometryError("mesh size h must be positive");
    if (delta > 0.0 && h > 0.5 * delta)
        throw GeometryError("cracked disk requires h <= delta/2 to resolve the slit tip");
    if (delta == 0.0 && h > 0.125) throw GeometryError("cracked disk with delta = 0 requires h <= 1/8");
    std::vector<Anchor> anchors;
    if (delta > 0.0) anchors.push_back({delta, true});
    return slit_disk(build_polar(h, anchors, 0.0), delta);
}

Mesh generate_unit_disk(double h)
{
    if (!(h > 0.0 && h <= 0.5)) throw GeometryError("unit disk requires 0 < h <= 1/2");
    return unslit_disk(build_polar(h, {}, 0.0), 0.0);
}

Mesh generate_fixed_hole(double radius, double h)
{
    if (!(radius > 0.0 && radius < 0.5)) throw GeometryError("fixed hole requires 0 < radius < 1/2");
    if (!(h > 0.0 && h <= 0.5)) throw GeometryError("fixed hole requires 0 < h <= 1/2");
    return unslit_disk(build_polar(h, {{radius, false}}, 0.0), radius);
}

Mesh generate_dumbbell(double handle_width, double h)
{
    if (!(handle_width > 0.0 && handle_width <= 1.0))
        throw GeometryError("dumbbell requires 0 < handle_width <= chamber diameter (1)");
    if (!(h > 0.0) || h > 0.5 * handle_width)
        throw GeometryError("dumbbell requires h <= handle_width/2 (two element layers across the handle)");
    return dumbbell_member(dumbbell_grid({handle_width}, h), handle_width);
}

Mesh generate_rectangle(double x0, double x1, double y0, double y1, double h)
{
    if (!(x1 > x0 && y1 > y0)) throw GeometryError("rectangle requires x1 > x0 and y1 > y0");
    if (!(h > 0.0)) throw GeometryError("mesh size h must be positive");
    return tensor_mesh(lines(x0, x1, h), lines(y0, y1, h), [](Point) { return true; });
}

// ---------------------------------------------------------------------------
// Families

std::vector<double> geometric_deltas(int n_max)
{
    std::vector<double> d;
    for (int n = 1; n <= n_max; ++n) d.push_back(std::ldexp(1.0, -n));
    return d;
}

namespace {
void check_decreasing(const std::vector<double>& p, double limit)
{
    if (p.empty()) throw GeometryError("family needs at least one member");
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] > limit)) throw GeometryError("family parameters must stay above the limit");
        if (i > 0 && !(p[i] < p[i - 1])) throw GeometryError("family parameters must be strictly decreasing");
    }
}
}  // namespace

DomainFamily make_cracked_disk_family(const std::vector<double>& deltas, double h)
{
    check_decreasing(deltas, 0.0);
    if (deltas.front() >= 1.0) throw GeometryError("cracked disk requires delta < 1");
    if (!(h > 0.0 && h <= 0.125)) throw GeometryError("cracked disk family requires 0 < h <= 1/8");
    std::vector<Anchor> anchors;
    for (double d : deltas) anchors.push_back({d, true});
    const auto base = build_polar(h, anchors, 0.0);
    DomainFamily fam;
    fam.kind = FamilyKind::cracked_disk;
    fam.params = deltas;
    fam.limit_param = 0.0;
    fam.h = h;
    for (double d : deltas) {
        check_tip_resolution(base, d);
        fam.members.push_back(std::make_shared<const Mesh>(slit_disk(base, d)));
    }
    fam.limit = std::make_shared<const Mesh>(slit_disk(base, 0.0));
    fam.background = std::make_shared<const Mesh>(unslit_disk(base, 0.0));
    return fam;
}

DomainFamily make_dumbbell_family(const std::vector<double>& widths, double h)
{
    check_decreasing(widths, 0.0);
    if (widths.front() > 1.0) throw GeometryError("dumbbell requires handle_width <= 1");
    if (!(h > 0.0 && h <= 0.25)) throw GeometryError("dumbbell family requires 0 < h <= 1/4");
    const auto grid = dumbbell_grid(widths, h);
    DomainFamily fam;
    fam.kind = FamilyKind::dumbbell;
    fam.params = widths;
    fam.limit_param = 0.0;
    fam.h = h;
    for (double w : widths) fam.members.push_back(std::make_shared<const Mesh>(dumbbell_member(grid, w)));
    fam.limit = std::make_shared<const Mesh>(dumbbell_member(grid, 0.0));
    return fam;
}

DomainFamily make_fixed_hole_family(double radius, int n_max, double h)
{
    if (n_max < 1) throw GeometryError("family needs at least one member");
    auto member = std::make_shared<const Mesh>(generate_fixed_hole(radius, h));
    DomainFamily fam;
    fam.kind = FamilyKind::fixed_hole;
    fam.params.assign(static_cast<std::size_t>(n_max), radius);
    fam.limit_param = 0.0;
    fam.h = h;
    fam.members.assign(static_cast<std::size_t>(n_max), member);
    fam.limit = std::make_shared<const Mesh>(unslit_disk(build_polar(h, {{radius, false}}, 0.0), 0.0));
    fam.background = fam.limit;
    return fam;
}

DomainFamily make_repeated_family(MeshPtr limit, const std::vector<double>& params)
{
    if (!limit || params.empty()) throw GeometryError("repeated family needs a limit mesh and parameters");
    DomainFamily fam;
    fam.kind = FamilyKind::custom;
    fam.params = params;
    fam.limit_param = 0.0;
    fam.members.assign(params.size(), limit);
    fam.limit = std::move(limit);
    return fam;
}

// ---------------------------------------------------------------------------
// I/O

namespace {
std::string fmt17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace

void write_mesh(std::ostream& os, const Mesh& mesh)
{
    os << "mesh2d " << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' ' << mesh.boundary_edges().size() << ' '
       << mesh.seams().size() << '\n';
    for (const auto& p : mesh.vertices()) os << "v " << fmt17(p.x) << ' ' << fmt17(p.y) << '\n';
    for (const auto& t : mesh.triangles()) os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (const auto& e : mesh.boundary_edges()) os << "b " << e.a << ' ' << e.b << ' ' << to_string(e.tag) << '\n';
    for (const auto& s : mesh.seams()) os << "s " << s.upper << ' ' << s.lower << '\n';
}

Mesh read_mesh(std::istream& is)
{
    std::string word;
    std::size_t nv = 0, nt = 0, nb = 0, ns = 0;
    if (!(is >> word) || word != "mesh2d" || !(is >> nv >> nt >> nb >> ns))
        throw GeometryError("mesh file: bad header");
    auto expect = [&](const char* tag) {
        if (!(is >> word) || word != tag) throw GeometryError(std::string("mesh file: expected '") + tag + "' line");
    };
    std::vector<Point> pts(nv);
    for (auto& p : pts) {
        expect("v");
        std::string xs, ys;
        if (!(is >> xs >> ys)) throw GeometryError("mesh file: truncated vertex");
        p = {std::strtod(xs.c_str(), nullptr), std::strtod(ys.c_str(), nullptr)};
    }
    std::vector<Triangle> tris(nt);
    for (auto& t : tris) {
        expect("t");
        if (!(is >> t[0] >> t[1] >> t[2])) throw GeometryError("mesh file: truncated triangle");
    }
    std::vector<BoundaryEdge> bnd(nb);
    for (auto& e : bnd) {
        expect("b");
        std::string tag;
        if (!(is >> e.a >> e.b >> tag)) throw GeometryError("mesh file: truncated boundary edge");
        e.tag = boundary_tag_from_string(tag);
    }
    std::vector<SeamPair> seams(ns);
    for (auto& s : seams) {
        expect("s");
        if (!(is >> s.upper >> s.lower)) throw GeometryError("mesh file: truncated seam");
    }
    const double r = holdall_radius_for(pts);
    return Mesh(std::move(pts), std::move(tris), std::move(bnd), std::move(seams), r);
}

void write_mesh_file(const std::string& path, const Mesh& mesh)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_mesh(os, mesh);
}

Mesh read_mesh_file(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    return read_mesh(is);
}

}  // namespace mosco
