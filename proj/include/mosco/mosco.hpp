#pragma once

#include "mosco/vi.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace mosco {

// ---------------------------------------------------------------------------
// Hold-all sample grid

/// Midpoints of an n x n lattice over the bounding square of the ball D that
/// fall inside D; weights are uniform and rescaled to sum to |D|.
struct SampleGrid {
    double radius{1.0};
    std::vector<Point> points;
    std::vector<double> weights;

    static SampleGrid disk(double radius, int cells = 128);
    std::size_t size() const { return points.size(); }
    double total_weight() const;
};

enum class EmbeddingKind { dirichlet_zero_extension, neumann_pair };

std::string_view to_string(EmbeddingKind kind);

/// Precomputed location of every sample of a grid in one mesh.
class Embedding {
public:
    Embedding(MeshPtr mesh, const SampleGrid& grid);

    const SampleGrid& grid() const { return *grid_; }
    const MeshPtr& mesh() const { return mesh_; }
    const std::vector<Location>& locations() const { return locations_; }  // triangle -1 outside

private:
    MeshPtr mesh_;
    const SampleGrid* grid_;
    std::vector<Location> locations_;
};

/// Values (and raw gradient samples) of an extended field on the sample grid.
/// Samples outside the source domain carry 0.
struct EmbeddedField {
    EmbeddingKind kind{EmbeddingKind::neumann_pair};
    Vector values;
    Vector grad_x;
    Vector grad_y;
};

/// Zero extension requires a Dirichlet space.
EmbeddedField embed(const FEField& u, const Embedding& e, EmbeddingKind kind);

struct EmbeddedDistance {
    double value{0.0};     // L2(D) distance of the values
    double gradient{0.0};  // L2(D, R^2) distance of the gradient samples

    double full() const;  // H1(D) for zero extensions, pair norm otherwise
};

EmbeddedDistance distance(const EmbeddedField& a, const EmbeddedField& b, const SampleGrid& grid);
double norm(const EmbeddedField& a, const SampleGrid& grid);

// ---------------------------------------------------------------------------
// Transfer between meshes

/// Nodal interpolation of a field onto another space; target vertices outside
/// the source domain get 0, crack-lip vertices read the matching lip.
Vector transfer_nodal(const FEField& u, const FunctionSpace& target);

/// H1(Omega_target)-projection of the zero extension of u onto the target space.
Vector transfer_riesz(const FEField& u, const FunctionSpace& target);

// ---------------------------------------------------------------------------
// (M1) defects

struct DefectContext {
    const SampleGrid* grid;
    const Embedding* source;  // embedding of the source mesh
    const Embedding* target;  // embedding of the target mesh
    EmbeddingKind kind;
};

/// Upper bound on the embedded V-distance from u to the discrete target set:
/// the better of (interpolate, project) and (Riesz-smooth, project).
double m1_defect(const FEField& u, const FunctionSpace& target, const ObstacleConstraint* constraint,
                 const DefectContext& ctx);

/// sqrt(sum_k w_k m1_defect(u(t_k))^2) with trapezoid weights.
double m1_defect_time(const Trajectory& u, const FunctionSpace& target, const ObstacleConstraint* constraint,
                      const DefectContext& ctx);

// ---------------------------------------------------------------------------
// Constructions in time

/// S_delta(t) = ((T + 2 delta) / T) t - delta.
double stretch_map(double t_final, double delta, double t);

/// u o S_delta^{-1}: same nodal values on the grid over [t0 - delta, T + delta].
Trajectory stretch_time(const Trajectory& u, double delta);

/// Linear-in-time resampling onto another grid, constant outside u's interval.
Trajectory resample(const Trajectory& u, const TimeGrid& grid);

/// sqrt(sum_k w_k |a^k - b^k|_V^2); both trajectories on the same grid.
double l2v_distance(const Trajectory& a, const Trajectory& b, const NormSet& norms);

/// Discrete convolution with the normalized bump exp(-1/(1-s^2)) of width
/// epsilon; u is extended by its end values. Requires epsilon >= tau.
Trajectory mollify_time(const Trajectory& u, double epsilon);

/// Smooth partition of unity over sorted snapshot times: between t_i and
/// t_{i+1} the weights are 1 - g(s), g(s) with the smooth step g; constant
/// beyond the first and last snapshot.
Trajectory pou_recovery(SpacePtr space, const std::vector<std::pair<double, Vector>>& snapshots,
                        const TimeGrid& grid, const ObstacleConstraint* constraint = nullptr);

/// C-infinity step: 0 for s <= 0, 1 for s >= 1.
double smooth_step(double s);

// ---------------------------------------------------------------------------
// Capacity

/// min xi^T (S + M) xi over the Dirichlet background space with xi >= 1 on the
/// target vertices. Solved by projected SOR from the equality-constrained guess.
double capacity(const std::vector<int>& target_vertices, const FunctionSpace& background);

}  // namespace mosco
