#pragma once

#include "dprobe/probe.hpp"
#include "dprobe/scenario.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dprobe {

/// Uniform node grid: n interior nodes per axis plus the two boundary layers,
/// and `steps` backward-Euler steps covering [0, t_end].
struct Grid {
    Box box;
    int n = 32;
    int steps = 128;
    double t_end = 1.0;

    static Grid make(const Box& box, int n, double t_end, int steps);

    int N() const { return n + 2; }
    int levels() const { return steps + 1; }
    Vec3 h() const { return box.extent() / static_cast<double>(n + 1); }
    double h_max() const;
    double dt() const { return t_end / steps; }
    double time(int level) const { return level == steps ? t_end : t_end * level / steps; }
    std::size_t node_count() const
    {
        const auto m = static_cast<std::size_t>(N());
        return m * m * m;
    }
    std::size_t index(int i, int j, int k) const
    {
        const auto m = static_cast<std::size_t>(N());
        return (static_cast<std::size_t>(k) * m + static_cast<std::size_t>(j)) * m + static_cast<std::size_t>(i);
    }
    Vec3 node(int i, int j, int k) const;
    bool is_boundary(int i, int j, int k) const
    {
        return i == 0 || j == 0 || k == 0 || i == n + 1 || j == n + 1 || k == n + 1;
    }
    /// Largest level with time <= t (plus a small tolerance).
    int level_at_or_before(double t) const;

    bool operator==(const Grid&) const = default;
};

/// Scalar values at every node for every time level, level-major, z-y-x (x fastest).
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    explicit SpaceTimeField(const Grid& grid);

    const Grid& grid() const { return grid_; }
    int levels() const { return grid_.levels(); }
    std::span<double> level(int l);
    std::span<const double> level(int l) const;
    double& at(int l, int i, int j, int k) { return data_[offset(l) + grid_.index(i, j, k)]; }
    double at(int l, int i, int j, int k) const { return data_[offset(l) + grid_.index(i, j, k)]; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }
    bool all_finite() const;

private:
    std::size_t offset(int l) const { return static_cast<std::size_t>(l) * grid_.node_count(); }
    Grid grid_;
    std::vector<double> data_;
};

/// Per-level values on the six faces x-, x+, y-, y+, z-, z+. On each face the node
/// (a, b) runs over the two remaining axes in increasing order, a fastest.
class BoundaryTrace {
public:
    BoundaryTrace() = default;
    explicit BoundaryTrace(const Grid& grid);

    const Grid& grid() const { return grid_; }
    int levels() const { return grid_.levels(); }
    std::size_t face_size() const { return static_cast<std::size_t>(grid_.N()) * grid_.N(); }
    std::size_t level_size() const { return 6 * face_size(); }
    double& at(int l, int face, int a, int b) { return data_[slot(l, face, a, b)]; }
    double at(int l, int face, int a, int b) const { return data_[slot(l, face, a, b)]; }
    std::span<double> level(int l);
    std::span<const double> level(int l) const;
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    /// Grid coordinates (i, j, k) of a face node.
    std::array<int, 3> node_of(int face, int a, int b) const;
    Vec3 point(int face, int a, int b) const;
    static Vec3 normal(int face);
    /// Trapezoidal area weight of a face node (edge nodes half, corners quarter).
    double area_weight(int face, int a, int b) const;

private:
    std::size_t slot(int l, int face, int a, int b) const
    {
        return static_cast<std::size_t>(l) * level_size() + static_cast<std::size_t>(face) * face_size() +
               static_cast<std::size_t>(b) * grid_.N() + static_cast<std::size_t>(a);
    }
    Grid grid_;
    std::vector<double> data_;
};

/// A grid face whose harmonic conductivity differs from 1.
struct CutFace {
    std::uint32_t node; // lower node; the face joins node and node + e_axis
    std::uint8_t axis;
    double gamma;
};

/// Face conductivities at one instant. g[a][idx] is the face between node idx and idx + e_a;
/// the harmonic mean uses the exact fraction of the face segment inside D(t).
struct FaceConductivity {
    std::array<std::vector<double>, 3> g;
    std::vector<CutFace> cut;
};

FaceConductivity face_conductivity(const Scenario& scenario, const Grid& grid, double t);
FaceConductivity unit_conductivity(const Grid& grid);
/// Midpoint of a face.
Vec3 face_center(const Grid& grid, std::uint32_t node, int axis);

/// out = shift*in - A_gamma in on interior nodes (boundary entries of out set to 0).
/// The boundary entries of `in` enter the stencil as given.
void apply_operator(const Grid& grid, const FaceConductivity& cond, double shift, std::span<const double> in,
                    std::span<double> out);

struct SolverOptions {
    double cg_tol = 1e-9;
    int max_iter = 5000;
    int workers = 1;
    /// Solve for e^{-c t} v instead of v (adds c to the diagonal).
    double decay_shift = 0.0;
};

struct SolveStats {
    int max_iterations = 0;
    long total_iterations = 0;
    double max_residual = 0.0;
};

/// Backward Euler for dv/dt = div(gamma grad v), v = f on the boundary, v(0) = v0.
/// `v0` holds a value per node (boundary entries are overwritten from f).
SpaceTimeField solve_dirichlet(const Scenario& scenario, const Grid& grid, const BoundaryTrace& f,
                               std::span<const double> v0, const SolverOptions& options = {},
                               SolveStats* stats = nullptr);
/// Same operator stepped backward from v(t_end) = vT: -dv/dt = div(gamma grad v).
SpaceTimeField solve_adjoint_dirichlet(const Scenario& scenario, const Grid& grid, const BoundaryTrace& f,
                                       std::span<const double> vT, const SolverOptions& options = {},
                                       SolveStats* stats = nullptr);

/// Reflected wave in factored form w = e^{-tau^2 t} W, plus the probe gradients
/// on the cut faces that built the source (reused by the volume indicator).
struct ReflectedSolution {
    SpaceTimeField w;
    /// Per level: cut faces and du/dn_axis of the forward probe at their centers.
    std::vector<std::vector<CutFace>> cut;
    std::vector<std::vector<double>> du;
    ProbeParams params;
    SolveStats stats;
};

/// Solves dw/dt + tau^2 w - div(gamma grad w) = div((gamma-1) grad u) with w = 0 on the
/// boundary and w(0) = v0 - u(0). Throws PreconditionError when the clearance
/// d(y(t), D(t)) drops below 2h on [0, grid.t_end].
ReflectedSolution solve_reflected(const Scenario& scenario, const Grid& grid, const ProbeParams& params,
                                  const Needle& needle, const SolverOptions& options = {});

/// Forward probe at every node at t = 0 (the probe-seeded initial state).
std::vector<double> probe_initial_state(const Grid& grid, const ProbeParams& params, const Needle& needle,
                                        int workers = 1);
/// Nodal initial data for the scenario's v0 (probe-seeded uses the forward probe).
std::vector<double> initial_state(const Scenario& scenario, const Grid& grid, const ProbeParams& params,
                                  const Needle& needle, int workers = 1);

/// Outward normal derivative on the boundary, one-sided second order (3w0 - 4w1 + w2)/(2h).
BoundaryTrace dtn_flux(const SpaceTimeField& field);

/// Trace of a nodal field on the boundary.
BoundaryTrace boundary_trace(const SpaceTimeField& field);

/// Tricubic (Lagrange) interpolation of a level; trilinear in cells touching the boundary layer.
double sample_field(const SpaceTimeField& field, int level, const Vec3& x);

/// Raw little-endian float64 dump (level-major, z-y-x) plus a JSON sidecar with grid
/// metadata and caller-supplied fields. `stem` gets ".f64" and ".json" appended.
void write_snapshot(const SpaceTimeField& field, const std::string& stem, const std::string& extra_json = "{}");
SpaceTimeField read_snapshot(const std::string& stem, std::string* sidecar = nullptr);

} // namespace dprobe
