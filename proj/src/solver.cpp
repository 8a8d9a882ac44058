#include "dprobe/solver.hpp"

#include "dprobe/error.hpp"
#include "dprobe/parallel.hpp"
#include "dprobe/util.hpp"

#include <algorithm>
#include <cmath>

namespace dprobe {

Grid Grid::make(const Box& box, int n, double t_end, int steps)
{
    if (n < 8) {
        throw PreconditionError("Grid: need n >= 8 interior nodes per axis");
    }
    if (steps < 1 || !(t_end > 0.0)) {
        throw PreconditionError("Grid: need steps >= 1 and t_end > 0");
    }
    const Vec3 e = box.extent();
    if (!(e.x > 0 && e.y > 0 && e.z > 0)) {
        throw PreconditionError("Grid: degenerate box");
    }
    Grid g;
    g.box = box;
    g.n = n;
    g.steps = steps;
    g.t_end = t_end;
    return g;
}

double Grid::h_max() const
{
    const Vec3 hh = h();
    return std::max({hh.x, hh.y, hh.z});
}

Vec3 Grid::node(int i, int j, int k) const
{
    const Vec3 hh = h();
    // The last layer is pinned to hi so that h (n+1) spans the box exactly.
    auto coord = [&](int idx, int a) { return idx == n + 1 ? box.hi[a] : box.lo[a] + idx * hh[a]; };
    return {coord(i, 0), coord(j, 1), coord(k, 2)};
}

int Grid::level_at_or_before(double t) const
{
    const double x = t / t_end * steps;
    int l = static_cast<int>(std::floor(x + 1e-9));
    return std::clamp(l, 0, steps);
}

SpaceTimeField::SpaceTimeField(const Grid& grid) : grid_(grid), data_(grid.node_count() * grid.levels(), 0.0) {}

std::span<double> SpaceTimeField::level(int l) { return {data_.data() + offset(l), grid_.node_count()}; }

std::span<const double> SpaceTimeField::level(int l) const
{
    return {data_.data() + offset(l), grid_.node_count()};
}

bool SpaceTimeField::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

BoundaryTrace::BoundaryTrace(const Grid& grid) : grid_(grid), data_(6 * static_cast<std::size_t>(grid.N()) * grid.N() * grid.levels(), 0.0) {}

std::span<double> BoundaryTrace::level(int l) { return {data_.data() + static_cast<std::size_t>(l) * level_size(), level_size()}; }

std::span<const double> BoundaryTrace::level(int l) const
{
    return {data_.data() + static_cast<std::size_t>(l) * level_size(), level_size()};
}

std::array<int, 3> BoundaryTrace::node_of(int face, int a, int b) const
{
    const int axis = face / 2;
    const int fixed = face % 2 == 0 ? 0 : grid_.n + 1;
    std::array<int, 3> ijk{};
    ijk[static_cast<std::size_t>(axis)] = fixed;
    ijk[static_cast<std::size_t>((axis + 1) % 3 < (axis + 2) % 3 ? (axis + 1) % 3 : (axis + 2) % 3)] = a;
    ijk[static_cast<std::size_t>((axis + 1) % 3 < (axis + 2) % 3 ? (axis + 2) % 3 : (axis + 1) % 3)] = b;
    return ijk;
}

Vec3 BoundaryTrace::point(int face, int a, int b) const
{
    const auto ijk = node_of(face, a, b);
    return grid_.node(ijk[0], ijk[1], ijk[2]);
}

Vec3 BoundaryTrace::normal(int face)
{
    Vec3 v{};
    v[face / 2] = face % 2 == 0 ? -1.0 : 1.0;
    return v;
}

double BoundaryTrace::area_weight(int face, int a, int b) const
{
    const int axis = face / 2;
    const int a1 = std::min((axis + 1) % 3, (axis + 2) % 3);
    const int a2 = std::max((axis + 1) % 3, (axis + 2) % 3);
    const Vec3 hh = grid_.h();
    const int last = grid_.n + 1;
    const double wa = (a == 0 || a == last) ? 0.5 : 1.0;
    const double wb = (b == 0 || b == last) ? 0.5 : 1.0;
    return wa * wb * hh[a1] * hh[a2];
}

Vec3 face_center(const Grid& grid, std::uint32_t node, int axis)
{
    const auto m = static_cast<std::uint32_t>(grid.N());
    const int i = static_cast<int>(node % m);
    const int j = static_cast<int>((node / m) % m);
    const int k = static_cast<int>(node / (m * m));
    Vec3 p = grid.node(i, j, k);
    p[axis] += 0.5 * grid.h()[axis];
    return p;
}

FaceConductivity unit_conductivity(const Grid& grid)
{
    FaceConductivity c;
    for (auto& v : c.g) {
        v.assign(grid.node_count(), 1.0);
    }
    return c;
}

FaceConductivity face_conductivity(const Scenario& scenario, const Grid& grid, double t)
{
    FaceConductivity c = unit_conductivity(grid);
    const auto& inc = scenario.inclusion;
    const Vec3 ctr = inc.center(t);
    const Vec3 ax = inc.semi_axes(t);
    const Vec3 hh = grid.h();
    int lo[3];
    int hi[3];
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::max(0, static_cast<int>(std::floor((ctr[a] - ax[a] - grid.box.lo[a]) / hh[a])) - 1);
        hi[a] = std::min(grid.n + 1, static_cast<int>(std::ceil((ctr[a] + ax[a] - grid.box.lo[a]) / hh[a])) + 1);
    }
    for (int k = lo[2]; k <= hi[2]; ++k) {
        for (int j = lo[1]; j <= hi[1]; ++j) {
            for (int i = lo[0]; i <= hi[0]; ++i) {
                const int ijk[3] = {i, j, k};
                const Vec3 p = grid.node(i, j, k);
                const std::size_t idx = grid.index(i, j, k);
                for (int a = 0; a < 3; ++a) {
                    if (ijk[a] >= grid.n + 1) {
                        continue;
                    }
                    Vec3 q = p;
                    q[a] += hh[a];
                    const double frac = inc.segment_fraction(t, p, q);
                    if (frac <= 0.0) {
                        continue;
                    }
                    const double kval = inc.contrast(t, (p + q) * 0.5);
                    const double g = 1.0 / ((1.0 - frac) + frac / kval);
                    c.g[static_cast<std::size_t>(a)][idx] = g;
                    c.cut.push_back({static_cast<std::uint32_t>(idx), static_cast<std::uint8_t>(a), g});
                }
            }
        }
    }
    return c;
}

void apply_operator(const Grid& grid, const FaceConductivity& cond, double shift, std::span<const double> in,
                    std::span<double> out)
{
    const int n = grid.n;
    const Vec3 hh = grid.h();
    const double ix = 1.0 / (hh.x * hh.x);
    const double iy = 1.0 / (hh.y * hh.y);
    const double iz = 1.0 / (hh.z * hh.z);
    const std::size_t sx = 1;
    const std::size_t sy = static_cast<std::size_t>(grid.N());
    const std::size_t sz = sy * sy;
    const auto& gx = cond.g[0];
    const auto& gy = cond.g[1];
    const auto& gz = cond.g[2];
    std::fill(out.begin(), out.end(), 0.0);
    for (int k = 1; k <= n; ++k) {
        for (int j = 1; j <= n; ++j) {
            std::size_t idx = grid.index(1, j, k);
            for (int i = 1; i <= n; ++i, ++idx) {
                const double c = in[idx];
                const double lap = ix * (gx[idx] * (in[idx + sx] - c) - gx[idx - sx] * (c - in[idx - sx])) +
                                   iy * (gy[idx] * (in[idx + sy] - c) - gy[idx - sy] * (c - in[idx - sy])) +
                                   iz * (gz[idx] * (in[idx + sz] - c) - gz[idx - sz] * (c - in[idx - sz]));
                out[idx] = shift * c - lap;
            }
        }
    }
}

namespace {

/// Per-z-slab partial sums added in slab order: the result does not depend on the worker count.
double slab_dot(const Grid& grid, std::span<const double> a, std::span<const double> b, int workers)
{
    const int n = grid.n;
    std::vector<double> part(static_cast<std::size_t>(n), 0.0);
    parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t s) {
        const int k = static_cast<int>(s) + 1;
        double acc = 0.0;
        for (int j = 1; j <= n; ++j) {
            std::size_t idx = grid.index(1, j, k);
            for (int i = 1; i <= n; ++i, ++idx) {
                acc += a[idx] * b[idx];
            }
        }
        part[s] = acc;
    });
    double sum = 0.0;
    for (const double p : part) {
        sum += p;
    }
    return sum;
}

void parallel_apply(const Grid& grid, const FaceConductivity& cond, double shift, std::span<const double> in,
                    std::span<double> out, int workers)
{
    if (workers <= 1) {
        apply_operator(grid, cond, shift, in, out);
        return;
    }
    const int n = grid.n;
    const Vec3 hh = grid.h();
    const double ix = 1.0 / (hh.x * hh.x);
    const double iy = 1.0 / (hh.y * hh.y);
    const double iz = 1.0 / (hh.z * hh.z);
    const std::size_t sy = static_cast<std::size_t>(grid.N());
    const std::size_t sz = sy * sy;
    const auto& gx = cond.g[0];
    const auto& gy = cond.g[1];
    const auto& gz = cond.g[2];
    parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t s) {
        const int k = static_cast<int>(s) + 1;
        for (int j = 1; j <= n; ++j) {
            std::size_t idx = grid.index(1, j, k);
            for (int i = 1; i <= n; ++i, ++idx) {
                const double c = in[idx];
                const double lap = ix * (gx[idx] * (in[idx + 1] - c) - gx[idx - 1] * (c - in[idx - 1])) +
                                   iy * (gy[idx] * (in[idx + sy] - c) - gy[idx - sy] * (c - in[idx - sy])) +
                                   iz * (gz[idx] * (in[idx + sz] - c) - gz[idx - sz] * (c - in[idx - sz]));
                out[idx] = shift * c - lap;
            }
        }
    });
}

/// Jacobi-preconditioned CG on interior nodes; x holds the warm start (zero boundary).
int pcg(const Grid& grid, const FaceConductivity& cond, double shift, std::span<const double> b,
        std::span<double> x, const SolverOptions& opt, double& rel_res)
{
    const std::size_t m = grid.node_count();
    const int n = grid.n;
    const Vec3 hh = grid.h();
    const std::size_t sy = static_cast<std::size_t>(grid.N());
    const std::size_t sz = sy * sy;
    std::vector<double> diag(m, 1.0);
    for (int k = 1; k <= n; ++k) {
        for (int j = 1; j <= n; ++j) {
            std::size_t idx = grid.index(1, j, k);
            for (int i = 1; i <= n; ++i, ++idx) {
                diag[idx] = shift + (cond.g[0][idx] + cond.g[0][idx - 1]) / (hh.x * hh.x) +
                            (cond.g[1][idx] + cond.g[1][idx - sy]) / (hh.y * hh.y) +
                            (cond.g[2][idx] + cond.g[2][idx - sz]) / (hh.z * hh.z);
            }
        }
    }
    const double bnorm = std::sqrt(slab_dot(grid, b, b, opt.workers));
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        rel_res = 0.0;
        return 0;
    }
    std::vector<double> r(m, 0.0);
    std::vector<double> z(m, 0.0);
    std::vector<double> p(m, 0.0);
    std::vector<double> ap(m, 0.0);
    parallel_apply(grid, cond, shift, x, ap, opt.workers);
    for (std::size_t i = 0; i < m; ++i) {
        r[i] = b[i] - ap[i];
        z[i] = r[i] / diag[i];
        p[i] = z[i];
    }
    double rz = slab_dot(grid, r, z, opt.workers);
    double rn = std::sqrt(slab_dot(grid, r, r, opt.workers));
    int it = 0;
    while (rn > opt.cg_tol * bnorm) {
        if (it >= opt.max_iter) {
            throw NumericalError("CG did not converge in " + std::to_string(opt.max_iter) +
                                 " iterations (relative residual " + format_double(rn / bnorm) + ")");
        }
        parallel_apply(grid, cond, shift, p, ap, opt.workers);
        const double alpha = rz / slab_dot(grid, p, ap, opt.workers);
        for (std::size_t i = 0; i < m; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rn = std::sqrt(slab_dot(grid, r, r, opt.workers));
        ++it;
        if (rn <= opt.cg_tol * bnorm) {
            break;
        }
        for (std::size_t i = 0; i < m; ++i) {
            z[i] = r[i] / diag[i];
        }
        const double rz_new = slab_dot(grid, r, z, opt.workers);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < m; ++i) {
            p[i] = z[i] + beta * p[i];
        }
    }
    rel_res = rn / bnorm;
    return it;
}

void zero_boundary(const Grid& grid, std::span<double> v)
{
    const int last = grid.n + 1;
    for (int k = 0; k <= last; ++k) {
        for (int j = 0; j <= last; ++j) {
            for (int i = 0; i <= last; ++i) {
                if (grid.is_boundary(i, j, k)) {
                    v[grid.index(i, j, k)] = 0.0;
                }
            }
        }
    }
}

void load_boundary(const BoundaryTrace& f, int l, std::span<double> v)
{
    const int N = f.grid().N();
    for (int face = 0; face < 6; ++face) {
        for (int b = 0; b < N; ++b) {
            for (int a = 0; a < N; ++a) {
                const auto ijk = f.node_of(face, a, b);
                v[f.grid().index(ijk[0], ijk[1], ijk[2])] = f.at(l, face, a, b);
            }
        }
    }
}

void record(SolveStats* stats, int it, double res)
{
    if (stats) {
        stats->max_iterations = std::max(stats->max_iterations, it);
        stats->total_iterations += it;
        stats->max_residual = std::max(stats->max_residual, res);
    }
}

/// One implicit step: (shift - A) v_new = prev/dt + source with boundary data `lift`.
void implicit_step(const Grid& grid, const FaceConductivity& cond, double shift, std::span<const double> prev,
                   std::span<const double> source, std::span<const double> lift, std::span<double> result,
                   const SolverOptions& opt, SolveStats* stats)
{
    const std::size_t m = grid.node_count();
    const double inv_dt = 1.0 / grid.dt();
    std::vector<double> rhs(m, 0.0);
    std::vector<double> lifted(m, 0.0);
    apply_operator(grid, cond, shift, lift, lifted);
    std::vector<double> x(prev.begin(), prev.end());
    for (std::size_t i = 0; i < m; ++i) {
        rhs[i] = prev[i] * inv_dt - lifted[i] + (source.empty() ? 0.0 : source[i]);
    }
    zero_boundary(grid, rhs);
    zero_boundary(grid, x);
    double res = 0.0;
    const int it = pcg(grid, cond, shift, rhs, x, opt, res);
    record(stats, it, res);
    for (std::size_t i = 0; i < m; ++i) {
        result[i] = x[i] + lift[i];
    }
}

void check_compatible(const Grid& grid, const BoundaryTrace& f, std::size_t v_size)
{
    if (!(f.grid() == grid)) {
        throw ShapeError("boundary trace grid does not match the solver grid");
    }
    if (v_size != grid.node_count()) {
        throw ShapeError("initial field size does not match the grid");
    }
}

} // namespace

SpaceTimeField solve_dirichlet(const Scenario& scenario, const Grid& grid, const BoundaryTrace& f,
                               std::span<const double> v0, const SolverOptions& opt, SolveStats* stats)
{
    check_compatible(grid, f, v0.size());
    SpaceTimeField v(grid);
    auto l0 = v.level(0);
    std::copy(v0.begin(), v0.end(), l0.begin());
    load_boundary(f, 0, l0);
    const double shift = 1.0 / grid.dt() + opt.decay_shift;
    std::vector<double> lift(grid.node_count(), 0.0);
    for (int l = 1; l <= grid.steps; ++l) {
        const FaceConductivity cond = face_conductivity(scenario, grid, grid.time(l));
        std::fill(lift.begin(), lift.end(), 0.0);
        load_boundary(f, l, lift);
        implicit_step(grid, cond, shift, v.level(l - 1), {}, lift, v.level(l), opt, stats);
    }
    return v;
}

SpaceTimeField solve_adjoint_dirichlet(const Scenario& scenario, const Grid& grid, const BoundaryTrace& f,
                                       std::span<const double> vT, const SolverOptions& opt, SolveStats* stats)
{
    check_compatible(grid, f, vT.size());
    SpaceTimeField v(grid);
    auto last = v.level(grid.steps);
    std::copy(vT.begin(), vT.end(), last.begin());
    load_boundary(f, grid.steps, last);
    const double shift = 1.0 / grid.dt() + opt.decay_shift;
    std::vector<double> lift(grid.node_count(), 0.0);
    for (int l = grid.steps - 1; l >= 0; --l) {
        const FaceConductivity cond = face_conductivity(scenario, grid, grid.time(l));
        std::fill(lift.begin(), lift.end(), 0.0);
        load_boundary(f, l, lift);
        implicit_step(grid, cond, shift, v.level(l + 1), {}, lift, v.level(l), opt, stats);
    }
    return v;
}

std::vector<double> probe_initial_state(const Grid& grid, const ProbeParams& params, const Needle& needle,
                                        int workers)
{
    const ProbeParams pz = params.with_mode(EtaMode::Zero);
    std::vector<double> v(grid.node_count(), 0.0);
    const int N = grid.N();
    parallel_for(static_cast<std::size_t>(N), workers, [&](std::size_t s) {
        const int k = static_cast<int>(s);
        for (int j = 0; j < N; ++j) {
            for (int i = 0; i < N; ++i) {
                v[grid.index(i, j, k)] = probe_U(pz, needle, 0.0, grid.node(i, j, k)).value;
            }
        }
    });
    return v;
}

std::vector<double> initial_state(const Scenario& scenario, const Grid& grid, const ProbeParams& params,
                                  const Needle& needle, int workers)
{
    if (scenario.v0.kind == InitialData::Kind::ProbeSeeded) {
        return probe_initial_state(grid, params, needle, workers);
    }
    std::vector<double> v(grid.node_count(), 0.0);
    const int N = grid.N();
    for (int k = 0; k < N; ++k) {
        for (int j = 0; j < N; ++j) {
            for (int i = 0; i < N; ++i) {
                v[grid.index(i, j, k)] = scenario.v0(grid.node(i, j, k));
            }
        }
    }
    return v;
}

ReflectedSolution solve_reflected(const Scenario& scenario, const Grid& grid, const ProbeParams& params,
                                  const Needle& needle, const SolverOptions& opt)
{
    if (params.eta_mode != EtaMode::Zero) {
        throw PreconditionError("solve_reflected: eta_mode must be Zero");
    }
    const double need = 2.0 * grid.h_max();
    for (int l = 0; l <= 2 * grid.steps; ++l) {
        const double t = grid.t_end * l / (2.0 * grid.steps);
        const double c = clearance(scenario, needle, t);
        if (c < need) {
            throw PreconditionError("solve_reflected: clearance " + format_double(c) + " < 2h = " +
                                    format_double(need) + " at t = " + format_double(t));
        }
    }
    const double tau = params.tau;
    ReflectedSolution out;
    out.params = params;
    out.w = SpaceTimeField(grid);
    out.cut.resize(static_cast<std::size_t>(grid.levels()));
    out.du.resize(static_cast<std::size_t>(grid.levels()));
    const std::size_t m = grid.node_count();

    auto w0 = out.w.level(0);
    if (scenario.v0.kind != InitialData::Kind::ProbeSeeded) {
        const auto u0 = probe_initial_state(grid, params, needle, opt.workers);
        const auto v0 = initial_state(scenario, grid, params, needle, opt.workers);
        for (std::size_t i = 0; i < m; ++i) {
            w0[i] = v0[i] - u0[i];
        }
        zero_boundary(grid, w0);
    }

    const Vec3 hh = grid.h();
    const double shift = 1.0 / grid.dt() + tau * tau;
    std::vector<double> source(m, 0.0);
    const std::vector<double> lift(m, 0.0);
    for (int l = 0; l <= grid.steps; ++l) {
        const double t = grid.time(l);
        const FaceConductivity cond = face_conductivity(scenario, grid, t);
        auto& cut = out.cut[static_cast<std::size_t>(l)];
        auto& du = out.du[static_cast<std::size_t>(l)];
        cut = cond.cut;
        du.assign(cut.size(), 0.0);
        parallel_for(cut.size(), opt.workers, [&](std::size_t f) {
            const Vec3 xc = face_center(grid, cut[f].node, cut[f].axis);
            du[f] = probe_U(params, needle, t, xc).gradient[cut[f].axis];
        });
        if (l == 0) {
            continue;
        }
        std::fill(source.begin(), source.end(), 0.0);
        const std::size_t stride[3] = {1, static_cast<std::size_t>(grid.N()),
                                        static_cast<std::size_t>(grid.N()) * grid.N()};
        for (std::size_t f = 0; f < cut.size(); ++f) {
            const int a = cut[f].axis;
            const double flux = (cut[f].gamma - 1.0) * du[f] / hh[a];
            source[cut[f].node] += flux;
            source[cut[f].node + stride[a]] -= flux;
        }
        implicit_step(grid, cond, shift, out.w.level(l - 1), source, lift, out.w.level(l), opt, &out.stats);
    }
    return out;
}

BoundaryTrace dtn_flux(const SpaceTimeField& field)
{
    const Grid& grid = field.grid();
    BoundaryTrace tr(grid);
    const int N = grid.N();
    const Vec3 hh = grid.h();
    for (int l = 0; l < grid.levels(); ++l) {
        const auto v = field.level(l);
        for (int face = 0; face < 6; ++face) {
            const int axis = face / 2;
            const int inward = face % 2 == 0 ? 1 : -1;
            for (int b = 0; b < N; ++b) {
                for (int a = 0; a < N; ++a) {
                    auto ijk = tr.node_of(face, a, b);
                    const double w0 = v[grid.index(ijk[0], ijk[1], ijk[2])];
                    ijk[static_cast<std::size_t>(axis)] += inward;
                    const double w1 = v[grid.index(ijk[0], ijk[1], ijk[2])];
                    ijk[static_cast<std::size_t>(axis)] += inward;
                    const double w2 = v[grid.index(ijk[0], ijk[1], ijk[2])];
                    tr.at(l, face, a, b) = (3.0 * w0 - 4.0 * w1 + w2) / (2.0 * hh[axis]);
                }
            }
        }
    }
    return tr;
}

BoundaryTrace boundary_trace(const SpaceTimeField& field)
{
    const Grid& grid = field.grid();
    BoundaryTrace tr(grid);
    const int N = grid.N();
    for (int l = 0; l < grid.levels(); ++l) {
        const auto v = field.level(l);
        for (int face = 0; face < 6; ++face) {
            for (int b = 0; b < N; ++b) {
                for (int a = 0; a < N; ++a) {
                    const auto ijk = tr.node_of(face, a, b);
                    tr.at(l, face, a, b) = v[grid.index(ijk[0], ijk[1], ijk[2])];
                }
            }
        }
    }
    return tr;
}

double sample_field(const SpaceTimeField& field, int level, const Vec3& x)
{
    const Grid& grid = field.grid();
    const Vec3 hh = grid.h();
    const int last = grid.n + 1;
    int base[3];
    double frac[3];
    for (int a = 0; a < 3; ++a) {
        const double g = (x[a] - grid.box.lo[a]) / hh[a];
        if (g < -1e-9 || g > last + 1e-9) {
            throw DomainError("sample_field: point outside the grid");
        }
        base[a] = std::clamp(static_cast<int>(std::floor(g)), 0, last - 1);
        frac[a] = g - base[a];
    }
    const auto v = field.level(level);
    const bool cubic = base[0] >= 1 && base[1] >= 1 && base[2] >= 1 && base[0] + 2 <= last && base[1] + 2 <= last &&
                       base[2] + 2 <= last;
    if (!cubic) {
        double acc = 0.0;
        for (int dk = 0; dk < 2; ++dk) {
            for (int dj = 0; dj < 2; ++dj) {
                for (int di = 0; di < 2; ++di) {
                    const double w = (di ? frac[0] : 1 - frac[0]) * (dj ? frac[1] : 1 - frac[1]) *
                                     (dk ? frac[2] : 1 - frac[2]);
                    acc += w * v[grid.index(base[0] + di, base[1] + dj, base[2] + dk)];
                }
            }
        }
        return acc;
    }
    double w[3][4];
    for (int a = 0; a < 3; ++a) {
        const double f = frac[a];
        w[a][0] = -f * (f - 1) * (f - 2) / 6.0;
        w[a][1] = (f + 1) * (f - 1) * (f - 2) / 2.0;
        w[a][2] = -(f + 1) * f * (f - 2) / 2.0;
        w[a][3] = (f + 1) * f * (f - 1) / 6.0;
    }
    double acc = 0.0;
    for (int dk = 0; dk < 4; ++dk) {
        for (int dj = 0; dj < 4; ++dj) {
            for (int di = 0; di < 4; ++di) {
                acc += w[0][di] * w[1][dj] * w[2][dk] *
                       v[grid.index(base[0] - 1 + di, base[1] - 1 + dj, base[2] - 1 + dk)];
            }
        }
    }
    return acc;
}

} // namespace dprobe
