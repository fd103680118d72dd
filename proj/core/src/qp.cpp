#include "paramsynth/qp.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace paramsynth {

std::string to_string(SolveStatus status) {
    switch (status) {
    case SolveStatus::optimal:
        return "optimal";
    case SolveStatus::max_iter:
        return "max-iter";
    case SolveStatus::numerical_failure:
        return "numerical-failure";
    case SolveStatus::infeasible:
        return "infeasible";
    }
    return "unknown";
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = std::int64_t;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Mixer {
    std::uint64_t h = 1469598103934665603ull;
    void add(std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
};

std::uint64_t structure_of(const QuadProgram& p) {
    Mixer m;
    m.add(p.num_variables());
    m.add(p.constraints.size());
    for (std::size_t j = 0; j < p.num_variables(); ++j)
        m.add((std::isfinite(p.lower[j]) ? 1u : 0u) | (std::isfinite(p.upper[j]) ? 2u : 0u));
    for (const auto& c : p.constraints) {
        m.add(c.sense == Sense::equal ? 7 : 3);
        m.add(c.quad.size());
        for (const auto& t : c.quad)
            m.add((std::uint64_t(t.row) << 32) | t.col);
        m.add(c.linear.size());
        for (const auto& t : c.linear)
            m.add(t.var);
    }
    return m.h;
}

/// A `<=` row in local coordinates over its support.
struct Row {
    std::uint32_t constraint = 0;
    double scale = 1;
    std::vector<std::uint32_t> sup;
    std::vector<std::uint32_t> quad_a, quad_b; ///< positions of term.row / term.col in sup
    std::vector<std::uint32_t> lin_pos;
    std::vector<Index> hess_slot;  ///< -1 for upper-triangle twins
    std::vector<Index> outer_slot; ///< packed (a >= b) pairs over sup
    std::size_t grad_offset = 0;
    /// Variable that only this row uses, linearly with a negative
    /// coefficient and without an upper bound; raising it restores feasibility.
    std::optional<std::uint32_t> relief;
    double relief_coef = 0;
};

struct Bound {
    std::uint32_t var;
    bool upper;
};

struct EqRow {
    std::uint32_t constraint = 0;
    double scale = 1;
    std::vector<Index> slot;
};

double row_scale(const QuadConstraint& c) {
    double big = 1;
    for (const auto& t : c.quad)
        big = std::max(big, std::abs(t.value));
    for (const auto& t : c.linear)
        big = std::max(big, std::abs(t.coef));
    return 1 / big;
}

} // namespace

struct InteriorPointSolver::Workspace {
    std::uint64_t fingerprint = 0;
    bool ready = false;
    std::size_t n = 0;
    std::vector<Row> rows;
    std::vector<Bound> bounds;
    std::vector<EqRow> eqs;
    std::vector<Index> diag_slot;
    std::size_t grad_size = 0;
    SparseMatrix kkt;
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower> ldlt;
    int analyses = 0;

    Index slot_of(Index r, Index c) const {
        if (r < c)
            std::swap(r, c);
        auto begin = kkt.innerIndexPtr() + kkt.outerIndexPtr()[c];
        auto end = kkt.innerIndexPtr() + kkt.outerIndexPtr()[c + 1];
        auto it = std::lower_bound(begin, end, static_cast<int>(r));
        return static_cast<Index>(it - kkt.innerIndexPtr());
    }

    void build(const QuadProgram& p) {
        n = p.num_variables();
        rows.clear();
        bounds.clear();
        eqs.clear();
        std::vector<Eigen::Triplet<double>> pattern;
        std::vector<std::uint32_t> pos(n, 0);

        for (std::uint32_t i = 0; i < p.constraints.size(); ++i) {
            const auto& c = p.constraints[i];
            if (c.sense == Sense::equal) {
                if (!c.is_affine())
                    throw std::invalid_argument("equality constraints must be affine");
                EqRow e;
                e.constraint = i;
                eqs.push_back(e);
                continue;
            }
            Row r;
            r.constraint = i;
            r.sup = c.support();
            for (std::uint32_t k = 0; k < r.sup.size(); ++k)
                pos[r.sup[k]] = k;
            for (const auto& t : c.quad) {
                r.quad_a.push_back(pos[t.row]);
                r.quad_b.push_back(pos[t.col]);
            }
            for (const auto& t : c.linear)
                r.lin_pos.push_back(pos[t.var]);
            for (std::size_t a = 0; a < r.sup.size(); ++a)
                for (std::size_t b = 0; b <= a; ++b)
                    pattern.emplace_back(std::max(r.sup[a], r.sup[b]), std::min(r.sup[a], r.sup[b]), 0.0);
            r.grad_offset = grad_size;
            grad_size += r.sup.size();
            rows.push_back(std::move(r));
        }
        std::vector<int> uses(n, 0);
        std::vector<bool> curved(n, false);
        for (const auto& c : p.constraints) {
            for (auto j : c.support())
                ++uses[j];
            for (const auto& t : c.quad)
                curved[t.row] = curved[t.col] = true;
        }
        for (auto& r : rows)
            for (const auto& t : p.constraints[r.constraint].linear)
                if (t.coef < 0 && uses[t.var] == 1 && !curved[t.var] && !std::isfinite(p.upper[t.var])) {
                    r.relief = t.var;
                    r.relief_coef = t.coef;
                    break;
                }
        for (std::uint32_t j = 0; j < n; ++j) {
            if (std::isfinite(p.lower[j]))
                bounds.push_back({j, false});
            if (std::isfinite(p.upper[j]))
                bounds.push_back({j, true});
        }
        const auto dim = n + eqs.size();
        for (std::size_t j = 0; j < dim; ++j)
            pattern.emplace_back(j, j, 0.0);
        for (std::size_t e = 0; e < eqs.size(); ++e)
            for (const auto& t : p.constraints[eqs[e].constraint].linear)
                pattern.emplace_back(n + e, t.var, 0.0);

        kkt.resize(static_cast<Index>(dim), static_cast<Index>(dim));
        kkt.setFromTriplets(pattern.begin(), pattern.end());
        kkt.makeCompressed();

        diag_slot.resize(dim);
        for (std::size_t j = 0; j < dim; ++j)
            diag_slot[j] = slot_of(j, j);
        for (auto& r : rows) {
            const auto& c = p.constraints[r.constraint];
            r.hess_slot.clear();
            for (const auto& t : c.quad)
                r.hess_slot.push_back(t.row >= t.col ? slot_of(t.row, t.col) : -1);
            r.outer_slot.clear();
            for (std::size_t a = 0; a < r.sup.size(); ++a)
                for (std::size_t b = 0; b <= a; ++b)
                    r.outer_slot.push_back(slot_of(r.sup[a], r.sup[b]));
        }
        for (std::size_t e = 0; e < eqs.size(); ++e)
            for (const auto& t : p.constraints[eqs[e].constraint].linear)
                eqs[e].slot.push_back(slot_of(n + e, t.var));

        ldlt.analyzePattern(kkt);
        ++analyses;
        ready = true;
    }
};

InteriorPointSolver::InteriorPointSolver(SolverOptions options)
    : options_(options), work_(std::make_unique<Workspace>()) {}
InteriorPointSolver::~InteriorPointSolver() = default;
InteriorPointSolver::InteriorPointSolver(InteriorPointSolver&&) noexcept = default;
InteriorPointSolver& InteriorPointSolver::operator=(InteriorPointSolver&&) noexcept = default;

int InteriorPointSolver::analyses() const { return work_->analyses; }

namespace {

struct Attempt {
    SolveReport report;
    bool failed = false;
};

} // namespace

SolveReport InteriorPointSolver::solve(const QuadProgram& p, const SolveReport* warm) {
    auto& w = *work_;
    const auto fp = structure_of(p);
    if (!w.ready || fp != w.fingerprint) {
        w.build(p);
        w.fingerprint = fp;
    }
    for (auto& r : w.rows)
        r.scale = row_scale(p.constraints[r.constraint]);
    for (auto& e : w.eqs)
        e.scale = row_scale(p.constraints[e.constraint]);

    const std::size_t n = w.n;
    const std::size_t nr = w.rows.size();
    const std::size_t m = nr + w.bounds.size();
    const std::size_t ne = w.eqs.size();

    Eigen::VectorXd cost = Eigen::VectorXd::Zero(static_cast<Index>(n));
    for (const auto& t : p.objective)
        cost[t.var] += t.coef;
    const double cost_norm = cost.size() ? cost.lpNorm<Eigen::Infinity>() : 0.0;

    auto eval_rows = [&](const std::vector<double>& x, std::vector<double>& f, std::vector<double>& grad) {
        for (std::size_t i = 0; i < nr; ++i) {
            const auto& r = w.rows[i];
            const auto& c = p.constraints[r.constraint];
            double* g = grad.data() + r.grad_offset;
            std::fill(g, g + r.sup.size(), 0.0);
            for (std::size_t k = 0; k < c.quad.size(); ++k) {
                const auto& t = c.quad[k];
                g[r.quad_a[k]] += t.value * x[t.col];
                g[r.quad_b[k]] += t.value * x[t.row];
            }
            for (std::size_t k = 0; k < c.linear.size(); ++k)
                g[r.lin_pos[k]] += c.linear[k].coef;
            for (std::size_t k = 0; k < r.sup.size(); ++k)
                g[k] *= r.scale;
            f[i] = r.scale * c.value(x);
        }
        for (std::size_t b = 0; b < w.bounds.size(); ++b) {
            const auto& bd = w.bounds[b];
            f[nr + b] = bd.upper ? x[bd.var] - p.upper[bd.var] : p.lower[bd.var] - x[bd.var];
        }
    };

    // J_i' v for the i-th inequality
    auto row_dot = [&](std::size_t i, const std::vector<double>& grad, const double* v) {
        if (i >= nr) {
            const auto& bd = w.bounds[i - nr];
            return bd.upper ? v[bd.var] : -v[bd.var];
        }
        const auto& r = w.rows[i];
        double s = 0;
        for (std::size_t k = 0; k < r.sup.size(); ++k)
            s += grad[r.grad_offset + k] * v[r.sup[k]];
        return s;
    };
    // out += coef * J_i
    auto row_axpy = [&](std::size_t i, const std::vector<double>& grad, double coef, double* out) {
        if (i >= nr) {
            const auto& bd = w.bounds[i - nr];
            out[bd.var] += bd.upper ? coef : -coef;
            return;
        }
        const auto& r = w.rows[i];
        for (std::size_t k = 0; k < r.sup.size(); ++k)
            out[r.sup[k]] += coef * grad[r.grad_offset + k];
    };

    auto run = [&](int attempt) -> Attempt {
        Attempt out;
        auto& rep = out.report;
        const double reg = 1e-10 * std::pow(1e3, attempt);
        std::vector<double> x(n, 0.0), s(m), z(m), y(ne, 0.0);

        const bool have_x = warm && warm->x.size() == n && attempt == 0;
        const bool have_dual = have_x && warm->slack.size() == m && warm->multiplier.size() == m;
        for (std::size_t j = 0; j < n; ++j) {
            double lo = p.lower[j], hi = p.upper[j];
            double v = have_x ? warm->x[j] : 0.0;
            if (!have_x) {
                if (std::isfinite(lo) && std::isfinite(hi))
                    v = 0.5 * (lo + hi);
                else if (std::isfinite(lo))
                    v = lo + 1;
                else if (std::isfinite(hi))
                    v = hi - 1;
            }
            if (attempt > 0) {
                double width = std::isfinite(hi - lo) ? hi - lo : 1.0;
                v += 1e-3 * attempt * width * ((j % 2) ? 1 : -1);
            }
            x[j] = v;
        }
        std::vector<double> f(m), grad(w.grad_size);
        eval_rows(x, f, grad);
        // push violated rows back inside through their relief variables
        const double margin = have_dual ? options_.warm_floor : 1.0;
        bool moved = false;
        for (std::size_t i = 0; i < nr; ++i) {
            const auto& r = w.rows[i];
            if (r.relief && f[i] > -margin) {
                x[*r.relief] += (f[i] + margin) / (-r.relief_coef * r.scale);
                moved = true;
            }
        }
        if (moved)
            eval_rows(x, f, grad);
        for (std::size_t i = 0; i < m; ++i) {
            if (have_dual) {
                s[i] = std::max({warm->slack[i], -f[i], options_.warm_floor});
                z[i] = std::max(warm->multiplier[i], options_.warm_floor);
            } else {
                s[i] = std::max(-f[i], 1.0);
                z[i] = 1.0;
            }
        }
        if (have_dual && warm->equality_multiplier.size() == ne)
            y = warm->equality_multiplier;

        const auto dim = static_cast<Index>(n + ne);
        Eigen::VectorXd rhs(dim), sol(dim);
        std::vector<double> rp(m), rd(n), re(ne), rc(m), t(m), wgt(m);
        std::vector<double> dx(n), dy(ne), ds(m), dz(m), ds_aff(m), dz_aff(m), jdx(m);
        double* values = w.kkt.valuePtr();

        std::vector<double> rq(m, 0.0); // curvature of the predictor step
        auto solve_direction = [&]() -> bool {
            for (std::size_t i = 0; i < m; ++i)
                t[i] = (z[i] * (rp[i] + rq[i]) - rc[i]) / s[i];
            for (std::size_t j = 0; j < n; ++j)
                rhs[static_cast<Index>(j)] = -rd[j];
            for (std::size_t i = 0; i < m; ++i)
                row_axpy(i, grad, -t[i], rhs.data());
            for (std::size_t e = 0; e < ne; ++e)
                rhs[static_cast<Index>(n + e)] = -re[e];
            sol = w.ldlt.solve(rhs);
            if (w.ldlt.info() != Eigen::Success || !sol.allFinite())
                return false;
            for (std::size_t j = 0; j < n; ++j)
                dx[j] = sol[static_cast<Index>(j)];
            for (std::size_t e = 0; e < ne; ++e)
                dy[e] = sol[static_cast<Index>(n + e)];
            for (std::size_t i = 0; i < m; ++i) {
                jdx[i] = row_dot(i, grad, dx.data());
                dz[i] = t[i] + wgt[i] * jdx[i];
                ds[i] = -rp[i] - rq[i] - jdx[i];
            }
            return true;
        };

        auto max_step = [&](const std::vector<double>& v, const std::vector<double>& dv) {
            double a = 1;
            for (std::size_t i = 0; i < m; ++i)
                if (dv[i] < 0)
                    a = std::min(a, -v[i] / dv[i]);
            return a;
        };

        for (rep.iterations = 0;; ++rep.iterations) {
            // residuals at the current point
            std::fill(rd.begin(), rd.end(), 0.0);
            for (std::size_t j = 0; j < n; ++j)
                rd[j] = cost[static_cast<Index>(j)];
            for (std::size_t i = 0; i < m; ++i) {
                rp[i] = f[i] + s[i];
                row_axpy(i, grad, z[i], rd.data());
            }
            for (std::size_t e = 0; e < ne; ++e) {
                const auto& c = p.constraints[w.eqs[e].constraint];
                re[e] = w.eqs[e].scale * c.value(x);
                for (const auto& term : c.linear)
                    rd[term.var] += y[e] * w.eqs[e].scale * term.coef;
            }
            double pres = 0, dres = 0, gap = 0;
            for (double v : rp)
                pres = std::max(pres, std::abs(v));
            for (double v : re)
                pres = std::max(pres, std::abs(v));
            for (double v : rd)
                dres = std::max(dres, std::abs(v));
            dres /= 1 + cost_norm;
            for (std::size_t i = 0; i < m; ++i)
                gap += s[i] * z[i];
            double obj = 0;
            for (std::size_t j = 0; j < n; ++j)
                obj += cost[static_cast<Index>(j)] * x[j];
            rep.primal_residual = pres;
            rep.dual_residual = dres;
            rep.gap = gap;

            if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(gap)) {
                out.failed = true;
                break;
            }
            if (pres <= options_.feasibility_tol && dres <= options_.feasibility_tol &&
                gap <= options_.gap_tol * std::max(1.0, std::abs(obj))) {
                rep.status = SolveStatus::optimal;
                break;
            }
            if (rep.iterations >= options_.max_iterations) {
                rep.status = SolveStatus::max_iter;
                break;
            }
            double zmax = m ? *std::max_element(z.begin(), z.end()) : 0.0;
            if (zmax > 1e14 && pres > options_.feasibility_tol) {
                rep.status = SolveStatus::infeasible;
                break;
            }

            // assemble the reduced KKT matrix
            std::fill(values, values + w.kkt.nonZeros(), 0.0);
            for (std::size_t j = 0; j < n; ++j)
                values[w.diag_slot[j]] = reg;
            for (std::size_t e = 0; e < ne; ++e) {
                values[w.diag_slot[n + e]] = -reg;
                const auto& c = p.constraints[w.eqs[e].constraint];
                for (std::size_t k = 0; k < c.linear.size(); ++k)
                    values[w.eqs[e].slot[k]] = w.eqs[e].scale * c.linear[k].coef;
            }
            for (std::size_t i = 0; i < m; ++i)
                wgt[i] = z[i] / s[i];
            for (std::size_t i = 0; i < nr; ++i) {
                const auto& r = w.rows[i];
                const auto& c = p.constraints[r.constraint];
                for (std::size_t k = 0; k < c.quad.size(); ++k)
                    if (r.hess_slot[k] >= 0)
                        values[r.hess_slot[k]] += 2 * z[i] * r.scale * c.quad[k].value;
                const double* g = grad.data() + r.grad_offset;
                std::size_t idx = 0;
                for (std::size_t a = 0; a < r.sup.size(); ++a)
                    for (std::size_t b = 0; b <= a; ++b)
                        values[r.outer_slot[idx++]] += wgt[i] * g[a] * g[b];
            }
            for (std::size_t b = 0; b < w.bounds.size(); ++b)
                values[w.diag_slot[w.bounds[b].var]] += wgt[nr + b];

            // raise the regularization in place until the factorization goes through
            bool factored = false;
            double current = reg;
            for (int bump = 0; bump < 6; ++bump) {
                w.ldlt.factorize(w.kkt);
                if (w.ldlt.info() == Eigen::Success) {
                    factored = true;
                    break;
                }
                const double extra = 99 * current;
                for (std::size_t j = 0; j < n; ++j)
                    values[w.diag_slot[j]] += extra;
                for (std::size_t e = 0; e < ne; ++e)
                    values[w.diag_slot[n + e]] -= extra;
                current *= 100;
            }
            if (!factored) {
                out.failed = true;
                break;
            }

            const double mu = m ? gap / static_cast<double>(m) : 0.0;
            // predictor
            std::fill(rq.begin(), rq.end(), 0.0);
            for (std::size_t i = 0; i < m; ++i)
                rc[i] = s[i] * z[i];
            if (!solve_direction()) {
                out.failed = true;
                break;
            }
            double a_aff = std::min(max_step(s, ds), max_step(z, dz));
            double mu_aff = 0;
            for (std::size_t i = 0; i < m; ++i)
                mu_aff += (s[i] + a_aff * ds[i]) * (z[i] + a_aff * dz[i]);
            mu_aff = m ? mu_aff / static_cast<double>(m) : 0.0;
            double sigma = mu > 0 ? std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3) : 0.0;
            // keep centring while the residuals lag behind the gap
            if (std::max(pres, dres) > options_.feasibility_tol && std::max(pres, dres) > mu)
                sigma = std::max(sigma, 0.5);
            ds_aff = ds;
            dz_aff = dz;
            // second-order correction from the predictor curvature
            for (std::size_t i = 0; i < nr; ++i) {
                const auto& c = p.constraints[w.rows[i].constraint];
                double q = 0;
                for (const auto& term : c.quad)
                    q += term.value * dx[term.row] * dx[term.col];
                rq[i] = w.rows[i].scale * q;
            }
            // corrector
            for (std::size_t i = 0; i < m; ++i)
                rc[i] = s[i] * z[i] + ds_aff[i] * dz_aff[i] - sigma * mu;
            if (!solve_direction()) {
                out.failed = true;
                break;
            }
            double alpha = std::min(1.0, options_.step_fraction * std::min(max_step(s, ds), max_step(z, dz)));
            for (std::size_t j = 0; j < n; ++j)
                x[j] += alpha * dx[j];
            for (std::size_t e = 0; e < ne; ++e)
                y[e] += alpha * dy[e];
            for (std::size_t i = 0; i < m; ++i) {
                s[i] += alpha * ds[i];
                z[i] += alpha * dz[i];
            }
            eval_rows(x, f, grad);
            // snap slacks of rows that are already satisfied
            double mu_new = 0;
            for (std::size_t i = 0; i < m; ++i)
                mu_new += s[i] * z[i];
            mu_new = m ? mu_new / static_cast<double>(m) : 0.0;
            for (std::size_t i = 0; i < m; ++i)
                if (f[i] < 0 && z[i] * std::abs(f[i] + s[i]) <= mu_new)
                    s[i] = -f[i];
        }

        for (std::size_t j = 0; j < n; ++j)
            x[j] = std::clamp(x[j], p.lower[j], p.upper[j]);
        rep.objective = p.objective_value(x);
        rep.x = std::move(x);
        rep.slack = std::move(s);
        rep.multiplier = std::move(z);
        rep.equality_multiplier = std::move(y);
        return out;
    };

    Attempt result;
    for (int attempt = 0; attempt <= options_.restarts; ++attempt) {
        result = run(attempt);
        if (!result.failed)
            return result.report;
    }
    result.report.status = SolveStatus::numerical_failure;
    return result.report;
}

} // namespace paramsynth
