// Dense revised simplex with an explicit basis inverse.
//
// The engine solves standard-form problems  min c'x  s.t.  A x = b, x >= 0
// with a Phase I on artificial columns where no slack column can start the
// basis. The inequality problems of lp.hpp are mapped onto it either directly
// (slacks added) or through their dual, whichever has the smaller basis.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "l1surface/error.hpp"
#include "l1surface/kernels.hpp"
#include "l1surface/lp.hpp"

namespace l1surface {

namespace {

enum class EngineStatus { optimal, infeasible, unbounded, iteration_limit, numerical_failure };

struct StandardForm {
    Eigen::MatrixXd a;  // column-major: each column contiguous
    Vector b;
    Vector c;
};

struct EngineResult {
    EngineStatus status = EngineStatus::iteration_limit;
    Vector x;
    Vector duals;  // simplex multipliers in the caller's row orientation
    Vector ray;    // unbounded direction in x
    std::size_t iterations = 0;
    std::optional<std::size_t> infeasible_row;
};

constexpr double kPivotTol = 1e-9;
// Pivots below this fraction of the largest |alpha| are treated as zero. Taking
// them drives the basis towards singularity on nearly dependent columns.
constexpr double kRelPivotTol = 1e-9;
constexpr double kNoiseRow = 1e-12;

class RevisedSimplex {
public:
    RevisedSimplex(const StandardForm& sf, const SimplexOptions& opts, std::size_t max_iterations)
        : opts_(opts), max_iterations_(max_iterations) {
        m_ = static_cast<std::size_t>(sf.a.rows());
        n_ = static_cast<std::size_t>(sf.a.cols());
        row_sign_ = Vector::Ones(static_cast<Eigen::Index>(m_));
        b_ = sf.b;
        for (std::size_t i = 0; i < m_; ++i)
            if (b_(idx(i)) < 0.0) {
                row_sign_(idx(i)) = -1.0;
                b_(idx(i)) = -b_(idx(i));
            }

        // Find a unit column per row to start the basis; the rest get artificials.
        std::vector<std::ptrdiff_t> unit(m_, -1);
        for (std::size_t j = 0; j < n_; ++j) {
            std::ptrdiff_t row = -1;
            bool ok = true;
            for (std::size_t i = 0; i < m_ && ok; ++i) {
                const double v = sf.a(idx(i), idx(j)) * row_sign_(idx(i));
                if (v == 0.0) continue;
                if (v == 1.0 && row < 0) row = static_cast<std::ptrdiff_t>(i);
                else ok = false;
            }
            if (ok && row >= 0 && unit[static_cast<std::size_t>(row)] < 0) unit[static_cast<std::size_t>(row)] = static_cast<std::ptrdiff_t>(j);
        }
        std::size_t artificials = 0;
        for (std::ptrdiff_t u : unit)
            if (u < 0) ++artificials;

        ntot_ = n_ + artificials;
        a_.resize(idx(m_), idx(ntot_));
        a_.leftCols(idx(n_)) = row_sign_.asDiagonal() * sf.a;
        basis_.resize(m_);
        std::size_t next = n_;
        for (std::size_t i = 0; i < m_; ++i) {
            if (unit[i] >= 0) {
                basis_[i] = static_cast<std::size_t>(unit[i]);
            } else {
                a_.col(idx(next)).setZero();
                a_(idx(i), idx(next)) = 1.0;
                basis_[i] = next++;
            }
        }
        cost_ = Vector::Zero(idx(ntot_));
        cost_.head(idx(n_)) = sf.c;
        position_.assign(ntot_, -1);
        for (std::size_t i = 0; i < m_; ++i) position_[basis_[i]] = static_cast<std::ptrdiff_t>(i);
        binv_ = Matrix::Identity(idx(m_), idx(m_));
        xb_ = b_;
        pi_.resize(idx(m_));
        reduced_.resize(idx(ntot_));
        alpha_.resize(idx(m_));
    }

    EngineResult run() {
        EngineResult res;
        if (ntot_ > n_) {
            Vector phase1 = Vector::Zero(idx(ntot_));
            phase1.tail(idx(ntot_ - n_)).setOnes();
            allowed_.assign(ntot_, 1);
            const EngineStatus st = iterate(phase1, res);
            if (st == EngineStatus::iteration_limit) return finish(res, st);
            refactor();
            double infeas = 0.0;
            double worst = -1.0;
            for (std::size_t i = 0; i < m_; ++i) {
                if (basis_[i] < n_) continue;
                const double v = xb_(idx(i));
                infeas += std::max(v, 0.0);
                if (v > worst) {
                    worst = v;
                    res.infeasible_row = i;
                }
            }
            if (infeas > opts_.feasibility_tol * std::max(1.0, b_.lpNorm<Eigen::Infinity>())) {
                compute_duals(phase1);
                res.duals = pi_.cwiseProduct(row_sign_);
                res.x = Vector::Zero(idx(n_));
                res.status = EngineStatus::infeasible;
                res.iterations = iterations_;
                return res;
            }
            res.infeasible_row.reset();
            drive_out_artificials();
        }
        allowed_.assign(ntot_, 0);
        std::fill(allowed_.begin(), allowed_.begin() + static_cast<std::ptrdiff_t>(n_), 1);
        const EngineStatus st = iterate(cost_, res);
        return finish(res, st);
    }

private:
    static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

    EngineResult& finish(EngineResult& res, EngineStatus st) {
        if (st == EngineStatus::optimal) {
            refactor();
            compute_duals(cost_);
            if (!xb_.allFinite() || !pi_.allFinite()) st = EngineStatus::numerical_failure;
        }
        res.status = st;
        res.iterations = iterations_;
        res.x = Vector::Zero(idx(n_));
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < n_) res.x(idx(basis_[i])) = std::max(xb_(idx(i)), 0.0);
        res.duals = pi_.cwiseProduct(row_sign_);
        return res;
    }

    void refactor() {
        Eigen::MatrixXd b(idx(m_), idx(m_));
        for (std::size_t i = 0; i < m_; ++i) b.col(idx(i)) = a_.col(idx(basis_[i]));
        binv_ = b.partialPivLu().inverse();
        xb_ = binv_ * b_;
        since_refactor_ = 0;
        clear_rejected();
    }

    void compute_duals(const Vector& cost) {
        pi_.setZero();
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = cost(idx(basis_[i]));
            if (cb != 0.0)
                kernels::axpy(cb, std::span<const double>(binv_.row(idx(i)).data(), m_),
                              std::span<double>(pi_.data(), m_));
        }
    }

    void compute_reduced(const Vector& cost) {
        // reduced_j = cost_j - A_j . pi ; A is column-major so A' is row-major with stride m.
        kernels::gemv({a_.data(), ntot_, m_, m_}, std::span<const double>(pi_.data(), m_),
                      std::span<double>(reduced_.data(), ntot_));
        reduced_ = cost - reduced_;
    }

    void compute_alpha(std::size_t col) {
        kernels::gemv({binv_.data(), m_, m_, m_}, std::span<const double>(a_.col(idx(col)).data(), m_),
                      std::span<double>(alpha_.data(), m_));
    }

    void pivot(std::size_t r, std::size_t entering) {
        const double theta = std::max(xb_(idx(r)), 0.0) / alpha_(idx(r));
        xb_ -= theta * alpha_;
        xb_(idx(r)) = theta;

        const double inv = 1.0 / alpha_(idx(r));
        binv_.row(idx(r)) *= inv;
        std::span<const double> prow(binv_.row(idx(r)).data(), m_);
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            const double f = alpha_(idx(i));
            if (f != 0.0) kernels::axpy(-f, prow, std::span<double>(binv_.row(idx(i)).data(), m_));
        }
        position_[basis_[r]] = -1;
        basis_[r] = entering;
        position_[entering] = static_cast<std::ptrdiff_t>(r);
        ++iterations_;
        ++since_refactor_;
    }

    EngineStatus iterate(const Vector& cost, EngineResult& res) {
        std::size_t degenerate = 0;
        bool bland = false;
        bool lenient = false;  // accept tiny pivots after every candidate was rejected
        rejected_.assign(ntot_, 0);
        num_rejected_ = 0;
        bool fresh = false;  // reduced costs computed right after a refactorization
        while (true) {
            if (iterations_ >= max_iterations_) return EngineStatus::iteration_limit;
            if (since_refactor_ >= opts_.refactor_interval) refactor();
            fresh = since_refactor_ == 0;
            compute_duals(cost);
            compute_reduced(cost);

            std::ptrdiff_t entering = -1;
            double best = -opts_.optimality_tol;
            for (std::size_t j = 0; j < ntot_; ++j) {
                if (!allowed_[j] || position_[j] >= 0 || rejected_[j]) continue;
                const double d = reduced_(idx(j));
                if (bland) {
                    if (d < -opts_.optimality_tol) {
                        entering = static_cast<std::ptrdiff_t>(j);
                        break;
                    }
                } else if (d < best) {
                    best = d;
                    entering = static_cast<std::ptrdiff_t>(j);
                }
            }
            if (entering < 0) {
                if (!fresh) {
                    refactor();  // confirm optimality with an accurate inverse
                    continue;
                }
                if (num_rejected_ > 0) {
                    lenient = true;
                    clear_rejected();
                    continue;
                }
                return EngineStatus::optimal;
            }
            const auto e = static_cast<std::size_t>(entering);
            compute_alpha(e);

            const double ptol = lenient ? kPivotTol : std::max(kPivotTol, kRelPivotTol * alpha_.cwiseAbs().maxCoeff());
            std::ptrdiff_t leave = ratio_test(bland, ptol);
            if (leave < 0 && ptol > kPivotTol && (alpha_.array() > kPivotTol).any()) {
                // Only tiny pivots: price another column before accepting one.
                rejected_[e] = 1;
                ++num_rejected_;
                continue;
            }
            if (leave < 0) {
                if (!fresh) {
                    refactor();
                    continue;
                }
                res.ray = Vector::Zero(idx(n_));
                if (e < n_) res.ray(idx(e)) = 1.0;
                for (std::size_t i = 0; i < m_; ++i)
                    if (basis_[i] < n_) res.ray(idx(basis_[i])) = -alpha_(idx(i));
                return EngineStatus::unbounded;
            }
            const auto r = static_cast<std::size_t>(leave);
            const double step = std::max(xb_(idx(r)), 0.0) / alpha_(idx(r));
            pivot(r, e);
            lenient = false;
            clear_rejected();
            if (step * std::abs(reduced_(idx(e))) <= 1e-14 * (1.0 + std::abs(step))) {
                if (++degenerate > opts_.bland_after) bland = true;
            } else {
                degenerate = 0;
                bland = false;
            }
        }
    }

    std::ptrdiff_t ratio_test(bool bland, double ptol) const {
        std::ptrdiff_t leave = -1;
        if (bland) {
            double theta = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m_; ++i) {
                const double a = alpha_(idx(i));
                if (a <= ptol) continue;
                const double t = std::max(xb_(idx(i)), 0.0) / a;
                if (t < theta || (t == theta && basis_[i] < basis_[static_cast<std::size_t>(leave)])) {
                    theta = t;
                    leave = static_cast<std::ptrdiff_t>(i);
                }
            }
            return leave;
        }
        // Harris two-pass ratio test: bound the step with relaxed ratios,
        // then take the largest pivot among rows within the bound.
        double bound = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m_; ++i) {
            const double a = alpha_(idx(i));
            if (a > ptol) bound = std::min(bound, (std::max(xb_(idx(i)), 0.0) + opts_.feasibility_tol) / a);
        }
        double biggest = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            const double a = alpha_(idx(i));
            if (a > ptol && std::max(xb_(idx(i)), 0.0) / a <= bound && a > biggest) {
                biggest = a;
                leave = static_cast<std::ptrdiff_t>(i);
            }
        }
        return leave;
    }

    void clear_rejected() {
        if (num_rejected_ == 0) return;
        std::fill(rejected_.begin(), rejected_.end(), 0);
        num_rejected_ = 0;
    }

    void drive_out_artificials() {
        Vector row(idx(ntot_));
        for (std::size_t r = 0; r < m_; ++r) {
            if (basis_[r] < n_) continue;
            kernels::gemv({a_.data(), ntot_, m_, m_}, std::span<const double>(binv_.row(idx(r)).data(), m_),
                          std::span<double>(row.data(), ntot_));
            std::ptrdiff_t best = -1;
            double mag = 1e-7;
            for (std::size_t j = 0; j < n_; ++j) {
                if (position_[j] >= 0) continue;
                if (std::abs(row(idx(j))) > mag) {
                    mag = std::abs(row(idx(j)));
                    best = static_cast<std::ptrdiff_t>(j);
                }
            }
            if (best < 0) continue;  // redundant row: artificial stays basic at zero
            compute_alpha(static_cast<std::size_t>(best));
            const double theta = xb_(idx(r)) / alpha_(idx(r));
            xb_ -= theta * alpha_;
            xb_(idx(r)) = theta;
            const double inv = 1.0 / alpha_(idx(r));
            binv_.row(idx(r)) *= inv;
            for (std::size_t i = 0; i < m_; ++i) {
                if (i == r || alpha_(idx(i)) == 0.0) continue;
                binv_.row(idx(i)) -= alpha_(idx(i)) * binv_.row(idx(r));
            }
            position_[basis_[r]] = -1;
            basis_[r] = static_cast<std::size_t>(best);
            position_[basis_[r]] = static_cast<std::ptrdiff_t>(r);
        }
        refactor();
    }

    SimplexOptions opts_;
    std::size_t max_iterations_;
    std::size_t m_ = 0;
    std::size_t n_ = 0;
    std::size_t ntot_ = 0;
    Eigen::MatrixXd a_;
    Vector b_;
    Vector row_sign_;
    Vector cost_;
    std::vector<std::size_t> basis_;
    std::vector<std::ptrdiff_t> position_;
    std::vector<char> allowed_;
    std::vector<char> rejected_;
    std::size_t num_rejected_ = 0;
    Matrix binv_;
    Vector xb_;
    Vector pi_;
    Vector reduced_;
    Vector alpha_;
    std::size_t iterations_ = 0;
    std::size_t since_refactor_ = 0;
};

LpStatus to_status(EngineStatus s) {
    switch (s) {
        case EngineStatus::optimal: return LpStatus::optimal;
        case EngineStatus::infeasible: return LpStatus::infeasible;
        case EngineStatus::unbounded: return LpStatus::unbounded;
        case EngineStatus::iteration_limit: return LpStatus::iteration_limit;
        case EngineStatus::numerical_failure: return LpStatus::numerical_failure;
    }
    return LpStatus::iteration_limit;
}

/// Rows of G scaled to unit max-norm; the feasible set is unchanged. Rows whose
/// entries are all at roundoff level next to the largest entry of G are
/// cancellation noise (a difference of nearly equal columns); scaling them up
/// would turn the noise into constraints, so they are zeroed instead.
Vector row_scales(const Matrix& g) {
    const double gmax = g.size() > 0 ? g.lpNorm<Eigen::Infinity>() : 0.0;
    Vector s(g.rows());
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        const double n = g.row(i).lpNorm<Eigen::Infinity>();
        s(i) = n > kNoiseRow * gmax ? 1.0 / n : (n > 0.0 ? 0.0 : 1.0);
    }
    return s;
}

LpSolution solve_primal(const LpProblem& lp, const Matrix& gs, const Vector& hs, const SimplexOptions& opts,
                        std::size_t max_iter) {
    const auto rows = gs.rows();
    const auto vars = gs.cols();
    StandardForm sf;
    sf.a.resize(rows, vars + rows);
    sf.a.leftCols(vars) = gs;
    sf.a.rightCols(rows).setIdentity();
    sf.b = hs;
    sf.c = Vector::Zero(vars + rows);
    sf.c.head(vars) = lp.cost;

    RevisedSimplex engine(sf, opts, max_iter);
    EngineResult er = engine.run();
    LpSolution sol;
    sol.status = to_status(er.status);
    sol.iterations = er.iterations;
    sol.values = er.status == EngineStatus::numerical_failure ? Vector::Zero(vars) : Vector(er.x.head(vars));
    if (er.status == EngineStatus::infeasible) {
        sol.certificate_row = er.infeasible_row;
        // phase I multipliers pi satisfy pi'[G I] <= 0, pi'h > 0; y = -pi
        sol.farkas = (-er.duals).cwiseMax(0.0);
    }
    return sol;
}

LpSolution solve_dual(const LpProblem& lp, const Matrix& gs, const Vector& hs, const SimplexOptions& opts,
                      std::size_t max_iter) {
    // min hs'l  s.t.  -Gs' l + t = c,  l, t >= 0. Its multipliers give z = -pi.
    const auto rows = gs.rows();
    const auto vars = gs.cols();
    StandardForm sf;
    sf.a.resize(vars, rows + vars);
    sf.a.leftCols(rows) = -gs.transpose();
    sf.a.rightCols(vars).setIdentity();
    sf.b = lp.cost;
    sf.c = Vector::Zero(rows + vars);
    sf.c.head(rows) = hs;

    RevisedSimplex engine(sf, opts, max_iter);
    EngineResult er = engine.run();
    LpSolution sol;
    sol.iterations = er.iterations;
    switch (er.status) {
        case EngineStatus::optimal:
            sol.status = LpStatus::optimal;
            sol.values = (-er.duals).cwiseMax(0.0);
            break;
        case EngineStatus::unbounded: {
            // dual ray proves the primal infeasible
            sol.status = LpStatus::infeasible;
            sol.values = Vector::Zero(vars);
            const Vector y = er.ray.head(rows).cwiseMax(0.0);
            sol.farkas = y;
            Eigen::Index best = 0;
            y.maxCoeff(&best);
            sol.certificate_row = static_cast<std::size_t>(best);
            break;
        }
        case EngineStatus::infeasible:
            // dual infeasible: primal is unbounded or infeasible; the caller decides
            sol.status = LpStatus::unbounded;
            sol.values = Vector::Zero(vars);
            break;
        case EngineStatus::iteration_limit:
        case EngineStatus::numerical_failure:
            sol.status = to_status(er.status);
            sol.values = Vector::Zero(vars);
            break;
    }
    return sol;
}

}  // namespace

LpSolution SimplexSolver::solve(const LpProblem& lp) const { return l1surface::solve(lp, opts_); }

LpSolution solve(const LpProblem& lp, const SimplexOptions& opts) {
    lp.validate();
    const std::size_t rows = lp.num_rows();
    const std::size_t vars = lp.num_vars();
    const std::size_t max_iter = opts.max_iterations ? opts.max_iterations : 50 * (rows + vars);

    const Vector scale = row_scales(lp.g);
    const Matrix gs = scale.asDiagonal() * lp.g;
    Vector hs = scale.cwiseProduct(lp.h);
    for (Eigen::Index i = 0; i < hs.size(); ++i)
        if (scale(i) == 0.0) hs(i) = lp.h(i);  // zeroed noise row: 0 <= h

    Formulation form = opts.formulation;
    if (form == Formulation::automatic) form = rows > vars ? Formulation::dual : Formulation::primal;

    LpSolution sol;
    if (vars == 0) {
        sol.values = Vector::Zero(0);
        sol.status = (rows == 0 || lp.h.minCoeff() >= -opts.feasibility_tol) ? LpStatus::optimal : LpStatus::infeasible;
    } else if (rows == 0) {
        sol.values = Vector::Zero(static_cast<Eigen::Index>(vars));
        sol.status = lp.cost.minCoeff() < 0.0 ? LpStatus::unbounded : LpStatus::optimal;
    } else if (form == Formulation::dual) {
        sol = solve_dual(lp, gs, hs, opts, max_iter);
        if (sol.status == LpStatus::unbounded) sol = solve_primal(lp, gs, hs, opts, max_iter);
    } else {
        sol = solve_primal(lp, gs, hs, opts, max_iter);
    }
    if (sol.farkas.size() > 0) sol.farkas = (scale.array() == 0.0).select(1.0, scale).cwiseProduct(sol.farkas);
    sol.objective = sol.values.size() > 0 ? lp.cost.dot(sol.values) : 0.0;
    sol.max_violation = max_violation(lp, sol.values);
    return sol;
}

}  // namespace l1surface
