#pragma once

// Dense two-phase tableau simplex with Bland's anti-cycling rule.
//
// Solves   minimize  c'x   subject to  A x = b,  0 <= x <= upper
//
// Entries of `upper` may be +infinity. Problem sizes in this library are a
// few dozen rows/columns, so a dense tableau is the simplest correct choice.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "zsm/geom/tolerance.hpp"

namespace zsm::geom
{

enum class LpStatus
{
    optimal,
    infeasible,
    unbounded,
    iteration_limit
};

template<typename Scalar>
struct LpOptions
{
    Scalar feasibility_tol = static_cast<Scalar>(eps_lp);
    Scalar pivot_tol = static_cast<Scalar>(1e-11);
    Scalar cost_tol = static_cast<Scalar>(1e-10);
    int max_iterations = 0; // 0 selects a size-dependent default
};

template<typename Scalar>
struct LpSolution
{
    LpStatus status = LpStatus::infeasible;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
    Scalar objective = std::numeric_limits<Scalar>::quiet_NaN();
    Scalar infeasibility = std::numeric_limits<Scalar>::quiet_NaN(); // phase-1 optimum
    int iterations = 0;
};

namespace detail
{

template<typename Scalar>
class Tableau
{
    public:
        using Table = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

        Tableau(Eigen::Index rows, Eigen::Index cols)
            : t_(Table::Zero(rows + 1, cols + 1)), basis_(static_cast<std::size_t>(rows), -1)
        {
        }

        Scalar& at(Eigen::Index r, Eigen::Index c) { return t_(r, c); }
        Scalar at(Eigen::Index r, Eigen::Index c) const { return t_(r, c); }
        Scalar& rhs(Eigen::Index r) { return t_(r, t_.cols() - 1); }
        Scalar rhs(Eigen::Index r) const { return t_(r, t_.cols() - 1); }
        Scalar& cost(Eigen::Index c) { return t_(t_.rows() - 1, c); }
        Scalar cost(Eigen::Index c) const { return t_(t_.rows() - 1, c); }
        Eigen::Index rows() const { return t_.rows() - 1; }
        Eigen::Index cols() const { return t_.cols() - 1; }
        int& basic(Eigen::Index r) { return basis_[static_cast<std::size_t>(r)]; }
        int basic(Eigen::Index r) const { return basis_[static_cast<std::size_t>(r)]; }

        void pivot(Eigen::Index pr, Eigen::Index pc)
        {
            t_.row(pr) /= t_(pr, pc);
            for (Eigen::Index r = 0; r < t_.rows(); ++r)
            {
                if (r == pr)
                    continue;
                const Scalar f = t_(r, pc);
                if (f != Scalar(0))
                    t_.row(r) -= f * t_.row(pr);
            }
            basic(pr) = static_cast<int>(pc);
        }

    private:
        Table t_;
        std::vector<int> basis_;
};

// Bland's rule: lowest-index improving column, lowest-index leaving basic variable.
template<typename Scalar>
LpStatus run_simplex(Tableau<Scalar>& tab, Eigen::Index allowed_cols, const LpOptions<Scalar>& opt,
                     int max_iter, int& iterations)
{
    while (true)
    {
        Eigen::Index enter = -1;
        for (Eigen::Index c = 0; c < allowed_cols; ++c)
        {
            if (tab.cost(c) < -opt.cost_tol)
            {
                enter = c;
                break;
            }
        }
        if (enter < 0)
            return LpStatus::optimal;
        if (iterations >= max_iter)
            return LpStatus::iteration_limit;

        Scalar best_ratio = std::numeric_limits<Scalar>::infinity();
        for (Eigen::Index r = 0; r < tab.rows(); ++r)
        {
            const Scalar a = tab.at(r, enter);
            if (a > opt.pivot_tol)
                best_ratio = std::min(best_ratio, tab.rhs(r) / a);
        }
        if (!std::isfinite(best_ratio))
            return LpStatus::unbounded;

        const Scalar tie = opt.pivot_tol * (Scalar(1) + std::abs(best_ratio));
        Eigen::Index leave = -1;
        for (Eigen::Index r = 0; r < tab.rows(); ++r)
        {
            const Scalar a = tab.at(r, enter);
            if (a > opt.pivot_tol && tab.rhs(r) / a <= best_ratio + tie
                && (leave < 0 || tab.basic(r) < tab.basic(leave)))
                leave = r;
        }

        tab.pivot(leave, enter);
        ++iterations;
    }
}

} // namespace detail

template<typename Scalar>
LpSolution<Scalar> solve_lp(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
                            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& c,
                            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& upper,
                            const LpOptions<Scalar>& opt = {})
{
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const Eigen::Index n = A.cols();
    LpSolution<Scalar> out;
    out.x = Vec::Zero(n);

    // normalize equality rows; drop 0 = 0 rows, reject 0 = b rows
    std::vector<Eigen::Index> eq_rows;
    std::vector<Scalar> eq_scale;
    for (Eigen::Index r = 0; r < A.rows(); ++r)
    {
        const Scalar s = A.row(r).cwiseAbs().maxCoeff();
        if (s <= opt.pivot_tol)
        {
            if (std::abs(b(r)) > opt.feasibility_tol)
            {
                out.status = LpStatus::infeasible;
                out.infeasibility = std::abs(b(r));
                return out;
            }
            continue;
        }
        eq_rows.push_back(r);
        eq_scale.push_back(s);
    }

    std::vector<Eigen::Index> bounded;
    for (Eigen::Index j = 0; j < n; ++j)
    {
        if (std::isfinite(upper(j)))
            bounded.push_back(j);
    }

    const auto m = static_cast<Eigen::Index>(eq_rows.size());
    const auto k = static_cast<Eigen::Index>(bounded.size());
    // column layout: [x (n) | bound slacks (k) | artificials (m)]
    const Eigen::Index slack0 = n;
    const Eigen::Index art0 = n + k;
    detail::Tableau<Scalar> tab(m + k, n + k + m);

    for (Eigen::Index i = 0; i < m; ++i)
    {
        const Eigen::Index r = eq_rows[static_cast<std::size_t>(i)];
        const Scalar s = eq_scale[static_cast<std::size_t>(i)];
        Scalar sign = b(r) < 0 ? Scalar(-1) : Scalar(1);
        for (Eigen::Index j = 0; j < n; ++j)
            tab.at(i, j) = sign * A(r, j) / s;
        tab.rhs(i) = sign * b(r) / s;
        tab.at(i, art0 + i) = 1;
        tab.basic(i) = static_cast<int>(art0 + i);
    }
    for (Eigen::Index q = 0; q < k; ++q)
    {
        const Eigen::Index r = m + q;
        tab.at(r, bounded[static_cast<std::size_t>(q)]) = 1;
        tab.at(r, slack0 + q) = 1;
        tab.rhs(r) = upper(bounded[static_cast<std::size_t>(q)]);
        tab.basic(r) = static_cast<int>(slack0 + q);
    }

    const int max_iter = opt.max_iterations > 0
        ? opt.max_iterations
        : static_cast<int>(50 * (tab.rows() + tab.cols()) + 1000);

    // phase 1: minimize the sum of artificials
    for (Eigen::Index j = 0; j <= tab.cols(); ++j)
    {
        Scalar s = 0;
        for (Eigen::Index i = 0; i < m; ++i)
            s += tab.at(i, j);
        if (j < art0 || j == tab.cols())
            tab.cost(j) = -s;
    }
    LpStatus st = detail::run_simplex(tab, art0, opt, max_iter, out.iterations);
    if (st == LpStatus::iteration_limit)
    {
        out.status = st;
        return out;
    }

    Scalar infeas = 0;
    for (Eigen::Index i = 0; i < tab.rows(); ++i)
    {
        if (tab.basic(i) >= art0)
            infeas += std::abs(tab.rhs(i));
    }
    out.infeasibility = infeas;
    if (infeas > opt.feasibility_tol)
    {
        out.status = LpStatus::infeasible;
        return out;
    }

    // drive zero-level artificials out of the basis; rows with no candidate are redundant
    for (Eigen::Index i = 0; i < tab.rows(); ++i)
    {
        if (tab.basic(i) < art0)
            continue;
        Eigen::Index best = -1;
        for (Eigen::Index j = 0; j < art0; ++j)
        {
            if (std::abs(tab.at(i, j)) > opt.pivot_tol
                && (best < 0 || std::abs(tab.at(i, j)) > std::abs(tab.at(i, best))))
                best = j;
        }
        if (best >= 0)
            tab.pivot(i, best);
    }

    // phase 2
    for (Eigen::Index j = 0; j <= tab.cols(); ++j)
    {
        Scalar d = (j < n) ? c(j) : Scalar(0);
        for (Eigen::Index i = 0; i < tab.rows(); ++i)
        {
            const int bj = tab.basic(i);
            if (bj < n)
                d -= c(bj) * tab.at(i, j);
        }
        tab.cost(j) = d;
    }
    st = detail::run_simplex(tab, art0, opt, max_iter, out.iterations);
    out.status = st;

    for (Eigen::Index i = 0; i < tab.rows(); ++i)
    {
        const int bj = tab.basic(i);
        if (bj < n)
            out.x(bj) = std::max(Scalar(0), tab.rhs(i));
    }
    for (Eigen::Index j = 0; j < n; ++j)
    {
        if (std::isfinite(upper(j)))
            out.x(j) = std::min(out.x(j), upper(j));
    }
    out.objective = c.dot(out.x);
    return out;
}

} // namespace zsm::geom
