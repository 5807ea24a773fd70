#pragma once

// Constrained zonotopes  Z = { c + G xi : ||xi||_inf <= 1, A xi = b }.
//
// All set queries reduce to small LPs over the shifted variable u = xi + 1 in [0, 2]
// and are answered by the dense simplex in simplex.hpp.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "zsm/errors.hpp"
#include "zsm/geom/polygon.hpp"
#include "zsm/geom/simplex.hpp"
#include "zsm/geom/tolerance.hpp"

namespace zsm::geom
{

template<typename Scalar>
class ConstrainedZonotope
{
    public:
        using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
        using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

        ConstrainedZonotope(Vector center, Matrix generators)
            : ConstrainedZonotope(std::move(center), generators, Matrix(0, generators.cols()), Vector(0))
        {
        }

        ConstrainedZonotope(Vector center, Matrix generators, Matrix A, Vector b)
            : c_(std::move(center)), G_(std::move(generators)), A_(std::move(A)), b_(std::move(b))
        {
            if (G_.rows() != c_.size())
                throw std::invalid_argument("ConstrainedZonotope: generator rows differ from center dimension.");
            if (A_.cols() != G_.cols())
                throw std::invalid_argument("ConstrainedZonotope: constraint columns differ from generator count.");
            if (A_.rows() != b_.size())
                throw std::invalid_argument("ConstrainedZonotope: constraint rows differ from b size.");
            if (!c_.allFinite() || !G_.allFinite() || !A_.allFinite() || !b_.allFinite())
                throw std::invalid_argument("ConstrainedZonotope: non-finite entry.");
            if (A_.rows() > G_.cols())
                remove_redundant_constraints();
        }

        // Axis-aligned box with the given half widths.
        static ConstrainedZonotope box(const Vector& center, const Vector& half_widths)
        {
            return ConstrainedZonotope(center, Matrix(half_widths.asDiagonal()));
        }

        Eigen::Index dimension() const noexcept { return c_.size(); }
        Eigen::Index generator_count() const noexcept { return G_.cols(); }
        Eigen::Index constraint_count() const noexcept { return A_.rows(); }

        const Vector& center() const noexcept { return c_; }
        const Matrix& generators() const noexcept { return G_; }
        const Matrix& constraint_matrix() const noexcept { return A_; }
        const Vector& constraint_vector() const noexcept { return b_; }

    private:
        // Keeps a maximal independent subset of [A b] rows; an inconsistent system
        // collapses to the single row 0 = 1.
        void remove_redundant_constraints()
        {
            Matrix Ab(A_.rows(), A_.cols() + 1);
            Ab << A_, b_;
            Eigen::ColPivHouseholderQR<Matrix> qr(Ab.transpose());
            qr.setThreshold(Scalar(1e-10));
            const Eigen::Index rank = qr.rank();
            std::vector<Eigen::Index> keep;
            for (Eigen::Index i = 0; i < rank; ++i)
                keep.push_back(qr.colsPermutation().indices()(i));
            std::sort(keep.begin(), keep.end());

            Matrix A_keep(static_cast<Eigen::Index>(keep.size()), A_.cols());
            Vector b_keep(static_cast<Eigen::Index>(keep.size()));
            for (std::size_t k = 0; k < keep.size(); ++k)
            {
                A_keep.row(static_cast<Eigen::Index>(k)) = A_.row(keep[k]);
                b_keep(static_cast<Eigen::Index>(k)) = b_(keep[k]);
            }
            Eigen::ColPivHouseholderQR<Matrix> qa(A_keep.transpose());
            qa.setThreshold(Scalar(1e-10));
            if (qa.rank() < rank)
            {
                A_ = Matrix::Zero(1, G_.cols());
                b_ = Vector::Ones(1);
                return;
            }
            A_ = std::move(A_keep);
            b_ = std::move(b_keep);
        }

        Vector c_;
        Matrix G_;
        Matrix A_;
        Vector b_;
};

using ConZono = ConstrainedZonotope<double>;

template<typename Scalar>
ConstrainedZonotope<Scalar> linear_map(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& M,
                                       const ConstrainedZonotope<Scalar>& Z)
{
    if (M.cols() != Z.dimension())
        throw std::invalid_argument("linear_map: matrix columns differ from set dimension.");
    return ConstrainedZonotope<Scalar>(M * Z.center(), M * Z.generators(), Z.constraint_matrix(),
                                       Z.constraint_vector());
}

template<typename Scalar>
ConstrainedZonotope<Scalar> minkowski_sum(const ConstrainedZonotope<Scalar>& Z1, const ConstrainedZonotope<Scalar>& Z2)
{
    using Matrix = typename ConstrainedZonotope<Scalar>::Matrix;
    using Vector = typename ConstrainedZonotope<Scalar>::Vector;
    if (Z1.dimension() != Z2.dimension())
        throw std::invalid_argument("minkowski_sum: dimension mismatch.");
    const Eigen::Index n1 = Z1.generator_count(), n2 = Z2.generator_count();
    const Eigen::Index m1 = Z1.constraint_count(), m2 = Z2.constraint_count();

    Matrix G(Z1.dimension(), n1 + n2);
    G << Z1.generators(), Z2.generators();
    Matrix A = Matrix::Zero(m1 + m2, n1 + n2);
    A.topLeftCorner(m1, n1) = Z1.constraint_matrix();
    A.bottomRightCorner(m2, n2) = Z2.constraint_matrix();
    Vector b(m1 + m2);
    b << Z1.constraint_vector(), Z2.constraint_vector();
    return ConstrainedZonotope<Scalar>(Z1.center() + Z2.center(), std::move(G), std::move(A), std::move(b));
}

// Exact intersection by generator/constraint stacking:
//   {c1, [G1 0], [A1 0; 0 A2; G1 -G2], [b1; b2; c2 - c1]}
template<typename Scalar>
ConstrainedZonotope<Scalar> intersection(const ConstrainedZonotope<Scalar>& Z1, const ConstrainedZonotope<Scalar>& Z2)
{
    using Matrix = typename ConstrainedZonotope<Scalar>::Matrix;
    using Vector = typename ConstrainedZonotope<Scalar>::Vector;
    if (Z1.dimension() != Z2.dimension())
        throw std::invalid_argument("intersection: dimension mismatch.");
    const Eigen::Index n = Z1.dimension();
    const Eigen::Index n1 = Z1.generator_count(), n2 = Z2.generator_count();
    const Eigen::Index m1 = Z1.constraint_count(), m2 = Z2.constraint_count();

    Matrix G = Matrix::Zero(n, n1 + n2);
    G.leftCols(n1) = Z1.generators();
    Matrix A = Matrix::Zero(m1 + m2 + n, n1 + n2);
    A.topLeftCorner(m1, n1) = Z1.constraint_matrix();
    A.block(m1, n1, m2, n2) = Z2.constraint_matrix();
    A.bottomLeftCorner(n, n1) = Z1.generators();
    A.bottomRightCorner(n, n2) = -Z2.generators();
    Vector b(m1 + m2 + n);
    b << Z1.constraint_vector(), Z2.constraint_vector(), Z2.center() - Z1.center();
    return ConstrainedZonotope<Scalar>(Z1.center(), std::move(G), std::move(A), std::move(b));
}

namespace detail
{

template<typename Scalar>
LpSolution<Scalar> box_lp(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
                          const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                          const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& cost, const char* who)
{
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    // xi in [-1, 1]  <=>  u = xi + 1 in [0, 2]
    const Vector shifted_b = b + A * Vector::Ones(A.cols());
    auto sol = solve_lp<Scalar>(A, shifted_b, cost, Vector::Constant(A.cols(), Scalar(2)));
    if (sol.status == LpStatus::iteration_limit)
        throw LpSolverError(std::string(who) + ": simplex hit its iteration limit.");
    if (sol.status == LpStatus::unbounded)
        throw LpSolverError(std::string(who) + ": bounded LP reported unbounded.");
    if (sol.status == LpStatus::optimal)
        sol.x.array() -= Scalar(1);
    return sol;
}

} // namespace detail

template<typename Scalar>
bool is_empty(const ConstrainedZonotope<Scalar>& Z)
{
    using Vector = typename ConstrainedZonotope<Scalar>::Vector;
    if (Z.constraint_count() == 0)
        return false;
    const auto sol = detail::box_lp<Scalar>(Z.constraint_matrix(), Z.constraint_vector(),
                                            Vector::Zero(Z.generator_count()), "is_empty");
    return sol.status == LpStatus::infeasible;
}

template<typename Scalar>
bool contains(const ConstrainedZonotope<Scalar>& Z, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& p)
{
    using Matrix = typename ConstrainedZonotope<Scalar>::Matrix;
    using Vector = typename ConstrainedZonotope<Scalar>::Vector;
    if (p.size() != Z.dimension())
        throw std::invalid_argument("contains: point dimension differs from set dimension.");
    const Eigen::Index m = Z.constraint_count(), n = Z.dimension();
    Matrix A(m + n, Z.generator_count());
    A << Z.constraint_matrix(), Z.generators();
    Vector b(m + n);
    b << Z.constraint_vector(), p - Z.center();
    const auto sol = detail::box_lp<Scalar>(A, b, Vector::Zero(Z.generator_count()), "contains");
    return sol.status == LpStatus::optimal;
}

template<typename Scalar>
struct SupportResult
{
    Scalar value;                                 // max <d, x> over Z
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> point; // an x attaining it
};

// Throws EmptySetError when Z is empty.
template<typename Scalar>
SupportResult<Scalar> support(const ConstrainedZonotope<Scalar>& Z, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& d)
{
    using Vector = typename ConstrainedZonotope<Scalar>::Vector;
    if (d.size() != Z.dimension())
        throw std::invalid_argument("support: direction dimension differs from set dimension.");
    const Vector gd = Z.generators().transpose() * d;
    Vector xi;
    if (Z.constraint_count() == 0)
    {
        xi = gd.unaryExpr([](Scalar v) { return v >= Scalar(0) ? Scalar(1) : Scalar(-1); });
    }
    else
    {
        auto sol = detail::box_lp<Scalar>(Z.constraint_matrix(), Z.constraint_vector(), Vector(-gd), "support");
        if (sol.status == LpStatus::infeasible)
            throw EmptySetError("support: set is empty.");
        xi = std::move(sol.x);
    }
    Vector x = Z.center() + Z.generators() * xi;
    return {d.dot(x), std::move(x)};
}

// H-representation to constrained zonotope: the polygon's bounding box as the base
// zonotope plus one slack generator per edge halfplane.
ConZono from_polygon(const ConvexPolygon& poly);

// Exact vertex set of a 2D constrained zonotope, recovered from support queries.
// Throws EmptySetError for an empty set and DegenerateRegionError for a segment or point.
ConvexPolygon to_polygon(const ConZono& Z);

} // namespace zsm::geom
