#include "zsm/geom/constrained_zonotope.hpp"

#include <numbers>

namespace zsm::geom
{

ConZono from_polygon(const ConvexPolygon& poly)
{
    const auto hps = poly.halfplanes();
    const auto m = static_cast<Eigen::Index>(hps.size());
    const Point2 lo = poly.bounds().lo;
    const Point2 hi = poly.bounds().hi;
    const Point2 c = 0.5 * (lo + hi);
    const Point2 r = 0.5 * (hi - lo);

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2, 2 + m);
    G(0, 0) = r.x();
    G(1, 1) = r.y();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, 2 + m);
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i)
    {
        const auto& h = hps[static_cast<std::size_t>(i)];
        // n.x + sigma/2 (s + 1) = k with x in the box and s in [-1, 1]
        const double lowest = h.normal.dot(c) - std::abs(h.normal.x()) * r.x() - std::abs(h.normal.y()) * r.y();
        const double sigma = std::max(0.0, h.offset - lowest);
        A(i, 0) = h.normal.x() * r.x();
        A(i, 1) = h.normal.y() * r.y();
        A(i, 2 + i) = 0.5 * sigma;
        b(i) = h.offset - h.normal.dot(c) - 0.5 * sigma;
    }
    return ConZono(Eigen::Vector2d(c), std::move(G), std::move(A), std::move(b));
}

namespace
{

Point2 support_point(const ConZono& Z, const Point2& d, double& value)
{
    const auto s = support<double>(Z, Eigen::VectorXd(d));
    value = s.value;
    return Point2(s.point(0), s.point(1));
}

bool same_point(const Point2& a, const Point2& b, double tol) { return (a - b).norm() <= tol; }

} // namespace

ConvexPolygon to_polygon(const ConZono& Z)
{
    if (Z.dimension() != 2)
        throw std::invalid_argument("to_polygon: set must be two-dimensional.");
    if (is_empty(Z))
        throw EmptySetError("to_polygon: set is empty.");

    const double scale = std::max(1.0, Z.center().cwiseAbs().maxCoeff() + Z.generators().cwiseAbs().rowwise().sum().maxCoeff());
    const double tol = eps_geom * scale;

    std::vector<Point2> pts;
    auto add = [&](const Point2& p) {
        for (const auto& q : pts)
        {
            if (same_point(p, q, tol))
                return false;
        }
        pts.push_back(p);
        return true;
    };

    double value = 0.0;
    for (int k = 0; k < 8; ++k)
    {
        const double a = k * std::numbers::pi / 4.0;
        add(support_point(Z, Point2(std::cos(a), std::sin(a)), value));
    }

    // edges already proven to be facets of Z
    std::vector<std::pair<Point2, Point2>> confirmed;
    auto is_confirmed = [&](const Point2& a, const Point2& b) {
        return std::any_of(confirmed.begin(), confirmed.end(), [&](const auto& e) {
            return same_point(e.first, a, tol) && same_point(e.second, b, tol);
        });
    };

    for (int iter = 0; iter < 1000; ++iter)
    {
        if (pts.size() < 3)
        {
            if (pts.size() < 2)
                throw DegenerateRegionError("to_polygon: set is a single point.");
        }

        std::vector<Point2> ring;
        bool collinear = pts.size() < 3;
        if (!collinear)
        {
            try
            {
                ring = ConvexPolygon::hull(pts).vertices();
            }
            catch (const DegenerateRegionError&)
            {
                collinear = true;
            }
        }
        if (collinear)
        {
            // probe both normals of the segment spanned by the extreme points
            std::size_t ia = 0, ib = 0;
            double best = -1.0;
            for (std::size_t i = 0; i < pts.size(); ++i)
            {
                for (std::size_t j = i + 1; j < pts.size(); ++j)
                {
                    const double dist = (pts[i] - pts[j]).norm();
                    if (dist > best)
                    {
                        best = dist;
                        ia = i;
                        ib = j;
                    }
                }
            }
            const Point2 e = (pts[ib] - pts[ia]).normalized();
            const Point2 nrm(-e.y(), e.x());
            bool grew = false;
            for (const Point2& d : {nrm, Point2(-nrm)})
            {
                const Point2 p = support_point(Z, d, value);
                if (value - d.dot(pts[ia]) > tol)
                    grew = add(p) || grew;
            }
            if (!grew)
                throw DegenerateRegionError("to_polygon: set is a segment (zero area).");
            continue;
        }

        bool grew = false;
        const std::size_t n = ring.size();
        for (std::size_t i = 0; i < n; ++i)
        {
            const Point2& a = ring[i];
            const Point2& b = ring[(i + 1) % n];
            if (is_confirmed(a, b))
                continue;
            const Point2 e = (b - a).normalized();
            const Point2 outward(e.y(), -e.x());
            const Point2 p = support_point(Z, outward, value);
            if (value - outward.dot(a) > tol && add(p))
                grew = true;
            else
                confirmed.emplace_back(a, b);
        }
        if (!grew)
        {
            auto poly = ConvexPolygon::from_cleaned(std::move(ring));
            if (!poly)
                throw DegenerateRegionError("to_polygon: area below eps_area.");
            return *poly;
        }
    }
    throw LpSolverError("to_polygon: vertex refinement did not terminate.");
}

} // namespace zsm::geom
