#include "zsm/geom/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "zsm/errors.hpp"

namespace zsm::geom
{

namespace
{

// distance of b from the line through a and c, signed positive for a left turn
double turn_distance(const Point2& a, const Point2& b, const Point2& c)
{
    const Point2 ac = c - a;
    const double len = ac.norm();
    if (len <= eps_geom)
        return 0.0;
    return cross2(ac, b - a) / len * -1.0;
}

std::vector<Point2> cleaned(std::vector<Point2> v)
{
    bool changed = true;
    while (changed && v.size() >= 3)
    {
        changed = false;
        // drop consecutive duplicates, including the wrap-around pair
        std::vector<Point2> out;
        out.reserve(v.size());
        for (const auto& p : v)
        {
            if (out.empty() || (p - out.back()).norm() > eps_geom)
                out.push_back(p);
        }
        while (out.size() > 1 && (out.front() - out.back()).norm() <= eps_geom)
            out.pop_back();
        if (out.size() != v.size())
            changed = true;
        v = std::move(out);
        if (v.size() < 3)
            break;

        // drop vertices that do not turn
        for (std::size_t i = 0; i < v.size() && v.size() >= 3; ++i)
        {
            const auto& a = v[(i + v.size() - 1) % v.size()];
            const auto& c = v[(i + 1) % v.size()];
            if (std::abs(turn_distance(a, v[i], c)) <= eps_geom)
            {
                v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    return v;
}

} // namespace

double signed_area(std::span<const Point2> ring)
{
    double a = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i)
        a += cross2(ring[i], ring[(i + 1) % ring.size()]);
    return 0.5 * a;
}

ConvexPolygon::ConvexPolygon(std::vector<Point2> ccw_vertices) : vertices_(std::move(ccw_vertices))
{
    const std::size_t n = vertices_.size();
    if (n < 3)
        throw std::invalid_argument("ConvexPolygon: fewer than 3 vertices.");
    for (const auto& p : vertices_)
    {
        if (!p.allFinite())
            throw std::invalid_argument("ConvexPolygon: non-finite vertex.");
    }
    double turning = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        const Point2& a = vertices_[i];
        const Point2& b = vertices_[(i + 1) % n];
        const Point2& c = vertices_[(i + 2) % n];
        const Point2 e1 = b - a;
        const Point2 e2 = c - b;
        if (e1.norm() <= eps_geom)
            throw std::invalid_argument("ConvexPolygon: duplicate consecutive vertices.");
        if (cross2(e1, e2) / e1.norm() < -eps_geom)
            throw std::invalid_argument("ConvexPolygon: not convex or not counter-clockwise.");
        turning += std::atan2(cross2(e1, e2), e1.dot(e2));
    }
    if (std::abs(turning - 2.0 * std::numbers::pi) > 1e-6)
        throw std::invalid_argument("ConvexPolygon: self-intersecting vertex order.");
    finish();
    if (area_ < eps_area)
        throw DegenerateRegionError("ConvexPolygon: area below eps_area.");
}

ConvexPolygon::ConvexPolygon(std::vector<Point2> v, trusted_tag) : vertices_(std::move(v))
{
    finish();
}

void ConvexPolygon::finish()
{
    area_ = signed_area(vertices_);
    bounds_.lo = vertices_.front();
    bounds_.hi = vertices_.front();
    for (const auto& p : vertices_)
    {
        bounds_.lo = bounds_.lo.cwiseMin(p);
        bounds_.hi = bounds_.hi.cwiseMax(p);
    }
}

std::optional<ConvexPolygon> ConvexPolygon::from_cleaned(std::vector<Point2> ccw_vertices)
{
    auto v = cleaned(std::move(ccw_vertices));
    if (v.size() < 3 || signed_area(v) < eps_area)
        return std::nullopt;
    return ConvexPolygon(std::move(v), trusted_tag{});
}

ConvexPolygon ConvexPolygon::hull(std::span<const Point2> points)
{
    std::vector<Point2> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    if (pts.size() < 3)
        throw DegenerateRegionError("hull: fewer than 3 points.");

    // Andrew's monotone chain with the exact sign test; near-collinear vertices are removed afterwards
    auto left_turn = [](const Point2& o, const Point2& a, const Point2& b) { return cross2(a - o, b - o) > 0.0; };
    std::vector<Point2> h(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts)
    {
        while (k >= 2 && !left_turn(h[k - 2], h[k - 1], p))
            --k;
        h[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;)
    {
        while (k >= t && !left_turn(h[k - 2], h[k - 1], pts[i]))
            --k;
        h[k++] = pts[i];
    }
    h.resize(k > 0 ? k - 1 : 0);
    auto poly = from_cleaned(std::move(h));
    if (!poly)
        throw DegenerateRegionError("hull: points are collinear or coincident.");
    return *poly;
}

ConvexPolygon ConvexPolygon::box(const Point2& lo, const Point2& hi)
{
    return ConvexPolygon({lo, {hi.x(), lo.y()}, hi, {lo.x(), hi.y()}});
}

ConvexPolygon ConvexPolygon::oriented_box(const Point2& center, const Point2& direction, double half_along,
                                          double half_cross)
{
    const Point2 u = direction.normalized();
    const Point2 v(-u.y(), u.x());
    const Point2 a = half_along * u;
    const Point2 c = half_cross * v;
    return ConvexPolygon({center - a - c, center + a - c, center + a + c, center - a + c});
}

Point2 ConvexPolygon::centroid() const
{
    Point2 acc = Point2::Zero();
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i)
    {
        const Point2& p = vertices_[i];
        const Point2& q = vertices_[(i + 1) % n];
        acc += (p + q) * cross2(p, q);
    }
    return acc / (6.0 * area_);
}

bool ConvexPolygon::contains(const Point2& p, double tol) const
{
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i)
    {
        const Point2& a = vertices_[i];
        const Point2 e = vertices_[(i + 1) % n] - a;
        if (cross2(e, p - a) / e.norm() < -tol)
            return false;
    }
    return true;
}

double ConvexPolygon::boundary_distance(const Point2& p) const
{
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i)
    {
        const Point2& a = vertices_[i];
        const Point2 e = vertices_[(i + 1) % n] - a;
        const double t = std::clamp((p - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
        best = std::min(best, (a + t * e - p).norm());
    }
    return best;
}

std::vector<Halfplane> ConvexPolygon::halfplanes() const
{
    std::vector<Halfplane> out;
    out.reserve(vertices_.size());
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i)
    {
        const Point2& a = vertices_[i];
        const Point2 e = (vertices_[(i + 1) % n] - a).normalized();
        const Point2 normal(e.y(), -e.x()); // right of a CCW edge is outside
        out.push_back({normal, normal.dot(a)});
    }
    return out;
}

ConvexPolygon ConvexPolygon::translated(const Point2& offset) const
{
    std::vector<Point2> v = vertices_;
    for (auto& p : v)
        p += offset;
    return ConvexPolygon(std::move(v), trusted_tag{});
}

ConvexPolygon ConvexPolygon::transformed(const Eigen::Matrix2d& rotation, const Point2& offset) const
{
    if (rotation.determinant() <= 0.0)
        throw std::invalid_argument("ConvexPolygon::transformed: orientation-reversing map.");
    std::vector<Point2> v = vertices_;
    for (auto& p : v)
        p = rotation * p + offset;
    auto out = from_cleaned(std::move(v));
    if (!out)
        throw DegenerateRegionError("ConvexPolygon::transformed: result is degenerate.");
    return *out;
}

std::optional<ConvexPolygon> clip(const ConvexPolygon& poly, const Halfplane& h)
{
    const auto& v = poly.vertices();
    const std::size_t n = v.size();

    bool all_inside = true;
    bool all_outside = true;
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        d[i] = h.signed_distance(v[i]);
        all_inside = all_inside && d[i] <= eps_geom;
        all_outside = all_outside && d[i] >= -eps_geom;
    }
    if (all_inside)
        return poly;
    if (all_outside)
        return std::nullopt;

    std::vector<Point2> out;
    out.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i)
    {
        const std::size_t j = (i + 1) % n;
        if (d[i] <= eps_geom)
            out.push_back(v[i]);
        if ((d[i] < -eps_geom && d[j] > eps_geom) || (d[i] > eps_geom && d[j] < -eps_geom))
        {
            const double t = d[i] / (d[i] - d[j]);
            out.push_back(v[i] + t * (v[j] - v[i]));
        }
    }
    return ConvexPolygon::from_cleaned(std::move(out));
}

} // namespace zsm::geom
