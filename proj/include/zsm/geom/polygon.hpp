#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

#include "zsm/geom/tolerance.hpp"

namespace zsm::geom
{

using Point2 = Eigen::Vector2d;

inline double cross2(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

struct BoundingBox
{
    Point2 lo;
    Point2 hi;

    bool overlaps(const BoundingBox& o, double tol = eps_geom) const
    {
        return lo.x() <= o.hi.x() + tol && o.lo.x() <= hi.x() + tol
            && lo.y() <= o.hi.y() + tol && o.lo.y() <= hi.y() + tol;
    }
};

// {x : normal . x <= offset}
struct Halfplane
{
    Point2 normal;
    double offset = 0.0;

    double signed_distance(const Point2& p) const { return normal.dot(p) - offset; }
    Halfplane complement() const { return {-normal, -offset}; }
};

// Counter-clockwise, strictly convex, at least three vertices and area >= eps_area.
class ConvexPolygon
{
    public:
        // Validates the vertex list as given; throws std::invalid_argument when it is
        // not a CCW convex polygon and DegenerateRegionError when its area is below eps_area.
        explicit ConvexPolygon(std::vector<Point2> ccw_vertices);

        // Removes duplicate and collinear vertices first; nullopt when the rest is degenerate.
        static std::optional<ConvexPolygon> from_cleaned(std::vector<Point2> ccw_vertices);

        // Convex hull; throws DegenerateRegionError for collinear or coincident input.
        static ConvexPolygon hull(std::span<const Point2> points);

        static ConvexPolygon box(const Point2& lo, const Point2& hi);

        // Rectangle with half-lengths along `direction` (unit) and its left normal.
        static ConvexPolygon oriented_box(const Point2& center, const Point2& direction,
                                          double half_along, double half_cross);

        const std::vector<Point2>& vertices() const noexcept { return vertices_; }
        std::size_t size() const noexcept { return vertices_.size(); }
        const Point2& operator[](std::size_t i) const { return vertices_[i]; }

        double area() const noexcept { return area_; }
        Point2 centroid() const;
        const BoundingBox& bounds() const noexcept { return bounds_; }

        // Closed membership with a distance tolerance.
        bool contains(const Point2& p, double tol = eps_geom) const;

        // Distance from p to the polygon boundary (inside or outside).
        double boundary_distance(const Point2& p) const;

        // Outward edge halfplanes with unit normals; edge i runs from vertex i to i+1.
        std::vector<Halfplane> halfplanes() const;

        ConvexPolygon translated(const Point2& offset) const;
        // Rotation or reflection-free linear map; reflections would flip orientation.
        ConvexPolygon transformed(const Eigen::Matrix2d& rotation, const Point2& offset = Point2::Zero()) const;

    private:
        struct trusted_tag {};
        ConvexPolygon(std::vector<Point2> v, trusted_tag);
        void finish();

        std::vector<Point2> vertices_;
        double area_ = 0.0;
        BoundingBox bounds_{};
};

double signed_area(std::span<const Point2> ring);

// Sutherland-Hodgman clip against one halfplane (closed); nullopt when the remainder is degenerate.
std::optional<ConvexPolygon> clip(const ConvexPolygon& poly, const Halfplane& h);

} // namespace zsm::geom
