#pragma once

#include <span>
#include <vector>

#include "zsm/geom/polygon.hpp"

namespace zsm::geom
{

// Finite union of interior-disjoint convex polygons.
class RegionSet
{
    public:
        RegionSet() = default;
        explicit RegionSet(ConvexPolygon part);
        // Parts must already be pairwise interior-disjoint; this is not re-checked.
        explicit RegionSet(std::vector<ConvexPolygon> disjoint_parts);

        const std::vector<ConvexPolygon>& parts() const noexcept { return parts_; }
        bool empty() const noexcept { return parts_.empty(); }
        std::size_t size() const noexcept { return parts_.size(); }

        double area() const;
        bool contains(const Point2& p, double tol = eps_geom) const;
        // Throws NoPositionError when empty.
        BoundingBox bounds() const;

    private:
        std::vector<ConvexPolygon> parts_;
};

// Zero or one convex piece.
RegionSet intersection(const ConvexPolygon& a, const ConvexPolygon& b);

// Successive clipping: the part of `a` outside each supporting halfplane of `b`, in edge order.
RegionSet difference(const ConvexPolygon& a, const ConvexPolygon& b);

RegionSet intersection(const RegionSet& r, const ConvexPolygon& p);
RegionSet intersection(const RegionSet& r, const RegionSet& s);
RegionSet difference(const RegionSet& r, const ConvexPolygon& p);
RegionSet difference(const RegionSet& r, const RegionSet& s);

// Disjoint decomposition of an arbitrary list of (possibly overlapping) convex polygons.
RegionSet union_of(std::span<const ConvexPolygon> polygons);

// max <v, direction> - min <v, direction> over every vertex; throws NoPositionError when empty.
double extent(const RegionSet& r, const Point2& direction);

// Largest pairwise overlap area between parts; ~0 for a valid RegionSet.
double max_overlap_area(const RegionSet& r);

} // namespace zsm::geom
