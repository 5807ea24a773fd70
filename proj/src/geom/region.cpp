#include "zsm/geom/region.hpp"

#include <cmath>
#include <stdexcept>

#include "zsm/errors.hpp"

namespace zsm::geom
{

RegionSet::RegionSet(ConvexPolygon part)
{
    parts_.push_back(std::move(part));
}

RegionSet::RegionSet(std::vector<ConvexPolygon> disjoint_parts) : parts_(std::move(disjoint_parts))
{
}

double RegionSet::area() const
{
    double a = 0.0;
    for (const auto& p : parts_)
        a += p.area();
    return a;
}

bool RegionSet::contains(const Point2& p, double tol) const
{
    for (const auto& part : parts_)
    {
        if (part.contains(p, tol))
            return true;
    }
    return false;
}

BoundingBox RegionSet::bounds() const
{
    if (parts_.empty())
        throw NoPositionError("RegionSet::bounds: empty region.");
    BoundingBox b = parts_.front().bounds();
    for (const auto& p : parts_)
    {
        b.lo = b.lo.cwiseMin(p.bounds().lo);
        b.hi = b.hi.cwiseMax(p.bounds().hi);
    }
    return b;
}

RegionSet intersection(const ConvexPolygon& a, const ConvexPolygon& b)
{
    if (!a.bounds().overlaps(b.bounds()))
        return {};
    std::optional<ConvexPolygon> cur = a;
    for (const auto& h : b.halfplanes())
    {
        cur = clip(*cur, h);
        if (!cur)
            return {};
    }
    return RegionSet(std::move(*cur));
}

RegionSet difference(const ConvexPolygon& a, const ConvexPolygon& b)
{
    if (!a.bounds().overlaps(b.bounds()))
        return RegionSet(a);
    std::vector<ConvexPolygon> pieces;
    std::optional<ConvexPolygon> remaining = a;
    for (const auto& h : b.halfplanes())
    {
        if (auto outside = clip(*remaining, h.complement()))
            pieces.push_back(std::move(*outside));
        remaining = clip(*remaining, h);
        if (!remaining)
            break;
    }
    return RegionSet(std::move(pieces));
}

RegionSet intersection(const RegionSet& r, const ConvexPolygon& p)
{
    std::vector<ConvexPolygon> out;
    for (const auto& part : r.parts())
    {
        RegionSet piece = intersection(part, p);
        for (const auto& q : piece.parts())
            out.push_back(q);
    }
    return RegionSet(std::move(out));
}

RegionSet intersection(const RegionSet& r, const RegionSet& s)
{
    std::vector<ConvexPolygon> out;
    for (const auto& part : s.parts())
    {
        RegionSet piece = intersection(r, part);
        for (const auto& q : piece.parts())
            out.push_back(q);
    }
    return RegionSet(std::move(out));
}

RegionSet difference(const RegionSet& r, const ConvexPolygon& p)
{
    std::vector<ConvexPolygon> out;
    for (const auto& part : r.parts())
    {
        RegionSet pieces = difference(part, p);
        for (const auto& q : pieces.parts())
            out.push_back(q);
    }
    return RegionSet(std::move(out));
}

RegionSet difference(const RegionSet& r, const RegionSet& s)
{
    RegionSet cur = r;
    for (const auto& part : s.parts())
    {
        cur = difference(cur, part);
        if (cur.empty())
            break;
    }
    return cur;
}

RegionSet union_of(std::span<const ConvexPolygon> polygons)
{
    RegionSet acc;
    for (const auto& p : polygons)
    {
        // p \ acc is disjoint from acc by construction
        RegionSet fresh = difference(RegionSet(p), acc);
        std::vector<ConvexPolygon> parts = acc.parts();
        parts.insert(parts.end(), fresh.parts().begin(), fresh.parts().end());
        acc = RegionSet(std::move(parts));
    }
    return acc;
}

double extent(const RegionSet& r, const Point2& direction)
{
    if (r.empty())
        throw NoPositionError("extent: empty region has no position bound.");
    if (std::abs(direction.norm() - 1.0) > eps_geom)
        throw std::invalid_argument("extent: direction must be a unit vector.");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& part : r.parts())
    {
        for (const auto& v : part.vertices())
        {
            const double s = v.dot(direction);
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
    }
    return hi - lo;
}

double max_overlap_area(const RegionSet& r)
{
    double worst = 0.0;
    const auto& parts = r.parts();
    for (std::size_t i = 0; i < parts.size(); ++i)
    {
        for (std::size_t j = i + 1; j < parts.size(); ++j)
            worst = std::max(worst, intersection(parts[i], parts[j]).area());
    }
    return worst;
}

} // namespace zsm::geom
