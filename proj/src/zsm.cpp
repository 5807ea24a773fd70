#include "zsm/zsm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "zsm/errors.hpp"
#include "zsm/geom/constrained_zonotope.hpp"

namespace zsm::shadow
{

namespace
{

constexpr double deg = std::numbers::pi / 180.0;

geom::BoundingBox merge(const geom::BoundingBox& a, const geom::BoundingBox& b)
{
    return {a.lo.cwiseMin(b.lo), a.hi.cwiseMax(b.hi)};
}

std::optional<ConvexPolygon> zonotope_shadow(const ConvexPolygon& footprint, const ConvexPolygon& bounds,
                                             const Point2& offset)
{
    const geom::ConZono segment(Eigen::VectorXd(0.5 * offset), Eigen::MatrixXd(0.5 * offset));
    const geom::ConZono swept = geom::minkowski_sum(geom::from_polygon(footprint), segment);
    try
    {
        return geom::to_polygon(geom::intersection(swept, geom::from_polygon(bounds)));
    }
    catch (const EmptySetError&)
    {
        return std::nullopt;
    }
    catch (const DegenerateRegionError&)
    {
        return std::nullopt;
    }
}

std::optional<ConvexPolygon> hull_shadow(const ConvexPolygon& footprint, const ConvexPolygon& bounds,
                                         const Point2& offset)
{
    std::vector<Point2> pts = footprint.vertices();
    for (const auto& v : footprint.vertices())
        pts.push_back(v + offset);
    const RegionSet clipped = geom::intersection(ConvexPolygon::hull(pts), bounds);
    if (clipped.empty())
        return std::nullopt;
    return clipped.parts().front();
}

} // namespace

std::optional<ConvexPolygon> building_shadow(const scene::Building& building, const ConvexPolygon& bounds,
                                             double azimuth_deg, double elevation_deg, double antenna_height,
                                             ShadowMethod method)
{
    if (!(elevation_deg > 0.0) || elevation_deg > 90.0)
        throw std::invalid_argument(fmt::format("building_shadow: elevation {} deg outside (0, 90].", elevation_deg));
    const double rise = building.height - antenna_height;
    if (rise < 0.0)
        return std::nullopt;

    // beyond the joint diagonal the clipped shadow no longer changes
    const auto joint = merge(building.footprint.bounds(), bounds.bounds());
    const double cap = (joint.hi - joint.lo).norm();
    const double length = elevation_deg >= 90.0 ? 0.0 : std::min(rise / std::tan(elevation_deg * deg), cap);
    const Point2 offset = -length * scene::horizontal_direction(azimuth_deg);

    const auto& fb = building.footprint.bounds();
    const geom::BoundingBox swept{fb.lo.cwiseMin(fb.lo + offset), fb.hi.cwiseMax(fb.hi + offset)};
    if (!swept.overlaps(bounds.bounds()))
        return std::nullopt;

    return method == ShadowMethod::zonotope ? zonotope_shadow(building.footprint, bounds, offset)
                                            : hull_shadow(building.footprint, bounds, offset);
}

ShadowRegion compute_shadow(const scene::Scene& scene, const scene::SatelliteView& sat, double antenna_height,
                            ShadowMethod method)
{
    if (!(sat.elevation_deg > 0.0))
        throw std::invalid_argument(
            fmt::format("compute_shadow: satellite {} has elevation {} deg.", sat.sat_id, sat.elevation_deg));
    std::vector<ConvexPolygon> parts;
    for (const auto& b : scene.buildings)
    {
        if (auto s = building_shadow(b, scene.bounds, sat.azimuth_deg, sat.elevation_deg, antenna_height, method))
            parts.push_back(std::move(*s));
    }
    return {sat.sat_id, geom::union_of(parts), sat.elevation_deg <= grazing_elevation_deg};
}

std::map<SatId, ShadowRegion> compute_shadows(const scene::Scene& scene, std::span<const scene::SatelliteView> sats,
                                              double antenna_height, ShadowMethod method)
{
    std::map<SatId, ShadowRegion> out;
    for (const auto& s : sats)
        out.emplace(s.sat_id, compute_shadow(scene, s, antenna_height, method));
    return out;
}

std::string_view to_string(Operation op)
{
    switch (op)
    {
    case Operation::subtract:
        return "subtract";
    case Operation::intersect:
        return "intersect";
    case Operation::skipped:
        return "skipped";
    }
    return "unknown";
}

Aoi refine_aoi(const Aoi& initial, std::span<const select::SelectionDecision> decisions,
               const std::map<SatId, ShadowRegion>& shadows)
{
    std::vector<const select::SelectionDecision*> chosen;
    for (const auto& d : decisions)
    {
        if (!d.selected)
            continue;
        if (!d.agreed_label)
            throw std::invalid_argument(fmt::format("refine_aoi: satellite {} is selected without a label.", d.sat_id));
        if (!shadows.contains(d.sat_id))
            throw std::invalid_argument(fmt::format("refine_aoi: no shadow for satellite {}.", d.sat_id));
        chosen.push_back(&d);
    }
    std::stable_sort(chosen.begin(), chosen.end(), [](auto* a, auto* b) { return a->sat_id < b->sat_id; });

    Aoi out{initial.region, initial.log, chosen.empty()};
    for (const auto* d : chosen)
    {
        const Label label = *d->agreed_label;
        if (out.region.empty())
        {
            out.log.push_back({d->sat_id, label, Operation::skipped, 0.0});
            continue;
        }
        const RegionSet& shade = shadows.at(d->sat_id).region;
        if (label == Label::los)
        {
            out.region = geom::difference(out.region, shade);
            out.log.push_back({d->sat_id, label, Operation::subtract, out.region.area()});
        }
        else
        {
            out.region = geom::intersection(out.region, shade);
            out.log.push_back({d->sat_id, label, Operation::intersect, out.region.area()});
        }
    }
    return out;
}

PositioningOutcome score_epoch(const Aoi& aoi, const Point2& truth, const Point2& street_direction)
{
    if (std::abs(street_direction.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("score_epoch: street direction must be a unit vector.");
    PositioningOutcome o;
    o.no_refinement = aoi.no_refinement;
    o.success = !aoi.region.empty();
    if (!o.success)
        return o;
    o.contains_truth = aoi.region.contains(truth, geom::eps_geom);
    o.along_bound = geom::extent(aoi.region, street_direction);
    o.cross_bound = geom::extent(aoi.region, Point2(-street_direction.y(), street_direction.x()));
    return o;
}

bool near_boundary(const RegionSet& region, const Point2& p, double tol)
{
    const bool here = region.contains(p, 0.0);
    for (const Point2& step : {Point2(tol, 0.0), Point2(-tol, 0.0), Point2(0.0, tol), Point2(0.0, -tol)})
    {
        if (region.contains(p + step, 0.0) != here)
            return true;
    }
    return false;
}

void record_usage(PositioningOutcome& outcome, std::span<const select::SelectionDecision> decisions,
                  std::span<const Label> truth, const std::map<SatId, ShadowRegion>& shadows, const Point2& position)
{
    if (decisions.size() != truth.size())
        throw std::invalid_argument("record_usage: decisions and truth labels differ in length.");
    outcome.satellites_used = 0;
    outcome.misclassified_used = 0;
    outcome.boundary_ambiguous = false;
    for (std::size_t i = 0; i < decisions.size(); ++i)
    {
        const auto& d = decisions[i];
        if (!d.selected)
            continue;
        ++outcome.satellites_used;
        if (d.agreed_label != truth[i])
            ++outcome.misclassified_used;
        const auto it = shadows.find(d.sat_id);
        if (it != shadows.end() && near_boundary(it->second.region, position))
            outcome.boundary_ambiguous = true;
    }
}

} // namespace zsm::shadow
