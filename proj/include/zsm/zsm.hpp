#pragma once

// Ground-plane shadow matching: per-satellite shadow regions at antenna height and
// set-based refinement of the area of interest by selected LOS/NLOS labels.

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "zsm/geom/region.hpp"
#include "zsm/scene.hpp"
#include "zsm/select.hpp"

namespace zsm::shadow
{

using geom::ConvexPolygon;
using geom::Point2;
using geom::RegionSet;

// Elevations at or below this are treated as grazing (degrees).
inline constexpr double grazing_elevation_deg = 0.01;

enum class ShadowMethod
{
    zonotope, // footprint (+) segment as a constrained zonotope, clipped and converted
    polygon   // convex hull of the footprint and its translate
};

struct ShadowRegion
{
    SatId sat_id = 0;
    RegionSet region;     // ground area where the satellite is blocked, within scene bounds
    bool grazing = false; // shadow length was capped at the bounds
};

// Shadow of one building as a convex polygon clipped to `bounds`; nullopt when nothing
// of positive area remains. Elevation must be positive.
std::optional<ConvexPolygon> building_shadow(const scene::Building& building, const ConvexPolygon& bounds,
                                             double azimuth_deg, double elevation_deg, double antenna_height,
                                             ShadowMethod method = ShadowMethod::zonotope);

// Union of building shadows, merged into disjoint parts. Throws std::invalid_argument
// when the elevation is not positive.
ShadowRegion compute_shadow(const scene::Scene& scene, const scene::SatelliteView& sat, double antenna_height,
                            ShadowMethod method = ShadowMethod::zonotope);

std::map<SatId, ShadowRegion> compute_shadows(const scene::Scene& scene, std::span<const scene::SatelliteView> sats,
                                              double antenna_height, ShadowMethod method = ShadowMethod::zonotope);

enum class Operation
{
    subtract,  // LOS: outside the shadow
    intersect, // NLOS: inside the shadow
    skipped    // region already empty
};

std::string_view to_string(Operation op);

struct RefinementStep
{
    SatId sat_id = 0;
    Label label = Label::los;
    Operation op = Operation::skipped;
    double area = 0.0; // after the step
};

struct Aoi
{
    RegionSet region;
    std::vector<RefinementStep> log;
    bool no_refinement = false; // no satellite was selected
};

// Applies selected decisions in ascending satellite id. Throws std::invalid_argument
// when a selected satellite has no shadow.
Aoi refine_aoi(const Aoi& initial, std::span<const select::SelectionDecision> decisions,
               const std::map<SatId, ShadowRegion>& shadows);

struct PositioningOutcome
{
    int epoch_index = 0;
    bool success = false;
    bool contains_truth = false;
    std::optional<double> cross_bound; // m, absent when the region is empty
    std::optional<double> along_bound;
    int satellites_used = 0;
    int misclassified_used = 0;
    bool boundary_ambiguous = false;
    bool no_refinement = false;
};

PositioningOutcome score_epoch(const Aoi& aoi, const Point2& truth, const Point2& street_direction);

// True when membership of `region` changes within `tol` of p along either axis.
bool near_boundary(const RegionSet& region, const Point2& p, double tol = geom::eps_geom);

// Sets satellites_used, misclassified_used and boundary_ambiguous from the decisions,
// their truth labels (aligned) and the shadows that were applied.
void record_usage(PositioningOutcome& outcome, std::span<const select::SelectionDecision> decisions,
                  std::span<const Label> truth, const std::map<SatId, ShadowRegion>& shadows, const Point2& position);

} // namespace zsm::shadow
