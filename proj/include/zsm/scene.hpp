#pragma once

// Synthetic urban canyon: a straight street flanked by extruded convex buildings,
// a slowly drifting satellite sky, ray-traced LOS/NLOS truth and measurement synthesis.
//
// Frames: world coordinates are local east/north/up in meters. Azimuth is measured
// clockwise from north, so the horizontal unit vector of azimuth `az` is (sin az, cos az).

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "zsm/geom/polygon.hpp"
#include "zsm/geom/region.hpp"
#include "zsm/types.hpp"

namespace zsm::scene
{

using geom::ConvexPolygon;
using geom::Point2;
using geom::RegionSet;

struct SceneConfig
{
    double street_width = 30.0;         // m, building-free corridor
    double street_azimuth_deg = 90.0;   // direction of travel
    double speed = 1.0;                 // m per epoch (1 Hz)
    int target_epochs = 146;            // contiguous evaluation section
    int training_epochs = 600;          // remaining sections, driven first
    int building_count = -1;            // -1 fills both sides of the street
    double height_min = 20.0;
    double height_max = 80.0;
    double building_length_min = 15.0;  // along street
    double building_length_max = 45.0;
    double building_depth_min = 15.0;   // cross street
    double building_depth_max = 30.0;
    double gap_min = 8.0;               // between neighbours on one side
    double gap_max = 30.0;
    double setback_max = 4.0;           // building face distance from the street edge
    double chamfer_probability = 0.3;   // cut one street-side corner
    double min_clearance = 2.0;         // trajectory to street edge; width must exceed twice this
    double aoi_margin_along = 20.0;     // AOI beyond the first/last target epoch
    double aoi_margin_cross = 10.0;     // AOI beyond each street edge
    double antenna_height = 1.8;
    int constellation_size = 10;
    double elevation_mask_deg = 15.0;
    double max_initial_elevation_deg = 85.0;
    double azimuth_rate_max = 0.03;     // deg per epoch
    double elevation_rate_max = 0.01;   // deg per epoch
    std::uint64_t seed = 1;
};

struct NoiseConfig
{
    double sigma_los = 1.0;        // m
    double sigma_nlos = 3.0;       // m
    double nlos_delay_min = 5.0;   // m, uniform excess path
    double nlos_delay_max = 50.0;
    double nlos_loss = 8.0;        // dB-Hz
    double sigma_cn0 = 2.0;        // dB-Hz
    double cn0_base = 35.0;        // cn0 = base + slope * sin(el) for LOS
    double cn0_slope = 10.0;
    double cn0_min = 10.0;
    double cn0_max = 55.0;
    double clock_bias_spread = 30000.0; // m, initial receiver clock offset drawn from +-spread
    double clock_drift = 0.5;           // m per epoch
    double los_track_probability = 1.0;
    double nlos_track_probability = 0.2;
    int min_tracked = 5;                // keeps LS overdetermined; re-admits highest satellites first

    // No random or systematic range error; C/N0 keeps its deterministic NLOS loss.
    static NoiseConfig noise_free()
    {
        NoiseConfig n;
        n.sigma_los = n.sigma_nlos = n.sigma_cn0 = 0.0;
        n.nlos_delay_min = n.nlos_delay_max = 0.0;
        return n;
    }
};

struct Building
{
    ConvexPolygon footprint;
    double height = 0.0;
};

// Linear drift in azimuth/elevation with epoch index.
struct SkyTrack
{
    SatId sat_id = 0;
    double azimuth0_deg = 0.0;
    double elevation0_deg = 0.0;
    double azimuth_rate = 0.0;
    double elevation_rate = 0.0;
};

struct SatelliteView
{
    SatId sat_id = 0;
    double azimuth_deg = 0.0;
    double elevation_deg = 0.0;
    double true_range = 0.0; // m, receiver antenna to satellite
};

struct RawObservation
{
    SatId sat_id = 0;
    double pseudorange = 0.0;     // m
    double cn0 = 0.0;             // dB-Hz
    double elevation_deg = 0.0;
    double azimuth_deg = 0.0;
    Eigen::Vector3d satellite_position = Eigen::Vector3d::Zero(); // world frame
    double true_range = 0.0;
    std::optional<Label> truth;
};

struct EpochObservation
{
    int epoch_index = 0;
    bool target_road = false;
    Point2 true_position = Point2::Zero();
    double antenna_height = 0.0;
    double true_clock_bias = 0.0; // m
    std::vector<RawObservation> observations;

    Eigen::Vector3d receiver() const { return {true_position.x(), true_position.y(), antenna_height}; }
};

struct Scene
{
    SceneConfig config;
    std::vector<Building> buildings;
    Point2 street_direction = Point2(1.0, 0.0);
    ConvexPolygon bounds;                  // AOI window around the target road
    RegionSet initial_aoi;                 // bounds minus building footprints
    std::vector<Point2> trajectory;        // target-road epochs
    std::vector<Point2> training_trajectory;
    std::vector<SkyTrack> sky;
    double clock_bias0 = 0.0;              // m

    std::uint64_t seed() const { return config.seed; }
    int epoch_count() const { return static_cast<int>(training_trajectory.size() + trajectory.size()); }
    Point2 street_midpoint() const;
    // Left-hand normal of the street direction.
    Point2 cross_direction() const { return {-street_direction.y(), street_direction.x()}; }
};

// Throws ConfigError for infeasible or inconsistent settings.
void validate(const SceneConfig& cfg);
void validate(const NoiseConfig& cfg);

Scene generate_scene(const SceneConfig& cfg);

// Horizontal unit vector of an azimuth, and the 3D unit vector toward (az, el).
Point2 horizontal_direction(double azimuth_deg);
Eigen::Vector3d sky_direction(double azimuth_deg, double elevation_deg);

// Receiver-to-satellite range for a circular GPS-altitude orbit seen from the Earth's surface.
double orbit_range(double elevation_deg);

// True iff the ray receiver + t * direction (t >= 0) meets the closed prism footprint x [0, height].
bool los_ray_test(const Building& building, const Eigen::Vector3d& receiver, const Eigen::Vector3d& direction);

// OR of los_ray_test over all buildings.
bool ray_blocked(const Scene& scene, const Eigen::Vector3d& receiver, const Eigen::Vector3d& direction);

// Sky at a given epoch, above the elevation mask, ordered by satellite id.
std::vector<SatelliteView> sky_at(const Scene& scene, int epoch_index);

// Geometry-only epoch: true position, clock, satellite positions; no labels or measurements.
EpochObservation observe_epoch(const Scene& scene, int epoch_index);

// Sets every truth label: NLOS iff some building blocks the direct ray.
EpochObservation label_epoch(const Scene& scene, EpochObservation epoch);

// Drops untracked NLOS/LOS signals per the configured probabilities, keeping at least min_tracked.
EpochObservation apply_tracking(EpochObservation epoch, const NoiseConfig& noise, std::mt19937_64& rng);

// Pseudorange and C/N0 from truth labels. Requires every observation to be labeled.
EpochObservation synthesize_measurements(const Scene& scene, EpochObservation epoch, const NoiseConfig& noise,
                                         std::mt19937_64& rng);

// observe -> label -> track -> synthesize for every epoch (training first, then target road).
// Each epoch draws from its own seed stream, so results do not depend on evaluation order.
std::vector<EpochObservation> simulate_epochs(const Scene& scene, const NoiseConfig& noise);

} // namespace zsm::scene
