#include "zsm/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "zsm/errors.hpp"

namespace zsm::scene
{

namespace
{

constexpr double deg = std::numbers::pi / 180.0;
constexpr double earth_radius = 6371.0e3;  // m
constexpr double orbit_radius = 26560.0e3; // m, GPS semi-major axis

// stream ids for mix_seed
constexpr std::uint64_t stream_scene = 1;
constexpr std::uint64_t stream_epoch = 2;

void require(bool ok, const char* what)
{
    if (!ok)
        throw ConfigError(what);
}

// Street-frame rectangle [x0, x1] x [y0, y1], optionally with one street-side corner cut.
std::vector<Point2> footprint_ring(double x0, double x1, double y0, double y1, bool street_is_low_y, int chamfer_corner,
                                   double chamfer)
{
    std::vector<Point2> ring{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    if (chamfer_corner < 0)
        return ring;
    // street-side corners: y0 row when the street is below, y1 row otherwise
    const std::size_t idx = street_is_low_y ? static_cast<std::size_t>(chamfer_corner) // 0 or 1
                                            : static_cast<std::size_t>(2 + chamfer_corner);
    const Point2 corner = ring[idx];
    const Point2 prev = ring[(idx + 3) % 4];
    const Point2 next = ring[(idx + 1) % 4];
    const Point2 a = corner + chamfer * (prev - corner).normalized();
    const Point2 b = corner + chamfer * (next - corner).normalized();
    std::vector<Point2> out;
    for (std::size_t i = 0; i < 4; ++i)
    {
        if (i == idx)
        {
            out.push_back(a);
            out.push_back(b);
        }
        else
        {
            out.push_back(ring[i]);
        }
    }
    return out;
}

} // namespace

Point2 Scene::street_midpoint() const
{
    const Point2& first = training_trajectory.empty() ? trajectory.front() : training_trajectory.front();
    const Point2& last = trajectory.empty() ? training_trajectory.back() : trajectory.back();
    return 0.5 * (first + last);
}

void validate(const SceneConfig& c)
{
    require(std::isfinite(c.street_width) && c.street_width > 2.0 * c.min_clearance,
            "scene: street narrower than twice the trajectory clearance");
    require(c.min_clearance >= 0.0, "scene: negative clearance");
    require(c.speed > 0.0, "scene: speed must be positive");
    require(c.target_epochs > 0, "scene: target_epochs must be positive");
    require(c.training_epochs >= 0, "scene: training_epochs must be non-negative");
    require(c.height_min > c.antenna_height && c.height_min <= c.height_max,
            "scene: building heights must exceed the antenna and satisfy min <= max");
    require(c.building_length_min > 0.0 && c.building_length_min <= c.building_length_max,
            "scene: invalid building length range");
    require(c.building_depth_min > 0.0 && c.building_depth_min <= c.building_depth_max,
            "scene: invalid building depth range");
    require(c.gap_min >= 0.0 && c.gap_min <= c.gap_max, "scene: invalid gap range");
    require(c.setback_max >= 0.0, "scene: negative setback");
    require(c.chamfer_probability >= 0.0 && c.chamfer_probability <= 1.0, "scene: chamfer probability outside [0, 1]");
    require(c.aoi_margin_along >= 0.0 && c.aoi_margin_cross >= 0.0, "scene: negative AOI margin");
    require(c.antenna_height > 0.0, "scene: antenna height must be positive");
    require(c.constellation_size >= 4, "scene: need at least four satellites");
    require(c.elevation_mask_deg > 0.0 && c.elevation_mask_deg < c.max_initial_elevation_deg
                && c.max_initial_elevation_deg < 90.0,
            "scene: invalid elevation range");
    require(c.azimuth_rate_max >= 0.0 && c.elevation_rate_max >= 0.0, "scene: negative drift rate");
    const double drift = c.elevation_rate_max * (c.training_epochs + c.target_epochs);
    require(c.elevation_mask_deg + drift + 1.0 < c.max_initial_elevation_deg,
            "scene: elevation drift would carry satellites below the mask");
}

void validate(const NoiseConfig& n)
{
    require(n.sigma_los >= 0.0 && n.sigma_nlos >= 0.0 && n.sigma_cn0 >= 0.0, "noise: negative sigma");
    require(n.nlos_delay_min >= 0.0 && n.nlos_delay_min <= n.nlos_delay_max, "noise: invalid NLOS delay range");
    require(n.cn0_min < n.cn0_max, "noise: invalid C/N0 clip range");
    require(n.los_track_probability >= 0.0 && n.los_track_probability <= 1.0 && n.nlos_track_probability >= 0.0
                && n.nlos_track_probability <= 1.0,
            "noise: tracking probability outside [0, 1]");
    require(n.min_tracked >= 4, "noise: min_tracked below four");
}

Point2 horizontal_direction(double azimuth_deg)
{
    return {std::sin(azimuth_deg * deg), std::cos(azimuth_deg * deg)};
}

Eigen::Vector3d sky_direction(double azimuth_deg, double elevation_deg)
{
    const double ce = std::cos(elevation_deg * deg);
    return {ce * std::sin(azimuth_deg * deg), ce * std::cos(azimuth_deg * deg), std::sin(elevation_deg * deg)};
}

double orbit_range(double elevation_deg)
{
    const double se = std::sin(elevation_deg * deg);
    const double ce = std::cos(elevation_deg * deg);
    return std::sqrt(orbit_radius * orbit_radius - earth_radius * earth_radius * ce * ce) - earth_radius * se;
}

Scene generate_scene(const SceneConfig& cfg)
{
    validate(cfg);
    std::mt19937_64 rng(mix_seed(cfg.seed, stream_scene));
    auto uniform = [&rng](double lo, double hi) {
        return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
    };

    const int total_epochs = cfg.training_epochs + cfg.target_epochs;
    const double end_margin = cfg.aoi_margin_along + cfg.building_length_max;
    const double street_length = total_epochs * cfg.speed + 2.0 * end_margin;
    const double half_width = 0.5 * cfg.street_width;

    // street frame -> world
    const Point2 u = horizontal_direction(cfg.street_azimuth_deg);
    const Point2 v(-u.y(), u.x());
    auto to_world = [&](const Point2& p) -> Point2 { return p.x() * u + p.y() * v; };

    struct Placed
    {
        double x0;
        int side;
        Building b;
    };
    std::vector<Placed> placed;
    for (int side : {+1, -1})
    {
        double x = uniform(0.0, cfg.gap_max);
        while (x < street_length)
        {
            const double len = uniform(cfg.building_length_min, cfg.building_length_max);
            const double depth = uniform(cfg.building_depth_min, cfg.building_depth_max);
            const double setback = uniform(0.0, cfg.setback_max);
            const double height = uniform(cfg.height_min, cfg.height_max);
            const bool chamfered = uniform(0.0, 1.0) < cfg.chamfer_probability;
            const int corner = chamfered ? (uniform(0.0, 1.0) < 0.5 ? 0 : 1) : -1;
            const double chamfer = 0.25 * std::min(len, depth);

            const double near = half_width + setback;
            const double far = near + depth;
            const double y0 = side > 0 ? near : -far;
            const double y1 = side > 0 ? far : -near;
            auto ring = footprint_ring(x, x + len, y0, y1, side > 0, corner, chamfer);
            for (auto& p : ring)
                p = to_world(p);
            placed.push_back({x, side, Building{ConvexPolygon(std::move(ring)), height}});
            x += len + uniform(cfg.gap_min, cfg.gap_max);
        }
    }
    std::stable_sort(placed.begin(), placed.end(), [](const Placed& a, const Placed& b) { return a.x0 < b.x0; });
    if (cfg.building_count >= 0 && placed.size() > static_cast<std::size_t>(cfg.building_count))
        placed.erase(placed.begin() + cfg.building_count, placed.end());

    std::vector<Building> buildings;
    for (auto& p : placed)
        buildings.push_back(std::move(p.b));

    std::vector<Point2> training, target;
    for (int k = 0; k < total_epochs; ++k)
    {
        const Point2 p = to_world({end_margin + k * cfg.speed, 0.0});
        (k < cfg.training_epochs ? training : target).push_back(p);
    }

    const double x_first = end_margin + cfg.training_epochs * cfg.speed;
    const double x_last = end_margin + (total_epochs - 1) * cfg.speed;
    const double half_along = 0.5 * (x_last - x_first) + cfg.aoi_margin_along;
    const double half_cross = half_width + cfg.aoi_margin_cross;
    const ConvexPolygon bounds = ConvexPolygon::oriented_box(to_world({0.5 * (x_first + x_last), 0.0}), u,
                                                             std::max(half_along, 0.5), half_cross);

    std::vector<ConvexPolygon> footprints;
    for (const auto& b : buildings)
        footprints.push_back(b.footprint);
    RegionSet aoi = geom::difference(RegionSet(bounds), geom::union_of(footprints));

    // sky: distinct PRNs, elevations kept above the mask for the whole drive
    std::vector<int> prns(32);
    for (int i = 0; i < 32; ++i)
        prns[static_cast<std::size_t>(i)] = i + 1;
    std::shuffle(prns.begin(), prns.end(), rng);
    prns.resize(static_cast<std::size_t>(std::min(cfg.constellation_size, 32)));
    std::sort(prns.begin(), prns.end());
    const double drift = cfg.elevation_rate_max * total_epochs;
    std::vector<SkyTrack> sky;
    for (int prn : prns)
    {
        SkyTrack t;
        t.sat_id = prn;
        t.azimuth0_deg = uniform(0.0, 360.0);
        t.elevation0_deg = uniform(cfg.elevation_mask_deg + drift + 1.0, cfg.max_initial_elevation_deg);
        t.azimuth_rate = uniform(-cfg.azimuth_rate_max, cfg.azimuth_rate_max);
        t.elevation_rate = uniform(-cfg.elevation_rate_max, cfg.elevation_rate_max);
        sky.push_back(t);
    }

    return Scene{
        .config = cfg,
        .buildings = std::move(buildings),
        .street_direction = u,
        .bounds = bounds,
        .initial_aoi = std::move(aoi),
        .trajectory = std::move(target),
        .training_trajectory = std::move(training),
        .sky = std::move(sky),
        .clock_bias0 = 0.0,
    };
}

bool los_ray_test(const Building& building, const Eigen::Vector3d& receiver, const Eigen::Vector3d& direction)
{
    double t_lo = 0.0;
    double t_hi = std::numeric_limits<double>::infinity();

    // vertical slab z in [0, height]
    const double z0 = receiver.z();
    const double dz = direction.z();
    if (dz == 0.0)
    {
        if (z0 < 0.0 || z0 > building.height)
            return false;
    }
    else
    {
        double a = (0.0 - z0) / dz;
        double b = (building.height - z0) / dz;
        if (a > b)
            std::swap(a, b);
        t_lo = std::max(t_lo, a);
        t_hi = std::min(t_hi, b);
    }
    if (t_lo > t_hi)
        return false;

    // horizontal Cyrus-Beck clip against the footprint halfplanes
    const Point2 r(receiver.x(), receiver.y());
    const Point2 d(direction.x(), direction.y());
    for (const auto& h : building.footprint.halfplanes())
    {
        const double nd = h.normal.dot(d);
        const double slack = h.offset - h.normal.dot(r);
        if (nd == 0.0)
        {
            if (slack < 0.0)
                return false;
            continue;
        }
        const double t = slack / nd;
        if (nd > 0.0)
            t_hi = std::min(t_hi, t);
        else
            t_lo = std::max(t_lo, t);
        if (t_lo > t_hi)
            return false;
    }
    return true;
}

bool ray_blocked(const Scene& scene, const Eigen::Vector3d& receiver, const Eigen::Vector3d& direction)
{
    return std::any_of(scene.buildings.begin(), scene.buildings.end(),
                       [&](const Building& b) { return los_ray_test(b, receiver, direction); });
}

std::vector<SatelliteView> sky_at(const Scene& scene, int epoch_index)
{
    std::vector<SatelliteView> out;
    for (const auto& t : scene.sky)
    {
        const double el = t.elevation0_deg + t.elevation_rate * epoch_index;
        if (el < scene.config.elevation_mask_deg || el > 90.0)
            continue;
        double az = std::fmod(t.azimuth0_deg + t.azimuth_rate * epoch_index, 360.0);
        if (az < 0.0)
            az += 360.0;
        out.push_back({t.sat_id, az, el, orbit_range(el)});
    }
    return out;
}

EpochObservation observe_epoch(const Scene& scene, int epoch_index)
{
    const auto n_train = static_cast<int>(scene.training_trajectory.size());
    if (epoch_index < 0 || epoch_index >= scene.epoch_count())
        throw std::out_of_range("observe_epoch: epoch index outside the trajectory.");

    EpochObservation e;
    e.epoch_index = epoch_index;
    e.target_road = epoch_index >= n_train;
    e.true_position = e.target_road ? scene.trajectory[static_cast<std::size_t>(epoch_index - n_train)]
                                    : scene.training_trajectory[static_cast<std::size_t>(epoch_index)];
    e.antenna_height = scene.config.antenna_height;
    e.true_clock_bias = scene.clock_bias0;
    const Eigen::Vector3d rx = e.receiver();
    for (const auto& s : sky_at(scene, epoch_index))
    {
        RawObservation o;
        o.sat_id = s.sat_id;
        o.azimuth_deg = s.azimuth_deg;
        o.elevation_deg = s.elevation_deg;
        o.true_range = s.true_range;
        o.satellite_position = rx + s.true_range * sky_direction(s.azimuth_deg, s.elevation_deg);
        e.observations.push_back(o);
    }
    return e;
}

EpochObservation label_epoch(const Scene& scene, EpochObservation epoch)
{
    const Eigen::Vector3d rx = epoch.receiver();
    for (auto& o : epoch.observations)
    {
        const bool blocked = ray_blocked(scene, rx, sky_direction(o.azimuth_deg, o.elevation_deg));
        o.truth = blocked ? Label::nlos : Label::los;
    }
    return epoch;
}

EpochObservation apply_tracking(EpochObservation epoch, const NoiseConfig& noise, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const std::size_t n = epoch.observations.size();
    std::vector<bool> keep(n);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        const auto& o = epoch.observations[i];
        const double p = o.truth == Label::nlos ? noise.nlos_track_probability : noise.los_track_probability;
        keep[i] = u01(rng) < p;
        kept += keep[i] ? 1 : 0;
    }

    // re-admit by descending elevation until the minimum is met
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return epoch.observations[a].elevation_deg > epoch.observations[b].elevation_deg;
    });
    for (std::size_t i : order)
    {
        if (kept >= static_cast<std::size_t>(noise.min_tracked))
            break;
        if (!keep[i])
        {
            keep[i] = true;
            ++kept;
        }
    }

    std::vector<RawObservation> out;
    for (std::size_t i = 0; i < n; ++i)
    {
        if (keep[i])
            out.push_back(epoch.observations[i]);
    }
    epoch.observations = std::move(out);
    return epoch;
}

EpochObservation synthesize_measurements(const Scene& /*scene*/, EpochObservation epoch, const NoiseConfig& noise,
                                         std::mt19937_64& rng)
{
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> delay(noise.nlos_delay_min, noise.nlos_delay_max);
    for (auto& o : epoch.observations)
    {
        if (!o.truth)
            throw std::invalid_argument("synthesize_measurements: observation without a truth label.");
        const bool nlos = *o.truth == Label::nlos;
        // fixed draw order keeps noise-free and noisy runs on the same stream
        const double g_range = n01(rng);
        const double excess = delay(rng);
        const double g_cn0 = n01(rng);

        double pr = o.true_range + epoch.true_clock_bias;
        pr += nlos ? excess + noise.sigma_nlos * g_range : noise.sigma_los * g_range;
        o.pseudorange = pr;

        double cn0 = noise.cn0_base + noise.cn0_slope * std::sin(o.elevation_deg * deg);
        if (nlos)
            cn0 -= noise.nlos_loss;
        cn0 += noise.sigma_cn0 * g_cn0;
        o.cn0 = std::clamp(cn0, noise.cn0_min, noise.cn0_max);
    }
    return epoch;
}

std::vector<EpochObservation> simulate_epochs(const Scene& scene, const NoiseConfig& noise)
{
    validate(noise);
    std::mt19937_64 clock_rng(mix_seed(scene.seed(), stream_epoch, 0));
    const double bias0 = std::uniform_real_distribution<double>(-noise.clock_bias_spread,
                                                                noise.clock_bias_spread)(clock_rng);
    std::vector<EpochObservation> out;
    out.reserve(static_cast<std::size_t>(scene.epoch_count()));
    for (int k = 0; k < scene.epoch_count(); ++k)
    {
        std::mt19937_64 rng(mix_seed(scene.seed(), stream_epoch, static_cast<std::uint64_t>(k) + 1));
        EpochObservation e = observe_epoch(scene, k);
        e.true_clock_bias = bias0 + noise.clock_drift * k;
        e = label_epoch(scene, std::move(e));
        e = apply_tracking(std::move(e), noise, rng);
        e = synthesize_measurements(scene, std::move(e), noise, rng);
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace zsm::scene
