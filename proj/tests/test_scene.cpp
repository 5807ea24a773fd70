#include <doctest.h>

#include <cmath>
#include <random>

#include "scene_support.hpp"
#include "test_support.hpp"
#include "zsm/errors.hpp"
#include "zsm/scene_io.hpp"

using namespace zsm;
using namespace zsm::scene;

namespace
{

double nlos_fraction(const Scene& s)
{
    long n = 0, nlos = 0;
    for (int k = 0; k < s.epoch_count(); ++k)
    {
        for (const auto& o : label_epoch(s, observe_epoch(s, k)).observations)
        {
            ++n;
            nlos += *o.truth == Label::nlos ? 1 : 0;
        }
    }
    return static_cast<double>(nlos) / static_cast<double>(n);
}

Scene scaled_heights(Scene s, double factor)
{
    for (auto& b : s.buildings)
        b.height *= factor;
    return s;
}

EpochObservation single_observation_epoch(double elevation, Label truth)
{
    EpochObservation e;
    e.antenna_height = 1.8;
    e.true_clock_bias = 1234.5;
    RawObservation o;
    o.sat_id = 7;
    o.elevation_deg = elevation;
    o.azimuth_deg = 30.0;
    o.true_range = orbit_range(elevation);
    o.truth = truth;
    e.observations.push_back(o);
    return e;
}

} // namespace

TEST_CASE("config validation")
{
    SceneConfig c;
    c.street_width = 4.0;
    c.min_clearance = 2.0;
    CHECK_THROWS_AS(generate_scene(c), ConfigError);
    c = SceneConfig{};
    c.height_min = 90.0;
    CHECK_THROWS_AS(generate_scene(c), ConfigError);
    NoiseConfig n;
    n.nlos_delay_min = 60.0;
    CHECK_THROWS_AS(validate(n), ConfigError);
}

TEST_CASE("default scene layout")
{
    const Scene s = generate_scene(SceneConfig{});
    CHECK(s.trajectory.size() == 146);
    CHECK(s.training_trajectory.size() == 600);
    CHECK(std::abs(s.street_direction.norm() - 1.0) < 1e-12);
    CHECK_FALSE(s.buildings.empty());
    for (const auto& b : s.buildings)
        CHECK(b.height > 0.0);
    for (std::size_t k = 1; k < s.trajectory.size(); ++k)
        CHECK((s.trajectory[k] - s.trajectory[k - 1]).norm() == doctest::Approx(1.0));
    for (const auto& p : s.trajectory)
    {
        CHECK(s.initial_aoi.contains(p));
        for (const auto& b : s.buildings)
            CHECK_FALSE(b.footprint.contains(p));
    }
}

TEST_CASE("generation is reproducible")
{
    SceneConfig c;
    c.seed = 42;
    const Scene a = generate_scene(c);
    const Scene b = generate_scene(c);
    CHECK(to_json(a) == to_json(b));
    c.seed = 43;
    CHECK(to_json(generate_scene(c)) != to_json(a));

    const auto ea = simulate_epochs(a, NoiseConfig{});
    const auto eb = simulate_epochs(b, NoiseConfig{});
    REQUIRE(ea.size() == eb.size());
    for (std::size_t k = 0; k < ea.size(); ++k)
        CHECK(to_json_line(ea[k]) == to_json_line(eb[k]));
}

TEST_CASE("json round trip")
{
    const Scene s = generate_scene(SceneConfig{});
    const std::string text = to_json(s);
    CHECK(to_json(scene_from_json(text)) == text);

    const auto epochs = simulate_epochs(s, NoiseConfig{});
    for (int k : {0, 17, 700})
    {
        const std::string line = to_json_line(epochs[static_cast<std::size_t>(k)]);
        CHECK(to_json_line(epoch_from_json_line(line)) == line);
    }

    CHECK_THROWS_AS(scene_from_json("{"), FormatError);
    CHECK_THROWS_AS(parse_label("los"), FormatError);
    CHECK_THROWS_AS(scene_config_from_json(R"({"street_widht": 20})"), ConfigError);
    CHECK(scene_config_from_json(R"({"street_width": 20})").street_width == 20.0);
}

TEST_CASE("open sky labels everything LOS")
{
    SceneConfig c;
    c.building_count = 0;
    const Scene s = generate_scene(c);
    CHECK(s.buildings.empty());
    for (const auto& e : simulate_epochs(s, NoiseConfig{}))
    {
        CHECK(e.observations.size() >= 4);
        for (const auto& o : e.observations)
            CHECK(*o.truth == Label::los);
    }
}

TEST_CASE("los_ray_test hand cases")
{
    // 50 m wall east of the receiver
    const Building wall{geom::ConvexPolygon::box({5, -50}, {10, 50}), 50.0};
    const Eigen::Vector3d rx(0, 0, 1.8);
    CHECK(los_ray_test(wall, rx, sky_direction(90.0, 10.0)));
    CHECK_FALSE(los_ray_test(wall, rx, sky_direction(90.0, 89.9)));
    CHECK_FALSE(los_ray_test(wall, rx, sky_direction(270.0, 10.0))); // pointing away

    const Scene s = generate_scene(SceneConfig{});
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> az(0.0, 360.0);
    for (const auto& p : s.trajectory)
        CHECK_FALSE(ray_blocked(s, {p.x(), p.y(), 1.8}, sky_direction(az(rng), 89.9)));
}

TEST_CASE("los_ray_test agrees with a ray-march oracle")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pos(-40.0, 40.0), z(0.0, 30.0), az(0.0, 360.0), el(0.5, 89.5),
        h(5.0, 60.0);
    long decided = 0, agree = 0, banded = 0;
    const int rays = 100000;
    Building b{geom::ConvexPolygon::box({0, 0}, {1, 1}), 1.0};
    for (int k = 0; k < rays; ++k)
    {
        if (k % 100 == 0)
            b = Building{testing::random_convex_polygon(rng, {0, 0}, 20.0), h(rng)};
        const Eigen::Vector3d rx(pos(rng), pos(rng), z(rng));
        const Eigen::Vector3d dir = sky_direction(az(rng), el(rng));
        const double depth = testing::ray_march_depth(b, rx, dir);
        if (depth > -0.05 && depth <= 0.0)
        {
            ++banded;
            continue;
        }
        ++decided;
        agree += los_ray_test(b, rx, dir) == (depth > 0.0) ? 1 : 0;
    }
    CHECK(agree == decided);
    CHECK(banded < rays / 100);
}

TEST_CASE("receiver ringed by tall buildings sees only NLOS at 15 degrees")
{
    std::vector<Building> ring{
        {geom::ConvexPolygon::box({-30, 10}, {30, 30}), 100.0},
        {geom::ConvexPolygon::box({-30, -30}, {30, -10}), 100.0},
        {geom::ConvexPolygon::box({10, -10}, {30, 10}), 100.0},
        {geom::ConvexPolygon::box({-30, -10}, {-10, 10}), 100.0},
    };
    std::vector<SkyTrack> sky;
    for (int i = 0; i < 12; ++i)
        sky.push_back({i + 1, 30.0 * i, 15.0, 0.0, 0.0});
    const Scene s = testing::manual_scene(ring, sky, {{0, 0}}, geom::ConvexPolygon::box({-40, -40}, {40, 40}));
    const auto e = label_epoch(s, observe_epoch(s, 0));
    CHECK(e.observations.size() == 12);
    for (const auto& o : e.observations)
        CHECK(*o.truth == Label::nlos);
}

TEST_CASE("default class balance and visibility")
{
    long n = 0, nlos = 0, epochs = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
    {
        SceneConfig c;
        c.seed = seed;
        const Scene s = generate_scene(c);
        for (const auto& e : simulate_epochs(s, NoiseConfig{}))
        {
            CHECK(e.observations.size() >= 5);
            ++epochs;
            for (const auto& o : e.observations)
            {
                ++n;
                nlos += *o.truth == Label::nlos ? 1 : 0;
                CHECK(o.cn0 >= 10.0);
                CHECK(o.cn0 <= 55.0);
                CHECK(o.pseudorange > 0.0);
            }
        }
    }
    const double rate = static_cast<double>(nlos) / n;
    const double visible = static_cast<double>(n) / epochs;
    MESSAGE("pooled NLOS rate " << rate << ", satellites per epoch " << visible);
    CHECK(rate >= 0.10);
    CHECK(rate <= 0.25);
    CHECK(visible >= 5.5);
    CHECK(visible <= 8.0);
}

TEST_CASE("noise-free synthesis is exact")
{
    SceneConfig c;
    c.building_count = 0;
    const Scene s = generate_scene(c);
    for (const auto& e : simulate_epochs(s, NoiseConfig::noise_free()))
    {
        for (const auto& o : e.observations)
        {
            CHECK(o.pseudorange == o.true_range + e.true_clock_bias);
            CHECK((o.satellite_position - e.receiver()).norm() == doctest::Approx(o.true_range).epsilon(1e-12));
        }
    }
}

TEST_CASE("measurement noise statistics")
{
    const NoiseConfig noise;
    const int draws = 10000;
    std::mt19937_64 rng(5);

    double sum = 0.0, cn0_nlos = 0.0;
    for (int i = 0; i < draws; ++i)
    {
        const auto e = synthesize_measurements(Scene{testing::manual_scene({}, {}, {{0, 0}},
                                                                           geom::ConvexPolygon::box({-1, -1}, {1, 1}))},
                                               single_observation_epoch(60.0, Label::nlos), noise, rng);
        const auto& o = e.observations.front();
        sum += o.pseudorange - o.true_range - e.true_clock_bias;
        cn0_nlos += o.cn0;
    }
    const double span = noise.nlos_delay_max - noise.nlos_delay_min;
    const double sd = std::sqrt(span * span / 12.0 + noise.sigma_nlos * noise.sigma_nlos);
    CHECK(std::abs(sum / draws - 0.5 * (noise.nlos_delay_min + noise.nlos_delay_max)) < 3.0 * sd / std::sqrt(draws));

    double cn0_los = 0.0;
    const Scene empty = testing::manual_scene({}, {}, {{0, 0}}, geom::ConvexPolygon::box({-1, -1}, {1, 1}));
    for (int i = 0; i < draws; ++i)
        cn0_los += synthesize_measurements(empty, single_observation_epoch(60.0, Label::los), noise, rng)
                       .observations.front()
                       .cn0;
    const double diff = (cn0_los - cn0_nlos) / draws;
    const double se = noise.sigma_cn0 * std::sqrt(2.0 / draws);
    CHECK(std::abs(diff - noise.nlos_loss) < 3.0 * se);

    RawObservation unlabeled;
    EpochObservation bad;
    bad.observations.push_back(unlabeled);
    CHECK_THROWS_AS(synthesize_measurements(empty, bad, noise, rng), std::invalid_argument);
}

TEST_CASE("occlusion is monotone in building height")
{
    for (std::uint64_t seed = 1; seed <= 3; ++seed)
    {
        SceneConfig c;
        c.seed = seed;
        c.training_epochs = 100;
        const Scene s = generate_scene(c);
        const Scene taller = scaled_heights(s, 1.5);
        for (int k = 0; k < s.epoch_count(); k += 3)
        {
            const auto a = label_epoch(s, observe_epoch(s, k));
            const auto b = label_epoch(taller, observe_epoch(taller, k));
            for (std::size_t i = 0; i < a.observations.size(); ++i)
            {
                if (*a.observations[i].truth == Label::nlos)
                    CHECK(*b.observations[i].truth == Label::nlos);
            }
        }
        CHECK(nlos_fraction(scaled_heights(s, 2.0)) >= nlos_fraction(s));
    }
}
