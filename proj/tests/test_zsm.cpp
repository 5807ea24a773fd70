#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "scene_support.hpp"
#include "zsm/zsm.hpp"

using namespace zsm;
using namespace zsm::shadow;
using geom::ConvexPolygon;
using geom::Point2;
using geom::RegionSet;

namespace
{

scene::Building box_building(Point2 lo, Point2 hi, double h)
{
    return {ConvexPolygon::box(lo, hi), h};
}

select::SelectionDecision chosen(SatId id, Label l)
{
    select::SelectionDecision d;
    d.sat_id = id;
    d.labels = {l, l, l};
    d.confidences = {1.0, 1.0, 1.0};
    d.selected = true;
    d.agreed_label = l;
    return d;
}

select::SelectionDecision rejected(SatId id)
{
    select::SelectionDecision d;
    d.sat_id = id;
    d.rejection = select::Rejection::disagreement;
    return d;
}

scene::SatelliteView view(SatId id, double az, double el)
{
    return {id, az, el, 2.0e7};
}

// Street y in [-15, 15], x in [0, 100]. North block sheds its shadow over the north half
// for a satellite due north at 45 deg; the south block covers the whole street for one due south.
scene::Scene half_street()
{
    return testing::manual_scene({box_building({-50, 15}, {150, 35}, 16.8), box_building({-50, -35}, {150, -15}, 31.8)},
                                 {}, {{50, 0}}, ConvexPolygon::box({0, -15}, {100, 15}));
}

Aoi initial_of(const scene::Scene& s) { return Aoi{s.initial_aoi, {}, false}; }

} // namespace

TEST_CASE("shadow length of a box at 45 degrees")
{
    const auto b = box_building({-10, 0}, {10, 20}, 40.0);
    const auto bounds = ConvexPolygon::box({-100, -100}, {100, 100});
    for (auto method : {ShadowMethod::zonotope, ShadowMethod::polygon})
    {
        const auto s = building_shadow(b, bounds, 0.0, 45.0, 1.8, method);
        REQUIRE(s);
        CHECK(std::abs(s->bounds().lo.y() - (-38.2)) < 0.01);
        CHECK(std::abs(s->bounds().hi.y() - 20.0) < 1e-6);
        CHECK(std::abs(s->area() - 20.0 * 58.2) < 1e-4);
    }
    const Eigen::Vector3d dir = scene::sky_direction(0.0, 45.0);
    CHECK(testing::ray_march_depth(b, {0, -38.1, 1.8}, dir, 0.01) > 0.0);
    CHECK(testing::ray_march_depth(b, {0, -38.3, 1.8}, dir, 0.01) < 0.0);
}

TEST_CASE("zenith shadow is the footprint only")
{
    const auto s = scene::generate_scene(scene::SceneConfig{});
    const auto sh = compute_shadow(s, view(1, 30.0, 90.0), s.config.antenna_height);
    CHECK(geom::intersection(s.initial_aoi, sh.region).area() < geom::eps_area);
}

TEST_CASE("elevation preconditions and grazing")
{
    const auto s = half_street();
    CHECK_THROWS_AS(compute_shadow(s, view(1, 0.0, 0.0), 1.8), std::invalid_argument);
    CHECK_THROWS_AS(compute_shadow(s, view(1, 0.0, -3.0), 1.8), std::invalid_argument);
    const auto g = compute_shadow(s, view(1, 0.0, 0.005), 1.8);
    CHECK(g.grazing);
    CHECK(g.region.area() == doctest::Approx(3000.0).epsilon(1e-9));
    CHECK_FALSE(compute_shadow(s, view(1, 0.0, 30.0), 1.8).grazing);
}

TEST_CASE("buildings below the antenna cast no shadow")
{
    const auto bounds = ConvexPolygon::box({-50, -50}, {50, 50});
    CHECK_FALSE(building_shadow(box_building({0, 0}, {5, 5}, 1.0), bounds, 10.0, 20.0, 1.8));
}

TEST_CASE("shadow membership agrees with the ray oracle on a grid")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> az(0.0, 360.0), el(15.0, 75.0);
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
    {
        scene::SceneConfig cfg;
        cfg.seed = seed;
        const auto s = scene::generate_scene(cfg);
        const double h = cfg.antenna_height;
        const auto sat = view(1, az(rng), el(rng));
        const auto sh = compute_shadow(s, sat, h);
        std::vector<ConvexPolygon> pieces;
        for (const auto& b : s.buildings)
        {
            if (auto p = building_shadow(b, s.bounds, sat.azimuth_deg, sat.elevation_deg, h, ShadowMethod::polygon))
                pieces.push_back(*p);
        }
        const Eigen::Vector3d dir = scene::sky_direction(sat.azimuth_deg, sat.elevation_deg);
        const auto bb = s.bounds.bounds();
        long checked = 0, agree = 0;
        for (int i = 0; i < 100; ++i)
        {
            for (int j = 0; j < 100; ++j)
            {
                const Point2 p(bb.lo.x() + (bb.hi.x() - bb.lo.x()) * (i + 0.5) / 100,
                               bb.lo.y() + (bb.hi.y() - bb.lo.y()) * (j + 0.5) / 100);
                if (!s.bounds.contains(p, 0.0))
                    continue;
                const bool band = std::any_of(pieces.begin(), pieces.end(),
                                               [&](const auto& q) { return q.boundary_distance(p) < 0.1; });
                if (band)
                    continue;
                ++checked;
                agree += sh.region.contains(p) == scene::ray_blocked(s, {p.x(), p.y(), h}, dir) ? 1 : 0;
            }
        }
        CAPTURE(seed);
        REQUIRE(checked > 1000);
        CHECK(static_cast<double>(agree) >= 0.999 * static_cast<double>(checked));
    }
}

TEST_CASE("zonotope and hull constructions coincide")
{
    const auto s = scene::generate_scene(scene::SceneConfig{});
    for (int k : {600, 650, 700, 745})
    {
        for (const auto& sat : scene::sky_at(s, k))
        {
            const auto a = compute_shadow(s, sat, 1.8, ShadowMethod::zonotope);
            const auto b = compute_shadow(s, sat, 1.8, ShadowMethod::polygon);
            CHECK(std::abs(a.region.area() - b.region.area()) < 1e-6 * std::max(1.0, b.region.area()));
            CHECK(geom::difference(a.region, b.region).area() < 1e-4);
            CHECK(geom::max_overlap_area(a.region) < geom::eps_area);
            for (const auto& part : a.region.parts())
            {
                for (const auto& v : part.vertices())
                    CHECK(s.bounds.contains(v, 1e-6));
            }
        }
    }
}

TEST_CASE("refinement on a constructed street")
{
    const auto s = half_street();
    const auto shadows = compute_shadows(s, std::vector{view(1, 0.0, 45.0), view(2, 180.0, 45.0), view(3, 90.0, 60.0)},
                                         1.8);
    const Aoi init = initial_of(s);
    REQUIRE(init.region.area() == doctest::Approx(3000.0));

    SUBCASE("no selected satellites leaves the AOI untouched")
    {
        const std::vector decisions{rejected(1), rejected(2)};
        const Aoi out = refine_aoi(init, decisions, shadows);
        CHECK(out.no_refinement);
        CHECK(out.log.empty());
        CHECK(out.region.size() == init.region.size());
        CHECK(out.region.area() == init.region.area());
    }

    SUBCASE("NLOS satellite halves the street and keeps the truth")
    {
        const std::vector decisions{chosen(1, Label::nlos)};
        const Aoi out = refine_aoi(init, decisions, shadows);
        CHECK(std::abs(out.region.area() - 1500.0) < 1e-6);
        const auto o = score_epoch(out, {50, 5}, {1, 0});
        CHECK(o.success);
        CHECK(o.contains_truth);
        CHECK(*o.along_bound == doctest::Approx(100.0));
        CHECK(*o.cross_bound == doctest::Approx(15.0));
        REQUIRE(out.log.size() == 1);
        CHECK(out.log[0].op == Operation::intersect);
    }

    SUBCASE("a LOS satellite mislabeled NLOS drops the truth")
    {
        const Point2 truth(50, -5);
        REQUIRE_FALSE(scene::ray_blocked(s, {truth.x(), truth.y(), 1.8}, scene::sky_direction(0.0, 45.0)));
        const std::vector decisions{chosen(1, Label::nlos)};
        const Aoi out = refine_aoi(init, decisions, shadows);
        const auto o = score_epoch(out, truth, {1, 0});
        CHECK(o.success);
        CHECK_FALSE(o.contains_truth);
    }

    SUBCASE("an empty region stops refinement and logs the rest as skipped")
    {
        const std::vector decisions{chosen(3, Label::los), chosen(2, Label::los), chosen(1, Label::nlos)};
        const Aoi out = refine_aoi(init, decisions, shadows);
        REQUIRE(out.log.size() == 3);
        CHECK(out.log[0].sat_id == 1);
        CHECK(out.log[1].sat_id == 2);
        CHECK(out.log[1].area == 0.0);
        CHECK(out.log[2].op == Operation::skipped);
        const auto o = score_epoch(out, {50, 5}, {1, 0});
        CHECK_FALSE(o.success);
        CHECK_FALSE(o.contains_truth);
        CHECK_FALSE(o.along_bound);
        CHECK_FALSE(o.cross_bound);
    }

    SUBCASE("a selected satellite without a shadow is rejected")
    {
        const std::vector decisions{chosen(9, Label::los)};
        CHECK_THROWS_AS(refine_aoi(init, decisions, shadows), std::invalid_argument);
    }

    SUBCASE("full street bounds")
    {
        const auto o = score_epoch(init, {50, 0}, {1, 0});
        CHECK(o.contains_truth);
        CHECK(*o.along_bound == doctest::Approx(100.0));
        CHECK(*o.cross_bound == doctest::Approx(30.0));
        CHECK_THROWS_AS(score_epoch(init, {50, 0}, {2, 0}), std::invalid_argument);
    }
}

TEST_CASE("usage counts and boundary flag")
{
    const auto s = half_street();
    const auto shadows = compute_shadows(s, std::vector{view(1, 0.0, 45.0), view(2, 90.0, 60.0)}, 1.8);
    const std::vector decisions{chosen(1, Label::nlos), chosen(2, Label::los)};
    const std::vector truth{Label::los, Label::los};
    PositioningOutcome o;
    record_usage(o, decisions, truth, shadows, {50, -5});
    CHECK(o.satellites_used == 2);
    CHECK(o.misclassified_used == 1);
    CHECK_FALSE(o.boundary_ambiguous);
    record_usage(o, decisions, truth, shadows, {50, 0});
    CHECK(o.boundary_ambiguous);
}

TEST_CASE("refinement invariants on generated scenes")
{
    std::mt19937_64 rng(5);
    for (std::uint64_t seed = 1; seed <= 3; ++seed)
    {
        scene::SceneConfig cfg;
        cfg.seed = seed;
        const auto s = scene::generate_scene(cfg);
        const auto epochs = scene::simulate_epochs(s, scene::NoiseConfig{});
        const Aoi init = initial_of(s);
        for (int k = cfg.training_epochs; k < s.epoch_count(); k += 7)
        {
            const auto& ep = epochs[static_cast<std::size_t>(k)];
            std::vector<scene::SatelliteView> sats;
            std::vector<select::SelectionDecision> truth_decisions, random_decisions;
            for (const auto& ob : ep.observations)
            {
                sats.push_back(view(ob.sat_id, ob.azimuth_deg, ob.elevation_deg));
                truth_decisions.push_back(chosen(ob.sat_id, *ob.truth));
                random_decisions.push_back(std::bernoulli_distribution(0.5)(rng) ? chosen(ob.sat_id, Label::los)
                                                                                  : chosen(ob.sat_id, Label::nlos));
            }
            const auto shadows = compute_shadows(s, sats, ep.antenna_height);
            CAPTURE(seed);
            CAPTURE(k);

            // ground-truth soundness
            const Aoi sound = refine_aoi(init, truth_decisions, shadows);
            auto o = score_epoch(sound, ep.true_position, s.street_direction);
            std::vector<Label> labels;
            for (const auto& ob : ep.observations)
                labels.push_back(*ob.truth);
            record_usage(o, truth_decisions, labels, shadows, ep.true_position);
            CHECK(o.misclassified_used == 0);
            if (!o.boundary_ambiguous)
                CHECK(o.contains_truth);

            // monotone log
            for (const auto* decisions : {&truth_decisions, &random_decisions})
            {
                const Aoi out = refine_aoi(init, *decisions, shadows);
                double prev = init.region.area();
                for (const auto& step : out.log)
                {
                    CHECK(step.area <= prev + geom::eps_area);
                    prev = step.area;
                }
            }

            // order independence
            auto shuffled = random_decisions;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            const double a_full = refine_aoi(init, random_decisions, shadows).region.area();
            CHECK(std::abs(refine_aoi(init, shuffled, shadows).region.area() - a_full) < geom::eps_area);

            // removing a decision never shrinks the result
            for (std::size_t drop = 0; drop < random_decisions.size(); ++drop)
            {
                auto fewer = random_decisions;
                fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(drop));
                CHECK(refine_aoi(init, fewer, shadows).region.area() >= a_full - geom::eps_area);
            }
        }
    }
}
