#include <doctest.h>

#include <cmath>
#include <random>

#include "zsm/errors.hpp"
#include "zsm/features.hpp"

using namespace zsm;
using namespace zsm::features;

namespace
{

struct Simulated
{
    scene::Scene scene;
    std::vector<scene::EpochObservation> epochs;
};

const Simulated& default_run(bool noise_free)
{
    static const Simulated noisy = [] {
        auto s = scene::generate_scene(scene::SceneConfig{});
        auto e = scene::simulate_epochs(s, scene::NoiseConfig{});
        return Simulated{std::move(s), std::move(e)};
    }();
    static const Simulated clean = [] {
        auto s = scene::generate_scene(scene::SceneConfig{});
        auto e = scene::simulate_epochs(s, scene::NoiseConfig::noise_free());
        return Simulated{std::move(s), std::move(e)};
    }();
    return noise_free ? clean : noisy;
}

Eigen::Vector3d start_of(const scene::Scene& s)
{
    const auto m = s.street_midpoint();
    return {m.x(), m.y(), 0.0};
}

// Independent reference: Gauss-Newton on the normal equations with an LDLT solve.
Eigen::Vector4d reference_fix(const scene::EpochObservation& e, Eigen::Vector4d x)
{
    for (int it = 0; it < 50; ++it)
    {
        Eigen::Matrix4d N = Eigen::Matrix4d::Zero();
        Eigen::Vector4d g = Eigen::Vector4d::Zero();
        for (const auto& o : e.observations)
        {
            const Eigen::Vector3d d = o.satellite_position - x.head<3>();
            Eigen::Vector4d row;
            row << -d.normalized(), 1.0;
            const double r = o.pseudorange - d.norm() - x(3);
            N += row * row.transpose();
            g += row * r;
        }
        x += N.ldlt().solve(g);
    }
    return x;
}

} // namespace

TEST_CASE("noise-free epochs recover the truth")
{
    const auto& run = default_run(true);
    for (const auto& e : run.epochs)
    {
        const auto ls = solve_least_squares(e, start_of(run.scene));
        CHECK((ls.estimate.position - e.receiver()).norm() < 1e-6);
        CHECK(std::abs(ls.estimate.clock_bias - e.true_clock_bias) < 1e-6);
        CHECK(ls.residuals.cwiseAbs().maxCoeff() < 1e-6);
        for (Eigen::Index i = 0; i < ls.G.rows(); ++i)
            CHECK(std::abs(ls.G.row(i).head<3>().norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("residuals are orthogonal to G at convergence")
{
    const auto& run = default_run(false);
    double worst = 0.0;
    for (const auto& e : run.epochs)
    {
        const auto ls = solve_least_squares(e, start_of(run.scene));
        worst = std::max(worst, (ls.G.transpose() * ls.residuals).norm() / ls.pseudoranges.norm());
    }
    MESSAGE("worst |G^T delta| / |rho| = " << worst);
    CHECK(worst < 1e-6);
}

TEST_CASE("degenerate and non-converging inputs")
{
    auto e = default_run(true).epochs.front();
    e.observations.resize(3);
    CHECK_THROWS_AS(solve_least_squares(e, Eigen::Vector3d::Zero()), DegenerateGeometryError);

    auto full = default_run(false).epochs.front();
    LsOptions opt;
    opt.max_iterations = 1;
    opt.step_tolerance = 1e-30;
    try
    {
        solve_least_squares(full, start_of(default_run(false).scene), opt);
        FAIL("expected a convergence error");
    }
    catch (const LeastSquaresConvergenceError& err)
    {
        CHECK(err.step_norms().size() == 1);
    }

    // all satellites in one direction: rank-deficient
    auto same = full;
    for (auto& o : same.observations)
        o.satellite_position = same.observations.front().satellite_position;
    CHECK_THROWS_AS(solve_least_squares(same, Eigen::Vector3d::Zero()), DegenerateGeometryError);
}

TEST_CASE("a biased satellite carries the largest residual")
{
    // eight well-spread satellites, one with +30 m; reference residuals from (I - H) * 30 e_0 in numpy
    const double az[8] = {0, 45, 90, 135, 180, 225, 270, 315};
    const double el[8] = {30, 60, 35, 55, 40, 65, 25, 50};
    scene::EpochObservation e;
    e.antenna_height = 1.8;
    e.true_clock_bias = 500.0;
    for (int i = 0; i < 8; ++i)
    {
        scene::RawObservation o;
        o.sat_id = i + 1;
        o.true_range = scene::orbit_range(el[i]);
        o.satellite_position = e.receiver() + o.true_range * scene::sky_direction(az[i], el[i]);
        o.pseudorange = o.true_range + e.true_clock_bias + (i == 0 ? 30.0 : 0.0);
        e.observations.push_back(o);
    }
    const auto ls = solve_least_squares(e, Eigen::Vector3d::Zero());
    Eigen::VectorXd expect(8);
    expect << 12.667416, -5.154981, -7.701065, 2.843366, 4.788041, 5.011459, -6.22992, -6.224318;
    CHECK((ls.residuals - expect).cwiseAbs().maxCoeff() < 1e-4);
    Eigen::Index arg = -1;
    ls.residuals.cwiseAbs().maxCoeff(&arg);
    CHECK(arg == 0);
}

TEST_CASE("single-bias residuals follow the hat-matrix oracle")
{
    // delta = (I - H) b for a pure bias vector b; the largest |delta| need not be the biased one
    const auto& run = default_run(true);
    for (std::size_t k = 0; k < run.epochs.size(); k += 37)
    {
        const auto& e0 = run.epochs[k];
        for (std::size_t bad = 0; bad < e0.observations.size(); ++bad)
        {
            auto e = e0;
            e.observations[bad].pseudorange += 30.0;
            const auto ls = solve_least_squares(e, start_of(run.scene));
            const Eigen::Vector4d ref = reference_fix(e, Eigen::Vector4d::Zero());
            CHECK((ls.estimate.state() - ref).norm() < 1e-6);

            const Eigen::MatrixXd G = ls.G;
            const Eigen::MatrixXd H = G * (G.transpose() * G).inverse() * G.transpose();
            const Eigen::VectorXd oracle =
                30.0 * (Eigen::MatrixXd::Identity(G.rows(), G.rows()) - H).col(static_cast<Eigen::Index>(bad));
            CHECK((ls.residuals - oracle).cwiseAbs().maxCoeff() < 1e-4);
        }
    }
}

TEST_CASE("compute_residuals")
{
    GeometryMatrix G(4, 4);
    G << -0.6, 0.0, -0.8, 1, //
        0.0, -0.6, -0.8, 1,  //
        0.6, 0.0, -0.8, 1,   //
        0.0, 0.0, -1.0, 1;
    const ReceiverEstimate p{{1.0, 2.0, 3.0}, 4.0};
    // G p by hand: -0.6-2.4+4, -1.2-2.4+4, 0.6-2.4+4, -3+4
    const Eigen::Vector4d rho(1.0, 0.4, 2.2, 1.0);
    CHECK(compute_residuals(rho, G, p).norm() < 1e-12);

    const Eigen::Vector4d shifted = rho + Eigen::Vector4d(0.5, -0.25, 0.0, 1.0);
    const Eigen::Vector4d expect(0.5, -0.25, 0.0, 1.0);
    CHECK((compute_residuals(shifted, G, p) - expect).norm() < 1e-12);

    // solve the square system with a full-pivot LU: exact fit, zero residual
    const Eigen::Vector4d x = Eigen::Matrix4d(G).fullPivLu().solve(shifted);
    CHECK(compute_residuals(shifted, G, {x.head<3>(), x(3)}).norm() < 1e-12);

    CHECK_THROWS_AS(compute_residuals(Eigen::VectorXd::Zero(3), G, p), std::invalid_argument);
}

TEST_CASE("translation and common-bias invariance")
{
    const auto& run = default_run(false);
    const Eigen::Vector3d offset(250.0, -120.0, 7.0);
    const double beta = 1234.0;
    for (std::size_t k = 0; k < run.epochs.size(); k += 25)
    {
        const auto& e = run.epochs[k];
        const auto base = solve_least_squares(e, start_of(run.scene));

        auto moved = e;
        for (auto& o : moved.observations)
            o.satellite_position += offset;
        const auto m = solve_least_squares(moved, start_of(run.scene) + offset);
        CHECK((m.estimate.position - base.estimate.position - offset).norm() < 1e-6);
        CHECK(std::abs(m.estimate.clock_bias - base.estimate.clock_bias) < 1e-6);

        auto biased = e;
        for (auto& o : biased.observations)
            o.pseudorange += beta;
        const auto b = solve_least_squares(biased, start_of(run.scene));
        CHECK(std::abs(b.estimate.clock_bias - base.estimate.clock_bias - beta) < 1e-6);
        CHECK((b.estimate.position - base.estimate.position).norm() < 1e-6);
        CHECK((b.residuals - base.residuals).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("feature extraction")
{
    SUBCASE("open sky, noise free")
    {
        scene::SceneConfig c;
        c.building_count = 0;
        c.training_epochs = 10;
        const auto s = scene::generate_scene(c);
        for (const auto& e : scene::simulate_epochs(s, scene::NoiseConfig::noise_free()))
        {
            const auto samples = extract_features(e, start_of(s));
            REQUIRE(samples.size() == e.observations.size());
            for (std::size_t i = 0; i < samples.size(); ++i)
            {
                CHECK(std::abs(samples[i].features.residual_m) < 1e-6);
                CHECK(*samples[i].label == Label::los);
                if (i > 0)
                    CHECK(samples[i - 1].sat_id < samples[i].sat_id);
            }
        }
    }

    SUBCASE("NLOS residuals exceed LOS residuals on average")
    {
        const auto& run = default_run(false);
        const auto split = build_samples(run.scene, run.epochs);
        CHECK(split.skipped_epochs == 0);
        double sum[2] = {0, 0};
        long count[2] = {0, 0};
        for (const auto* part : {&split.train, &split.test})
        {
            for (const auto& s : *part)
            {
                CHECK(std::isfinite(s.features.residual_m));
                const int k = static_cast<int>(*s.label);
                sum[k] += s.features.residual_m;
                ++count[k];
            }
        }
        MESSAGE("samples: train " << split.train.size() << ", test " << split.test.size()
                                  << " (reference 12477 / 917)");
        CHECK(sum[1] / count[1] > sum[0] / count[0]);
    }
}

TEST_CASE("dataset csv")
{
    const auto& run = default_run(false);
    const auto split = build_samples(run.scene, run.epochs);
    const Dataset d = to_dataset(split.test);
    const std::string text = to_csv(d);
    CHECK(text.rfind("elevation_deg,cn0_dbhz,residual_m,label\n", 0) == 0);
    const Dataset back = dataset_from_csv(text);
    CHECK(back.X == d.X);
    CHECK(back.y == d.y);
    CHECK(to_csv(back) == text);

    CHECK_THROWS_AS(dataset_from_csv("a,b,c,d\n"), FormatError);
    CHECK_THROWS_AS(dataset_from_csv("elevation_deg,cn0_dbhz,residual_m,label\n1,2,x,LOS\n"), FormatError);
    CHECK_THROWS_AS(dataset_from_csv("elevation_deg,cn0_dbhz,residual_m,label\n1,2,3\n"), FormatError);
    CHECK_THROWS_AS(dataset_from_csv("elevation_deg,cn0_dbhz,residual_m,label\n1,2,3,MAYBE\n"), FormatError);

    auto unlabeled = split.test;
    unlabeled.front().label.reset();
    CHECK_THROWS_AS(to_dataset(unlabeled), std::invalid_argument);
}
