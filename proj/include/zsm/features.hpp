#pragma once

// Snapshot least-squares positioning and the per-satellite feature vectors
// (elevation, C/N0, pseudorange residual) fed to the classifiers.

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "zsm/scene.hpp"

namespace zsm::features
{

// Rows [-u_i^T, 1] with u_i the receiver-to-satellite unit vector; state is (x, y, z, clock).
using GeometryMatrix = Eigen::Matrix<double, Eigen::Dynamic, 4>;

struct ReceiverEstimate
{
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    double clock_bias = 0.0; // m

    Eigen::Vector4d state() const { return {position.x(), position.y(), position.z(), clock_bias}; }
};

struct LsOptions
{
    double step_tolerance = 1e-4; // m
    int max_iterations = 10;
    double max_condition = 1e12;  // of G^T G
};

struct LeastSquaresResult
{
    ReceiverEstimate estimate;
    Eigen::VectorXd residuals;    // delta = rho - G p, one per observation (observation order)
    GeometryMatrix G;             // at the final linearization point
    Eigen::VectorXd pseudoranges; // rho in the final linearized coordinates
    std::vector<double> step_norms;
};

// Gauss-Newton on pseudoranges from `initial_position` with zero clock.
// Throws DegenerateGeometryError (fewer than four satellites or ill-conditioned G^T G)
// and LeastSquaresConvergenceError.
LeastSquaresResult solve_least_squares(const scene::EpochObservation& epoch, const Eigen::Vector3d& initial_position,
                                       const LsOptions& options = {});

// delta = rho - G p. Throws std::invalid_argument on dimension mismatch.
Eigen::VectorXd compute_residuals(const Eigen::VectorXd& rho, const GeometryMatrix& G, const ReceiverEstimate& p);

struct FeatureVector
{
    double elevation_deg = 0.0;
    double cn0_dbhz = 0.0;
    double residual_m = 0.0;

    Eigen::Vector3d values() const { return {elevation_deg, cn0_dbhz, residual_m}; }
};

inline constexpr int feature_count = 3;

struct LabeledSample
{
    int epoch_index = 0;
    SatId sat_id = 0;
    FeatureVector features;
    std::optional<Label> label; // truth, when known
};

// One sample per observation, ordered by satellite id.
std::vector<LabeledSample> extract_features(const scene::EpochObservation& epoch,
                                            const Eigen::Vector3d& initial_position, const LsOptions& options = {});

struct Dataset
{
    Eigen::MatrixXd X; // n x 3
    std::vector<Label> y;

    std::size_t size() const { return y.size(); }
};

// Requires every sample to carry a label.
Dataset to_dataset(const std::vector<LabeledSample>& samples);

struct SplitSamples
{
    std::vector<LabeledSample> train; // off-target sections
    std::vector<LabeledSample> test;  // target road
    int skipped_epochs = 0;           // least squares failed
};

// Features for every epoch, split by the target-road flag. Initial LS guess is the street midpoint.
SplitSamples build_samples(const scene::Scene& scene, const std::vector<scene::EpochObservation>& epochs);

// CSV with header elevation_deg,cn0_dbhz,residual_m,label; row order is preserved.
std::string to_csv(const Dataset& d);
Dataset dataset_from_csv(const std::string& text);
void write_csv(const std::filesystem::path& path, const Dataset& d);
Dataset read_csv(const std::filesystem::path& path);

} // namespace zsm::features
