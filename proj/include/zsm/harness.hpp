#pragma once

// Experiment orchestration: scene -> epochs -> features -> three classifiers -> per-epoch
// selection, shadow refinement and scoring for each method, aggregated per seed and pooled.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zsm/features.hpp"
#include "zsm/ml.hpp"
#include "zsm/scene.hpp"
#include "zsm/select.hpp"
#include "zsm/zsm.hpp"

namespace zsm::harness
{

enum class Method
{
    rf,
    gbdt,
    svm,
    unanimous,           // agreement only
    unanimous_threshold, // agreement and confidence
    oracle               // truth labels for every satellite
};

std::string_view to_string(Method m);
// Throws ConfigError for an unknown name.
Method parse_method(std::string_view name);
bool is_single_model(Method m);

struct ExperimentConfig
{
    scene::SceneConfig scene;
    scene::NoiseConfig noise;
    ml::EnsembleConfig ml;
    double threshold = select::default_threshold;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<Method> methods{Method::rf, Method::gbdt, Method::svm, Method::unanimous, Method::unanimous_threshold};
    std::vector<int> figure_epochs{56}; // target-road epoch numbers drawn as scene maps
    shadow::ShadowMethod shadow_method = shadow::ShadowMethod::zonotope;
    int threads = 0; // 0 selects the hardware concurrency; ZSM_URBAN_THREADS caps either
};

// Throws ConfigError.
void validate(const ExperimentConfig& cfg);
std::string to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(std::string_view text);
ExperimentConfig read_experiment_config(const std::filesystem::path& path);

// Raw sums; rates are derived so that pooling is sample-weighted.
struct MethodReport
{
    Method method = Method::rf;
    std::optional<std::uint64_t> seed; // empty for pooled
    long epochs = 0;
    long satellites = 0;         // observations on the evaluated epochs
    long used = 0;               // satellites that entered refinement
    long misclassified = 0;      // among used
    long successes = 0;
    long containments = 0;
    long no_refinement = 0;
    long boundary_ambiguous = 0;
    double cross_sum = 0.0;      // over successful epochs
    double along_sum = 0.0;

    double accuracy() const;     // among used; 1 when nothing was used
    double misclassified_per_epoch() const;
    double used_per_epoch() const;
    double success_rate() const;
    double containment_rate() const;
    std::optional<double> mean_cross_bound() const;
    std::optional<double> mean_along_bound() const;

    MethodReport& operator+=(const MethodReport& o);
};

struct EpochRecord
{
    Method method = Method::rf;
    shadow::PositioningOutcome outcome;
};

struct FigureRecord
{
    int epoch_number = 0; // position within the target road
    Method method = Method::rf;
    geom::Point2 truth = geom::Point2::Zero();
    geom::RegionSet aoi;
};

struct SeedResult
{
    std::uint64_t seed = 0;
    scene::Scene scene;
    int skipped_epochs = 0;             // least squares failed; excluded from every method
    std::vector<int> visible_counts;    // per target-road epoch
    std::vector<EpochRecord> outcomes;  // epoch-major, methods in config order
    std::vector<MethodReport> reports;  // config order
    std::vector<FigureRecord> figures;
};

struct SeedFailure
{
    std::uint64_t seed = 0;
    std::string stage;
    std::string message;
};

struct TrendVerdict
{
    bool misclassification = false; // T1
    bool success = false;           // T2
    bool containment = false;       // T3
    bool bounds = false;            // T4
    std::vector<std::string> notes;

    bool primary() const { return misclassification && success && containment; }
};

struct ExperimentResult
{
    ExperimentConfig config;
    std::vector<SeedResult> seeds;
    std::vector<SeedFailure> failures;
    std::vector<MethodReport> pooled;
    std::optional<TrendVerdict> pooled_verdict;
    std::vector<std::optional<TrendVerdict>> seed_verdicts; // aligned with seeds
};

// Decisions for one method from the three per-satellite votes and truth labels.
std::vector<select::SelectionDecision> method_decisions(Method m, std::span<const features::LabeledSample> samples,
                                                        std::span<const std::array<ml::ClassProbability, 3>> votes,
                                                        double threshold);

// Full pipeline for one seed with a given ensemble trainer; throws on a stage error.
SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed);
// Same, with a pre-trained ensemble (bypasses training).
SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const ml::TrainedEnsemble& ensemble);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Summary quantities for one method, as used by compare_methods.
struct MethodSummary
{
    Method method = Method::rf;
    std::optional<double> accuracy;
    std::optional<double> misclassified_per_epoch;
    double success_rate = 0.0;
    double containment_rate = 0.0;
    std::optional<double> mean_cross_bound;
    std::optional<double> mean_along_bound;
};

MethodSummary summarize(const MethodReport& r);

// Requires rf, gbdt, svm and unanimousThreshold; unanimous is optional. Throws std::invalid_argument otherwise.
TrendVerdict compare_methods(std::span<const MethodSummary> methods);
TrendVerdict compare_methods(std::span<const MethodReport> reports);

// Reference values shipped with the build.
struct ReferenceValues
{
    int epochs = 0;
    std::vector<MethodSummary> methods;
};

ReferenceValues reference_values();
ReferenceValues reference_from_json(std::string_view text);

// tables.csv, report.json, outcomes.csv and SVG figures. Throws FormatError with the path on I/O failure.
void emit_report(const ExperimentResult& result, const std::filesystem::path& out_dir);

std::string tables_csv(const ExperimentResult& result);
std::string report_json(const ExperimentResult& result);
std::string outcomes_csv(const ExperimentResult& result);
std::string scene_map_svg(const scene::Scene& scene, const FigureRecord& fig);
std::string visible_count_svg(std::span<const int> counts);

// Worker count after applying ZSM_URBAN_THREADS.
int worker_count(int requested);

} // namespace zsm::harness
