#pragma once

// From-scratch binary LOS/NLOS classifiers: random forest, gradient-boosted trees and an
// RBF support vector machine with Platt-scaled probabilities. Class 1 is NLOS throughout.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "zsm/features.hpp"
#include "zsm/types.hpp"

namespace zsm::ml
{

using features::Dataset;

struct ClassProbability
{
    double p_los = 0.5;
    double p_nlos = 0.5;

    static ClassProbability from_nlos(double p) { return {1.0 - p, p}; }
    // Argmax; an exact tie goes to LOS.
    Label label() const { return p_nlos > p_los ? Label::nlos : Label::los; }
    double confidence() const { return std::max(p_los, p_nlos); }
};

struct TreeNode
{
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;    // x[feature] <= threshold
    int right = -1;
    double value = 0.0;                      // leaf: class-1 fraction (classification) or stage output
    std::array<double, 2> counts{0.0, 0.0}; // leaf: weighted class counts (classification only)

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree
{
    std::vector<TreeNode> nodes; // nodes[0] is the root

    const TreeNode& leaf(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    int depth() const;
};

struct RfConfig
{
    int tree_count = 100;
    int max_depth = 8;
    int max_features = 0;   // 0 selects max(1, floor(sqrt(d)))
    int min_samples_split = 2;
    bool bootstrap = true;
    bool balanced = false;  // class weights n / (2 n_c)
    std::uint64_t seed = 1;
};

struct GbdtConfig
{
    int stages = 200;
    double learning_rate = 0.1;
    int max_depth = 3;
    int min_samples_split = 2;
    bool balanced = false;
};

struct SvmConfig
{
    double C = 10.0;
    double gamma = 0.0;        // 0 selects 1 / (d * var(X)) on standardized inputs
    double tolerance = 1e-3;   // SMO maximal-violating-pair gap
    long max_iterations = 0;   // 0 selects max(10^7, 100 n)
    int cv_folds = 3;          // for Platt calibration margins
    bool balanced = false;
    std::size_t cache_mb = 256; // full kernel matrix kept when it fits
    std::uint64_t seed = 1;
};

struct RandomForestModel
{
    std::vector<DecisionTree> trees;
    int feature_count = 0;
    int feature_subsample = 0;
    std::uint64_t seed = 0;
    RfConfig config;
};

struct GbdtModel
{
    std::vector<DecisionTree> trees; // leaf values already include learning rate and step scale
    std::vector<double> step_scale;  // backtracking factor applied to each stage (1 = full step)
    int feature_count = 0;
    double learning_rate = 0.1;
    double initial_log_odds = 0.0;
    std::vector<double> training_loss; // mean log-loss after 0, 1, ..., stages
    bool fitted = false;
    GbdtConfig config;
};

struct SvmModel
{
    Eigen::MatrixXd support_vectors; // standardized
    Eigen::VectorXd dual_coefficients; // y_i * alpha_i
    double bias = 0.0;                 // f(x) = sum coef_i K(sv_i, x) + bias
    double gamma = 0.0;
    double platt_a = 0.0;              // P(NLOS | f) = 1 / (1 + exp(A f + B))
    double platt_b = 0.0;
    Eigen::VectorXd mean;              // standardization
    Eigen::VectorXd scale;
    std::vector<int> support_indices;  // rows of the training set, for auditing
    std::array<double, 2> class_weight{1.0, 1.0}; // C multiplier per class
    long iterations = 0;
    SvmConfig config;
};

using Classifier = std::variant<RandomForestModel, GbdtModel, SvmModel>;

enum class Algorithm
{
    rf,
    gbdt,
    svm
};

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view s); // "rf" | "gbdt" | "svm", else ConfigError
Algorithm algorithm_of(const Classifier& c);

// All trainers throw TrainingError on empty or single-class data.
RandomForestModel train_rf(const Dataset& data, const RfConfig& cfg);
GbdtModel train_gbdt(const Dataset& data, const GbdtConfig& cfg);
SvmModel train_svm(const Dataset& data, const SvmConfig& cfg);

// Throws UntrainedModelError for default-constructed models and invalid_argument on a wrong feature count.
ClassProbability predict_proba(const RandomForestModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);
ClassProbability predict_proba(const GbdtModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);
ClassProbability predict_proba(const SvmModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);
ClassProbability predict_proba(const Classifier& m, const Eigen::Ref<const Eigen::VectorXd>& x);
ClassProbability predict_proba(const Classifier& m, const features::FeatureVector& f);

inline Label predict(const Classifier& m, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    return predict_proba(m, x).label();
}

// Raw SVM margin f(x) on unstandardized input.
double decision_value(const SvmModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);

// Fraction of argmax-correct predictions. Throws invalid_argument on empty data.
double evaluate_accuracy(const Classifier& m, const Dataset& data);

struct KktReport
{
    double max_violation = 0.0;
    int violations = 0; // points beyond the tolerance
    bool passed = true;
};

// Checks the box-constrained dual optimality conditions on the training set:
// alpha = 0 -> y f >= 1 - tol; 0 < alpha < C -> |y f - 1| <= tol; alpha = C -> y f <= 1 + tol.
KktReport kkt_audit(const SvmModel& m, const Dataset& train, double tol = 1e-3);

// Serialized model: {"format": "zsm-urban/model", "version": 1, "algorithm": ..., ...}.
std::string to_json(const Classifier& m);
Classifier classifier_from_json(std::string_view text);
void save_model(const std::filesystem::path& path, const Classifier& m);
Classifier load_model(const std::filesystem::path& path);

struct EnsembleConfig
{
    RfConfig rf;
    GbdtConfig gbdt;
    SvmConfig svm;
};

// Models in fixed order: RF, GBDT, SVM.
struct TrainedEnsemble
{
    std::array<Classifier, 3> models;
};

TrainedEnsemble train_ensemble(const Dataset& data, const EnsembleConfig& cfg);

} // namespace zsm::ml
