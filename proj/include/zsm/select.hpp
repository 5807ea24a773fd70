#pragma once

// Conservative satellite selection: a satellite is kept only when all three classifiers
// agree on its label and every classifier's confidence strictly exceeds the threshold.

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "zsm/features.hpp"
#include "zsm/ml.hpp"

namespace zsm::select
{

inline constexpr double default_threshold = 0.7;

enum class Rejection
{
    disagreement,
    low_confidence
};

std::string_view to_string(Rejection r);

struct SelectionDecision
{
    SatId sat_id = 0;
    std::array<Label, 3> labels{};        // RF, GBDT, SVM
    std::array<double, 3> confidences{}; // max class probability per model
    bool selected = false;
    std::optional<Label> agreed_label;   // set iff selected
    std::optional<Rejection> rejection;  // set iff not selected
};

// The rule on precomputed probabilities. Threshold must lie in [0, 1]; 0 means unanimity only.
SelectionDecision decide(SatId sat, const std::array<ml::ClassProbability, 3>& votes, double threshold);

// One decision per sample, ordered by satellite id.
std::vector<SelectionDecision> select_satellites(const std::vector<features::LabeledSample>& epoch,
                                                 const ml::TrainedEnsemble& ensemble, double threshold);

struct EpochSelection
{
    int epoch_index = 0;
    std::vector<SelectionDecision> decisions;
    std::vector<Label> truth; // aligned with decisions
};

struct SelectionStats
{
    long epochs = 0;
    long satellites = 0;
    long unanimous = 0;
    long selected = 0;
    double unanimous_fraction = 0.0;
    double selected_fraction = 0.0;                // passed both gates
    std::optional<double> selected_correct_rate;   // empty when nothing was selected
    double misclassified_per_epoch = 0.0;          // among selected
    std::array<double, 3> model_accuracy{};        // over all satellites
    std::array<double, 3> model_misclassified_per_epoch{};
};

SelectionStats selection_statistics(std::span<const EpochSelection> epochs);

} // namespace zsm::select
