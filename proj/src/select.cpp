#include "zsm/select.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace zsm::select
{

std::string_view to_string(Rejection r)
{
    return r == Rejection::disagreement ? "disagreement" : "lowConfidence";
}

SelectionDecision decide(SatId sat, const std::array<ml::ClassProbability, 3>& votes, double threshold)
{
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw std::invalid_argument("select: threshold must lie in [0, 1].");
    SelectionDecision d;
    d.sat_id = sat;
    for (std::size_t k = 0; k < 3; ++k)
    {
        d.labels[k] = votes[k].label();
        d.confidences[k] = votes[k].confidence();
    }
    const bool unanimous = d.labels[0] == d.labels[1] && d.labels[1] == d.labels[2];
    const bool confident =
        std::all_of(d.confidences.begin(), d.confidences.end(), [&](double c) { return c > threshold; });
    if (!unanimous)
        d.rejection = Rejection::disagreement;
    else if (!confident)
        d.rejection = Rejection::low_confidence;
    else
    {
        d.selected = true;
        d.agreed_label = d.labels[0];
    }
    return d;
}

std::vector<SelectionDecision> select_satellites(const std::vector<features::LabeledSample>& epoch,
                                                 const ml::TrainedEnsemble& ensemble, double threshold)
{
    std::vector<SelectionDecision> out;
    out.reserve(epoch.size());
    for (const auto& s : epoch)
    {
        const Eigen::VectorXd x = s.features.values();
        std::array<ml::ClassProbability, 3> votes;
        for (std::size_t k = 0; k < 3; ++k)
            votes[k] = ml::predict_proba(ensemble.models[k], x);
        out.push_back(decide(s.sat_id, votes, threshold));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const SelectionDecision& a, const SelectionDecision& b) { return a.sat_id < b.sat_id; });
    return out;
}

SelectionStats selection_statistics(std::span<const EpochSelection> epochs)
{
    SelectionStats st;
    long selected_correct = 0;
    std::array<long, 3> model_correct{};
    for (const auto& e : epochs)
    {
        if (e.truth.size() != e.decisions.size())
            throw std::invalid_argument("selection_statistics: truth and decisions are not aligned.");
        ++st.epochs;
        for (std::size_t i = 0; i < e.decisions.size(); ++i)
        {
            const auto& d = e.decisions[i];
            const Label truth = e.truth[i];
            ++st.satellites;
            if (d.labels[0] == d.labels[1] && d.labels[1] == d.labels[2])
                ++st.unanimous;
            if (d.selected)
            {
                ++st.selected;
                selected_correct += *d.agreed_label == truth ? 1 : 0;
            }
            for (std::size_t k = 0; k < 3; ++k)
                model_correct[k] += d.labels[k] == truth ? 1 : 0;
        }
    }
    if (st.satellites > 0)
    {
        const auto n = static_cast<double>(st.satellites);
        st.unanimous_fraction = static_cast<double>(st.unanimous) / n;
        st.selected_fraction = static_cast<double>(st.selected) / n;
        for (std::size_t k = 0; k < 3; ++k)
            st.model_accuracy[k] = static_cast<double>(model_correct[k]) / n;
    }
    if (st.selected > 0)
        st.selected_correct_rate = static_cast<double>(selected_correct) / static_cast<double>(st.selected);
    if (st.epochs > 0)
    {
        const auto ne = static_cast<double>(st.epochs);
        st.misclassified_per_epoch = static_cast<double>(st.selected - selected_correct) / ne;
        for (std::size_t k = 0; k < 3; ++k)
            st.model_misclassified_per_epoch[k] = static_cast<double>(st.satellites - model_correct[k]) / ne;
    }
    return st;
}

} // namespace zsm::select
