#include "zsm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "zsm/errors.hpp"

namespace zsm::harness
{

namespace
{

template<typename F>
void parallel_for(std::size_t n, int workers, F&& body)
{
    const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    if (w <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < w; ++t)
        {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++)
                {
                    try
                    {
                        body(i);
                    }
                    catch (...)
                    {
                        std::lock_guard lock(error_mutex);
                        if (!error)
                            error = std::current_exception();
                    }
                }
            });
        }
    }
    if (error)
        std::rethrow_exception(error);
}

// Stage-tagged failure so that a seed diagnostic names where the pipeline stopped.
class StageError : public std::runtime_error
{
    public:
        StageError(std::string stage, const std::string& what) : std::runtime_error(what), stage_(std::move(stage)) {}
        const std::string& stage() const noexcept { return stage_; }

    private:
        std::string stage_;
};

template<typename F>
auto stage(const char* name, F&& f) -> decltype(f())
{
    try
    {
        return f();
    }
    catch (const StageError&)
    {
        throw;
    }
    catch (const std::exception& e)
    {
        throw StageError(name, e.what());
    }
}

struct EpochResult
{
    std::vector<EpochRecord> records;
    std::vector<FigureRecord> figures;
    int visible = 0;
    bool skipped = false;
    std::vector<int> satellites; // per method slot, same for every method
};

std::optional<double> mean(double sum, long n)
{
    if (n == 0)
        return std::nullopt;
    return sum / static_cast<double>(n);
}

SeedResult evaluate(const ExperimentConfig& cfg, std::uint64_t seed, scene::Scene sc,
                    const std::vector<scene::EpochObservation>& epochs, const features::SplitSamples& samples,
                    const ml::TrainedEnsemble& ensemble, int workers)
{
    const int first = sc.config.training_epochs;
    const int count = sc.config.target_epochs;

    std::map<int, std::vector<features::LabeledSample>> by_epoch;
    for (const auto& s : samples.test)
        by_epoch[s.epoch_index].push_back(s);

    const std::size_t nm = cfg.methods.size();
    std::vector<EpochResult> results(static_cast<std::size_t>(count));

    parallel_for(results.size(), workers, [&](std::size_t n) {
        const int number = static_cast<int>(n);
        const auto& epoch = epochs[static_cast<std::size_t>(first + number)];
        EpochResult& out = results[n];
        out.visible = static_cast<int>(epoch.observations.size());
        const auto it = by_epoch.find(first + number);
        if (it == by_epoch.end())
        {
            out.skipped = true;
            return;
        }
        const auto& group = it->second;

        std::vector<scene::SatelliteView> views;
        for (const auto& s : group)
        {
            const auto ob = std::find_if(epoch.observations.begin(), epoch.observations.end(),
                                         [&](const auto& o) { return o.sat_id == s.sat_id; });
            views.push_back({ob->sat_id, ob->azimuth_deg, ob->elevation_deg, ob->true_range});
        }
        const auto shadows = shadow::compute_shadows(sc, views, epoch.antenna_height, cfg.shadow_method);

        std::vector<std::array<ml::ClassProbability, 3>> votes;
        std::vector<Label> truth;
        for (const auto& s : group)
        {
            const Eigen::VectorXd x = s.features.values();
            votes.push_back({ml::predict_proba(ensemble.models[0], x), ml::predict_proba(ensemble.models[1], x),
                             ml::predict_proba(ensemble.models[2], x)});
            truth.push_back(*s.label);
        }

        const shadow::Aoi initial{sc.initial_aoi, {}, false};
        const bool drawn = std::find(cfg.figure_epochs.begin(), cfg.figure_epochs.end(), number)
                           != cfg.figure_epochs.end();
        for (Method m : cfg.methods)
        {
            const auto decisions = method_decisions(m, group, votes, cfg.threshold);
            const auto aoi = shadow::refine_aoi(initial, decisions, shadows);
            auto o = shadow::score_epoch(aoi, epoch.true_position, sc.street_direction);
            o.epoch_index = number;
            shadow::record_usage(o, decisions, truth, shadows, epoch.true_position);
            out.records.push_back({m, o});
            if (drawn)
                out.figures.push_back({number, m, epoch.true_position, aoi.region});
        }
        out.satellites.assign(nm, static_cast<int>(group.size()));
    });

    SeedResult r{.seed = seed, .scene = std::move(sc), .visible_counts = {}, .outcomes = {}, .reports = {}, .figures = {}};
    r.reports.resize(nm);
    for (std::size_t k = 0; k < nm; ++k)
    {
        r.reports[k].method = cfg.methods[k];
        r.reports[k].seed = seed;
    }
    for (const auto& e : results)
    {
        r.visible_counts.push_back(e.visible);
        if (e.skipped)
        {
            ++r.skipped_epochs;
            continue;
        }
        for (std::size_t k = 0; k < nm; ++k)
        {
            const auto& o = e.records[k].outcome;
            MethodReport& rep = r.reports[k];
            ++rep.epochs;
            rep.satellites += e.satellites[k];
            rep.used += o.satellites_used;
            rep.misclassified += o.misclassified_used;
            rep.successes += o.success ? 1 : 0;
            rep.containments += o.contains_truth ? 1 : 0;
            rep.no_refinement += o.no_refinement ? 1 : 0;
            rep.boundary_ambiguous += o.boundary_ambiguous ? 1 : 0;
            if (o.success)
            {
                rep.cross_sum += *o.cross_bound;
                rep.along_sum += *o.along_bound;
            }
        }
        r.outcomes.insert(r.outcomes.end(), e.records.begin(), e.records.end());
        r.figures.insert(r.figures.end(), e.figures.begin(), e.figures.end());
    }
    return r;
}

struct Prepared
{
    scene::Scene scene;
    std::vector<scene::EpochObservation> epochs;
    features::SplitSamples samples;
};

Prepared prepare(const ExperimentConfig& cfg, std::uint64_t seed)
{
    scene::SceneConfig sc = cfg.scene;
    sc.seed = seed;
    Prepared p{.scene = stage("scene", [&] { return scene::generate_scene(sc); }), .epochs = {}, .samples = {}};
    p.epochs = stage("simulate", [&] { return scene::simulate_epochs(p.scene, cfg.noise); });
    p.samples = stage("features", [&] { return features::build_samples(p.scene, p.epochs); });
    return p;
}

} // namespace

double MethodReport::accuracy() const
{
    return used == 0 ? 1.0 : 1.0 - static_cast<double>(misclassified) / static_cast<double>(used);
}

double MethodReport::misclassified_per_epoch() const { return mean(static_cast<double>(misclassified), epochs).value_or(0.0); }
double MethodReport::used_per_epoch() const { return mean(static_cast<double>(used), epochs).value_or(0.0); }
double MethodReport::success_rate() const { return mean(static_cast<double>(successes), epochs).value_or(0.0); }
double MethodReport::containment_rate() const { return mean(static_cast<double>(containments), epochs).value_or(0.0); }
std::optional<double> MethodReport::mean_cross_bound() const { return mean(cross_sum, successes); }
std::optional<double> MethodReport::mean_along_bound() const { return mean(along_sum, successes); }

MethodReport& MethodReport::operator+=(const MethodReport& o)
{
    if (o.method != method)
        throw std::invalid_argument("MethodReport: cannot pool different methods.");
    epochs += o.epochs;
    satellites += o.satellites;
    used += o.used;
    misclassified += o.misclassified;
    successes += o.successes;
    containments += o.containments;
    no_refinement += o.no_refinement;
    boundary_ambiguous += o.boundary_ambiguous;
    cross_sum += o.cross_sum;
    along_sum += o.along_sum;
    return *this;
}

std::vector<select::SelectionDecision> method_decisions(Method m, std::span<const features::LabeledSample> samples,
                                                        std::span<const std::array<ml::ClassProbability, 3>> votes,
                                                        double threshold)
{
    if (samples.size() != votes.size())
        throw std::invalid_argument("method_decisions: samples and votes differ in length.");
    std::vector<select::SelectionDecision> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        const SatId sat = samples[i].sat_id;
        switch (m)
        {
        case Method::unanimous:
            out.push_back(select::decide(sat, votes[i], 0.0));
            break;
        case Method::unanimous_threshold:
            out.push_back(select::decide(sat, votes[i], threshold));
            break;
        default:
        {
            select::SelectionDecision d = select::decide(sat, votes[i], 0.0);
            d.selected = true;
            d.rejection.reset();
            if (m == Method::oracle)
            {
                if (!samples[i].label)
                    throw std::invalid_argument("method_decisions: oracle needs truth labels.");
                d.agreed_label = *samples[i].label;
            }
            else
            {
                const std::size_t k = m == Method::rf ? 0 : m == Method::gbdt ? 1 : 2;
                d.agreed_label = d.labels[k];
            }
            out.push_back(d);
        }
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.sat_id < b.sat_id; });
    return out;
}

int worker_count(int requested)
{
    int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("ZSM_URBAN_THREADS"); env && *env)
    {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (*end != '\0' || cap < 1)
            throw ConfigError(fmt::format("ZSM_URBAN_THREADS must be a positive integer, got '{}'", env));
        n = std::min<long>(n, cap);
    }
    return n;
}

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed)
{
    validate(cfg);
    Prepared p = prepare(cfg, seed);
    ml::EnsembleConfig ec = cfg.ml;
    ec.rf.seed = seed;
    ec.svm.seed = seed;
    const auto ensemble = stage("train", [&] { return ml::train_ensemble(features::to_dataset(p.samples.train), ec); });
    return stage("evaluate", [&] {
        return evaluate(cfg, seed, std::move(p.scene), p.epochs, p.samples, ensemble, worker_count(cfg.threads));
    });
}

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const ml::TrainedEnsemble& ensemble)
{
    validate(cfg);
    Prepared p = prepare(cfg, seed);
    return stage("evaluate", [&] {
        return evaluate(cfg, seed, std::move(p.scene), p.epochs, p.samples, ensemble, worker_count(cfg.threads));
    });
}

ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    validate(cfg);
    const int workers = worker_count(cfg.threads);
    const std::size_t ns = cfg.seeds.size();
    std::vector<std::optional<SeedResult>> done(ns);
    std::vector<std::optional<SeedFailure>> failed(ns);

    ExperimentConfig inner = cfg;
    inner.threads = std::max(1, workers / static_cast<int>(std::min<std::size_t>(ns, workers)));
    parallel_for(ns, workers, [&](std::size_t i) {
        try
        {
            done[i] = run_seed(inner, cfg.seeds[i]);
        }
        catch (const StageError& e)
        {
            failed[i] = SeedFailure{cfg.seeds[i], e.stage(), e.what()};
        }
        catch (const std::exception& e)
        {
            failed[i] = SeedFailure{cfg.seeds[i], "unknown", e.what()};
        }
    });

    ExperimentResult out{
        .config = cfg, .seeds = {}, .failures = {}, .pooled = {}, .pooled_verdict = {}, .seed_verdicts = {}};
    for (std::size_t i = 0; i < ns; ++i)
    {
        if (done[i])
            out.seeds.push_back(std::move(*done[i]));
        if (failed[i])
            out.failures.push_back(std::move(*failed[i]));
    }
    for (std::size_t k = 0; k < cfg.methods.size(); ++k)
    {
        MethodReport pooled;
        pooled.method = cfg.methods[k];
        for (const auto& s : out.seeds)
            pooled += s.reports[k];
        out.pooled.push_back(pooled);
    }
    auto verdict = [](std::span<const MethodReport> reps) -> std::optional<TrendVerdict> {
        try
        {
            return compare_methods(reps);
        }
        catch (const std::invalid_argument&)
        {
            return std::nullopt;
        }
    };
    if (!out.seeds.empty())
        out.pooled_verdict = verdict(out.pooled);
    for (const auto& s : out.seeds)
        out.seed_verdicts.push_back(verdict(s.reports));
    return out;
}

MethodSummary summarize(const MethodReport& r)
{
    return {r.method,
            r.accuracy(),
            r.misclassified_per_epoch(),
            r.success_rate(),
            r.containment_rate(),
            r.mean_cross_bound(),
            r.mean_along_bound()};
}

TrendVerdict compare_methods(std::span<const MethodSummary> methods)
{
    if (methods.size() < 2)
        throw std::invalid_argument("compare_methods: need at least two methods.");
    auto find = [&](Method m) -> const MethodSummary* {
        const auto it = std::find_if(methods.begin(), methods.end(), [&](const auto& s) { return s.method == m; });
        return it == methods.end() ? nullptr : &*it;
    };
    std::vector<const MethodSummary*> singles;
    for (Method m : {Method::rf, Method::gbdt, Method::svm})
    {
        const auto* s = find(m);
        if (!s)
            throw std::invalid_argument(fmt::format("compare_methods: missing method {}.", to_string(m)));
        singles.push_back(s);
    }
    const MethodSummary* thr = find(Method::unanimous_threshold);
    if (!thr)
        throw std::invalid_argument("compare_methods: missing method unanimousThreshold.");
    const MethodSummary* una = find(Method::unanimous);

    TrendVerdict v;
    v.misclassification = thr->misclassified_per_epoch.has_value();
    for (const auto* s : singles)
    {
        v.misclassification = v.misclassification && s->misclassified_per_epoch
                              && *thr->misclassified_per_epoch < *s->misclassified_per_epoch;
    }
    if (!v.misclassification)
        v.notes.push_back("T1: selected misclassification per epoch is not below every single model");

    double min_success = 1.0;
    for (const auto* s : singles)
        min_success = std::min(min_success, s->success_rate);
    v.success = una ? thr->success_rate >= una->success_rate && una->success_rate >= min_success
                    : thr->success_rate >= min_success;
    if (!una)
        v.notes.push_back("T2: unanimous method absent; chain checked without it");
    if (!v.success)
        v.notes.push_back("T2: success chain does not hold");

    v.containment = std::all_of(singles.begin(), singles.end(),
                                [&](const auto* s) { return thr->containment_rate >= s->containment_rate; });
    if (!v.containment)
        v.notes.push_back("T3: containment of unanimousThreshold is below a single model");

    v.bounds = true;
    for (const auto* c : {una, thr})
    {
        if (!c)
            continue;
        for (const auto* s : singles)
        {
            const bool cross = c->mean_cross_bound && s->mean_cross_bound && *c->mean_cross_bound >= *s->mean_cross_bound;
            const bool along = c->mean_along_bound && s->mean_along_bound && *c->mean_along_bound >= *s->mean_along_bound;
            v.bounds = v.bounds && cross && along;
        }
    }
    if (!v.bounds)
        v.notes.push_back("T4: a conservative method has a smaller mean bound than a single model");
    return v;
}

TrendVerdict compare_methods(std::span<const MethodReport> reports)
{
    std::vector<MethodSummary> s;
    for (const auto& r : reports)
        s.push_back(summarize(r));
    return compare_methods(s);
}

} // namespace zsm::harness
