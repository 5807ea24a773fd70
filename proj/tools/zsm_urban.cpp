// zsm-urban: scene generation, datasets, training and the full shadow-matching experiment.
//
// Exit codes: 0 success, 2 configuration error, 3 pipeline error.

#include <CLI11.hpp>
#include <json.hpp>

#include <fmt/format.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "zsm/errors.hpp"
#include "zsm/features.hpp"
#include "zsm/harness.hpp"
#include "zsm/ml.hpp"
#include "zsm/scene_io.hpp"

using namespace zsm;
using nlohmann::json;

namespace
{

constexpr int exit_config = 2;
constexpr int exit_pipeline = 3;

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

harness::ExperimentConfig load_config(const std::string& path)
{
    return path.empty() ? harness::ExperimentConfig{} : harness::read_experiment_config(path);
}

void print_reports(const std::vector<harness::MethodReport>& reports)
{
    fmt::print("{:<20} {:>9} {:>10} {:>9} {:>12} {:>10} {:>10}\n", "method", "accuracy", "miscl/ep", "success",
               "containment", "cross [m]", "along [m]");
    for (const auto& r : reports)
    {
        const auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.1f}", *v) : std::string("-"); };
        fmt::print("{:<20} {:>8.1f}% {:>10.3f} {:>8.1f}% {:>11.1f}% {:>10} {:>10}\n", harness::to_string(r.method),
                   100 * r.accuracy(), r.misclassified_per_epoch(), 100 * r.success_rate(),
                   100 * r.containment_rate(), opt(r.mean_cross_bound()), opt(r.mean_along_bound()));
    }
}

void print_verdict(const std::string& scope, const harness::TrendVerdict& v)
{
    const auto yn = [](bool b) { return b ? "true" : "false"; };
    fmt::print("{}: T1 {} | T2 {} | T3 {} | T4 {}\n", scope, yn(v.misclassification), yn(v.success),
               yn(v.containment), yn(v.bounds));
    for (const auto& n : v.notes)
        fmt::print("  {}\n", n);
}

std::vector<harness::MethodSummary> summaries_from(const json& methods)
{
    std::vector<harness::MethodSummary> out;
    const auto opt = [](const json& j, const char* k) -> std::optional<double> {
        if (!j.contains(k) || j.at(k).is_null())
            return std::nullopt;
        return j.at(k).get<double>();
    };
    for (const auto& m : methods)
    {
        harness::MethodSummary s;
        s.method = harness::parse_method(m.at("method").get<std::string>());
        s.accuracy = opt(m, "accuracy");
        s.misclassified_per_epoch = opt(m, "misclassifiedPerEpoch");
        s.success_rate = m.at("successRate").get<double>();
        s.containment_rate = m.at("containmentRate").get<double>();
        s.mean_cross_bound = opt(m, "meanCrossBound");
        s.mean_along_bound = opt(m, "meanAlongBound");
        out.push_back(s);
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Conservative satellite selection for set-based shadow matching in a synthetic urban canyon"};
    app.require_subcommand(1);

    // scene ---------------------------------------------------------------
    auto* scene_cmd = app.add_subcommand("scene", "Generate or inspect a scene");
    scene_cmd->require_subcommand(1);

    std::string gen_config, gen_out, gen_epochs;
    std::uint64_t gen_seed = 1;
    auto* gen = scene_cmd->add_subcommand("gen", "Generate a scene and optionally its epochs");
    gen->add_option("--config", gen_config, "Experiment config supplying scene and noise settings");
    gen->add_option("--seed", gen_seed, "Scene seed")->capture_default_str();
    gen->add_option("--out", gen_out, "Scene JSON output")->required();
    gen->add_option("--epochs", gen_epochs, "Epochs JSON-lines output");

    std::string show_path;
    auto* show = scene_cmd->add_subcommand("show", "Summarize a scene file");
    show->add_option("scene", show_path, "Scene JSON")->required();

    // dataset -------------------------------------------------------------
    auto* dataset_cmd = app.add_subcommand("dataset", "Feature datasets");
    dataset_cmd->require_subcommand(1);
    std::string ds_config, ds_out;
    std::uint64_t ds_seed = 1;
    auto* build = dataset_cmd->add_subcommand("build", "Write train.csv and test.csv for one seed");
    build->add_option("--config", ds_config, "Experiment config");
    build->add_option("--seed", ds_seed, "Scene seed")->capture_default_str();
    build->add_option("--out", ds_out, "Output directory")->required();

    // train ---------------------------------------------------------------
    std::string tr_algo, tr_data, tr_out, tr_config;
    std::uint64_t tr_seed = 1;
    auto* train = app.add_subcommand("train", "Train one classifier on a CSV dataset");
    train->add_option("--algo", tr_algo, "rf | gbdt | svm")->required();
    train->add_option("--data", tr_data, "Training CSV")->required();
    train->add_option("--out", tr_out, "Model JSON output")->required();
    train->add_option("--seed", tr_seed, "Training seed")->capture_default_str();
    train->add_option("--config", tr_config, "Experiment config supplying hyperparameters");

    // run -----------------------------------------------------------------
    std::string run_config, run_out;
    auto* run = app.add_subcommand("run", "Run the full experiment and write the report");
    run->add_option("--config", run_config, "Experiment config (defaults when omitted)");
    run->add_option("--out", run_out, "Output directory")->required();

    // compare -------------------------------------------------------------
    std::string cmp_report;
    bool cmp_reference = false;
    auto* compare = app.add_subcommand("compare", "Trend verdicts for a report or for the reference values");
    compare->add_option("--report", cmp_report, "report.json from a run");
    compare->add_flag("--reference", cmp_reference, "Evaluate the shipped reference values");

    // plot ----------------------------------------------------------------
    std::string plot_config, plot_out;
    std::uint64_t plot_seed = 1;
    std::vector<int> plot_epochs{56};
    auto* plot = app.add_subcommand("plot", "Scene maps with AOI overlays and the visible-satellite chart");
    plot->add_option("--config", plot_config, "Experiment config");
    plot->add_option("--seed", plot_seed, "Seed")->capture_default_str();
    plot->add_option("--epoch", plot_epochs, "Target-road epoch numbers")->capture_default_str();
    plot->add_option("--out", plot_out, "Output directory")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try
    {
        if (gen->parsed())
        {
            auto cfg = load_config(gen_config);
            cfg.scene.seed = gen_seed;
            scene::validate(cfg.scene);
            scene::validate(cfg.noise);
            const auto sc = scene::generate_scene(cfg.scene);
            scene::write_scene(gen_out, sc);
            if (!gen_epochs.empty())
                scene::write_epochs(gen_epochs, scene::simulate_epochs(sc, cfg.noise));
            fmt::print("wrote {} ({} buildings, {} epochs)\n", gen_out, sc.buildings.size(), sc.epoch_count());
        }
        else if (show->parsed())
        {
            const auto sc = scene::read_scene(show_path);
            const auto bb = sc.bounds.bounds();
            fmt::print("seed {}\nbuildings {}\nsatellites {}\nepochs {} ({} training, {} target)\n", sc.seed(),
                       sc.buildings.size(), sc.sky.size(), sc.epoch_count(), sc.training_trajectory.size(),
                       sc.trajectory.size());
            fmt::print("bounds x [{:.1f}, {:.1f}] y [{:.1f}, {:.1f}]\ninitial AOI area {:.1f} m^2 in {} parts\n",
                       bb.lo.x(), bb.hi.x(), bb.lo.y(), bb.hi.y(), sc.initial_aoi.area(), sc.initial_aoi.size());
        }
        else if (build->parsed())
        {
            auto cfg = load_config(ds_config);
            cfg.scene.seed = ds_seed;
            scene::validate(cfg.scene);
            scene::validate(cfg.noise);
            const auto sc = scene::generate_scene(cfg.scene);
            const auto samples = features::build_samples(sc, scene::simulate_epochs(sc, cfg.noise));
            features::write_csv(std::filesystem::path(ds_out) / "train.csv", features::to_dataset(samples.train));
            features::write_csv(std::filesystem::path(ds_out) / "test.csv", features::to_dataset(samples.test));
            fmt::print("train {} samples, test {} samples, {} epochs skipped\n", samples.train.size(),
                       samples.test.size(), samples.skipped_epochs);
        }
        else if (train->parsed())
        {
            const auto cfg = load_config(tr_config);
            const auto algo = ml::parse_algorithm(tr_algo);
            const auto data = features::read_csv(tr_data);
            ml::Classifier model;
            switch (algo)
            {
            case ml::Algorithm::rf:
            {
                auto c = cfg.ml.rf;
                c.seed = tr_seed;
                model = ml::train_rf(data, c);
                break;
            }
            case ml::Algorithm::gbdt:
                model = ml::train_gbdt(data, cfg.ml.gbdt);
                break;
            case ml::Algorithm::svm:
            {
                auto c = cfg.ml.svm;
                c.seed = tr_seed;
                model = ml::train_svm(data, c);
                break;
            }
            }
            ml::save_model(tr_out, model);
            fmt::print("{} training accuracy {:.4f}\n", ml::to_string(algo), ml::evaluate_accuracy(model, data));
        }
        else if (run->parsed())
        {
            const auto cfg = load_config(run_config);
            const auto result = harness::run_experiment(cfg);
            harness::emit_report(result, run_out);
            for (const auto& f : result.failures)
                fmt::print(stderr, "seed {} failed at {}: {}\n", f.seed, f.stage, f.message);
            print_reports(result.pooled);
            if (result.pooled_verdict)
                print_verdict("pooled", *result.pooled_verdict);
            if (result.seeds.empty())
                return exit_pipeline;
        }
        else if (compare->parsed())
        {
            if (cmp_reference == !cmp_report.empty())
                throw ConfigError("compare: give exactly one of --report or --reference");
            if (cmp_reference)
            {
                const auto ref = harness::reference_values();
                print_verdict("reference", harness::compare_methods(ref.methods));
            }
            else
            {
                json j;
                try
                {
                    j = json::parse(slurp(cmp_report));
                    for (const auto& s : j.at("seeds"))
                        print_verdict(fmt::format("seed {}", s.at("seed").get<std::uint64_t>()),
                                      harness::compare_methods(summaries_from(s.at("methods"))));
                    print_verdict("pooled", harness::compare_methods(summaries_from(j.at("pooled").at("methods"))));
                }
                catch (const json::exception& e)
                {
                    throw FormatError(fmt::format("{}: {}", cmp_report, e.what()));
                }
            }
        }
        else if (plot->parsed())
        {
            auto cfg = load_config(plot_config);
            cfg.figure_epochs = plot_epochs;
            cfg.seeds = {plot_seed};
            harness::validate(cfg);
            const auto seed = harness::run_seed(cfg, plot_seed);
            const std::filesystem::path dir(plot_out);
            std::filesystem::create_directories(dir);
            std::ofstream(dir / fmt::format("visible_satellites_seed{}.svg", plot_seed))
                << harness::visible_count_svg(seed.visible_counts);
            for (const auto& fig : seed.figures)
            {
                const auto name = fmt::format("scene_map_seed{}_epoch{:03}_{}.svg", plot_seed, fig.epoch_number,
                                              harness::to_string(fig.method));
                std::ofstream out(dir / name);
                if (!(out << harness::scene_map_svg(seed.scene, fig)))
                    throw FormatError("cannot write " + (dir / name).string());
            }
            fmt::print("wrote {} scene maps to {}\n", seed.figures.size(), plot_out);
        }
    }
    catch (const ConfigError& e)
    {
        fmt::print(stderr, "config error: {}\n", e.what());
        return exit_config;
    }
    catch (const std::exception& e)
    {
        fmt::print(stderr, "error: {}\n", e.what());
        return exit_pipeline;
    }
    return 0;
}
