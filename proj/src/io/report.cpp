#include "zsm/harness.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "io/json_util.hpp"
#include "zsm/errors.hpp"

namespace zsm::harness
{

namespace
{

using io::json;

std::string number(double v) { return fmt::format("{:.6f}", v); }

std::string number(const std::optional<double>& v) { return v ? number(*v) : std::string(); }

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json report_object(const MethodReport& r)
{
    return {{"method", std::string(to_string(r.method))},
            {"epochs", r.epochs},
            {"satellites", r.satellites},
            {"used", r.used},
            {"misclassified", r.misclassified},
            {"successes", r.successes},
            {"containments", r.containments},
            {"noRefinement", r.no_refinement},
            {"boundaryAmbiguous", r.boundary_ambiguous},
            {"accuracy", r.accuracy()},
            {"misclassifiedPerEpoch", r.misclassified_per_epoch()},
            {"usedPerEpoch", r.used_per_epoch()},
            {"successRate", r.success_rate()},
            {"containmentRate", r.containment_rate()},
            {"meanCrossBound", nullable(r.mean_cross_bound())},
            {"meanAlongBound", nullable(r.mean_along_bound())}};
}

json verdict_object(const std::optional<TrendVerdict>& v)
{
    if (!v)
        return nullptr;
    return {{"T1", v->misclassification},
            {"T2", v->success},
            {"T3", v->containment},
            {"T4", v->bounds},
            {"notes", v->notes}};
}

const MethodSummary* reference_row(const ReferenceValues& ref, Method m)
{
    const auto it = std::find_if(ref.methods.begin(), ref.methods.end(), [&](const auto& s) { return s.method == m; });
    return it == ref.methods.end() ? nullptr : &*it;
}

struct Frame
{
    double x0, y1, scale;
    std::string operator()(const geom::Point2& p) const
    {
        return fmt::format("{:.2f},{:.2f}", (p.x() - x0) * scale, (y1 - p.y()) * scale);
    }
};

std::string points(const geom::ConvexPolygon& poly, const Frame& f)
{
    std::string s;
    for (const auto& v : poly.vertices())
        s += (s.empty() ? "" : " ") + f(v);
    return s;
}

} // namespace

std::string tables_csv(const ExperimentResult& result)
{
    const ReferenceValues ref = reference_values();
    std::string out = "scope,method,accuracy,misclassified_per_epoch,used_per_epoch,success_rate,containment_rate,"
                      "mean_cross_bound_m,mean_along_bound_m,epochs,successes,containments,no_refinement,"
                      "boundary_ambiguous,ref_accuracy,ref_misclassified_per_epoch,ref_success_rate,"
                      "ref_containment_rate,ref_cross_bound_m,ref_along_bound_m\n";
    auto row = [&](const std::string& scope, const MethodReport& r, bool with_reference) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}", scope, to_string(r.method), number(r.accuracy()),
                           number(r.misclassified_per_epoch()), number(r.used_per_epoch()), number(r.success_rate()),
                           number(r.containment_rate()), number(r.mean_cross_bound()), number(r.mean_along_bound()),
                           r.epochs, r.successes, r.containments, r.no_refinement, r.boundary_ambiguous);
        const MethodSummary* p = with_reference ? reference_row(ref, r.method) : nullptr;
        if (p)
            out += fmt::format(",{},{},{},{},{},{}\n", number(p->accuracy), number(p->misclassified_per_epoch),
                               number(p->success_rate), number(p->containment_rate), number(p->mean_cross_bound),
                               number(p->mean_along_bound));
        else
            out += ",,,,,,\n";
    };
    for (const auto& s : result.seeds)
    {
        for (const auto& r : s.reports)
            row(fmt::format("seed{}", s.seed), r, false);
    }
    if (!result.seeds.empty())
    {
        for (const auto& r : result.pooled)
            row("pooled", r, true);
    }
    return out;
}

std::string report_json(const ExperimentResult& result)
{
    json j;
    j["format"] = "zsm-urban/report";
    j["version"] = 1;
    j["config"] = json::parse(to_json(result.config));

    json seeds = json::array();
    for (std::size_t i = 0; i < result.seeds.size(); ++i)
    {
        const auto& s = result.seeds[i];
        json methods = json::array();
        for (const auto& r : s.reports)
            methods.push_back(report_object(r));
        double visible = 0.0;
        for (int c : s.visible_counts)
            visible += c;
        seeds.push_back({{"seed", s.seed},
                         {"skippedEpochs", s.skipped_epochs},
                         {"meanVisible", s.visible_counts.empty() ? 0.0 : visible / s.visible_counts.size()},
                         {"methods", methods},
                         {"verdict", verdict_object(i < result.seed_verdicts.size() ? result.seed_verdicts[i]
                                                                                    : std::nullopt)}});
    }
    j["seeds"] = seeds;

    json failures = json::array();
    for (const auto& f : result.failures)
        failures.push_back({{"seed", f.seed}, {"stage", f.stage}, {"message", f.message}});
    j["failures"] = failures;

    json pooled = json::array();
    for (const auto& r : result.pooled)
        pooled.push_back(report_object(r));
    j["pooled"] = {{"methods", pooled}, {"verdict", verdict_object(result.pooled_verdict)}};

    int bounds_seeds = 0;
    for (const auto& v : result.seed_verdicts)
        bounds_seeds += v && v->bounds ? 1 : 0;
    j["boundsTrendSeeds"] = bounds_seeds;

    const ReferenceValues ref = reference_values();
    json reference_rows = json::array();
    for (const auto& m : ref.methods)
    {
        reference_rows.push_back({{"method", std::string(to_string(m.method))},
                         {"accuracy", nullable(m.accuracy)},
                         {"misclassifiedPerEpoch", nullable(m.misclassified_per_epoch)},
                         {"successRate", m.success_rate},
                         {"containmentRate", m.containment_rate},
                         {"meanCrossBound", nullable(m.mean_cross_bound)},
                         {"meanAlongBound", nullable(m.mean_along_bound)}});
    }
    j["reference"] = {{"epochs", ref.epochs}, {"methods", reference_rows}, {"verdict", verdict_object(compare_methods(ref.methods))}};
    return j.dump(2) + "\n";
}

std::string outcomes_csv(const ExperimentResult& result)
{
    std::string out = "seed,epoch,method,success,contains_truth,cross_bound_m,along_bound_m,satellites_used,"
                      "misclassified_used,boundary_ambiguous,no_refinement\n";
    for (const auto& s : result.seeds)
    {
        for (const auto& rec : s.outcomes)
        {
            const auto& o = rec.outcome;
            out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", s.seed, o.epoch_index, to_string(rec.method),
                               int(o.success), int(o.contains_truth), number(o.cross_bound), number(o.along_bound),
                               o.satellites_used, o.misclassified_used, int(o.boundary_ambiguous),
                               int(o.no_refinement));
        }
    }
    return out;
}

std::string scene_map_svg(const scene::Scene& scene, const FigureRecord& fig)
{
    const auto bb = scene.bounds.bounds();
    const double margin = 30.0;
    const double width_m = bb.hi.x() - bb.lo.x() + 2 * margin;
    const double height_m = bb.hi.y() - bb.lo.y() + 2 * margin;
    const double scale = 900.0 / std::max(width_m, height_m);
    const Frame f{bb.lo.x() - margin, bb.hi.y() + margin, scale};
    const geom::BoundingBox view{{bb.lo.x() - margin, bb.lo.y() - margin}, {bb.hi.x() + margin, bb.hi.y() + margin}};

    std::string s = fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\">\n",
                                width_m * scale, height_m * scale + 24);
    s += fmt::format("<title>Epoch {} {}</title>\n", fig.epoch_number, to_string(fig.method));
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& b : scene.buildings)
    {
        if (!b.footprint.bounds().overlaps(view))
            continue;
        s += fmt::format("<polygon class=\"building\" points=\"{}\" fill=\"#9e9e9e\" stroke=\"#424242\"/>\n",
                         points(b.footprint, f));
    }
    s += fmt::format("<polygon class=\"bounds\" points=\"{}\" fill=\"none\" stroke=\"#1565c0\" "
                     "stroke-dasharray=\"6 4\"/>\n",
                     points(scene.bounds, f));
    for (const auto& part : fig.aoi.parts())
    {
        s += fmt::format("<polygon class=\"aoi\" points=\"{}\" fill=\"#43a047\" fill-opacity=\"0.5\" "
                         "stroke=\"#1b5e20\" stroke-width=\"0.5\"/>\n",
                         points(part, f));
    }
    std::string track;
    for (const auto& p : scene.trajectory)
        track += (track.empty() ? "" : " ") + f(p);
    if (!track.empty())
        s += fmt::format("<polyline class=\"trajectory\" points=\"{}\" fill=\"none\" stroke=\"#e53935\"/>\n", track);
    const std::string c = f(fig.truth);
    const auto comma = c.find(',');
    s += fmt::format("<circle class=\"truth\" cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"#d81b60\"/>\n", c.substr(0, comma),
                     c.substr(comma + 1));
    s += fmt::format("<text x=\"8\" y=\"{:.0f}\" font-family=\"sans-serif\" font-size=\"14\">epoch {}, {}, {} AOI "
                     "part(s)</text>\n",
                     height_m * scale + 18, fig.epoch_number, to_string(fig.method), fig.aoi.size());
    s += "</svg>\n";
    return s;
}

std::string visible_count_svg(std::span<const int> counts)
{
    const double w = 900.0, h = 300.0, left = 40.0, bottom = 30.0;
    const int top = std::max(1, counts.empty() ? 1 : *std::max_element(counts.begin(), counts.end()));
    const double bar = counts.empty() ? 0.0 : (w - left - 10.0) / static_cast<double>(counts.size());
    std::string s = fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\">\n", w, h);
    s += "<title>Visible satellites per epoch</title>\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const double plot_h = h - bottom - 10.0;
    for (std::size_t i = 0; i < counts.size(); ++i)
    {
        const double bh = plot_h * counts[i] / top;
        s += fmt::format("<rect class=\"count\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
                         "fill=\"#1e88e5\"/>\n",
                         left + bar * static_cast<double>(i), h - bottom - bh, std::max(bar - 1.0, 0.5), bh);
    }
    s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left, h - bottom, w - 10);
    s += fmt::format("<line x1=\"{0}\" y1=\"10\" x2=\"{0}\" y2=\"{1}\" stroke=\"black\"/>\n", left, h - bottom);
    for (int k = 0; k <= top; ++k)
    {
        s += fmt::format("<text x=\"{:.0f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\" "
                         "text-anchor=\"end\">{}</text>\n",
                         left - 4, h - bottom - plot_h * k / top + 4, k);
    }
    s += fmt::format("<text x=\"{:.0f}\" y=\"{:.0f}\" font-family=\"sans-serif\" font-size=\"12\" "
                     "text-anchor=\"middle\">epoch</text>\n",
                     w / 2, h - 8);
    s += "</svg>\n";
    return s;
}

void emit_report(const ExperimentResult& result, const std::filesystem::path& out_dir)
{
    try
    {
        std::filesystem::create_directories(out_dir);
    }
    catch (const std::filesystem::filesystem_error& e)
    {
        throw FormatError(fmt::format("cannot create {}: {}", out_dir.string(), e.what()));
    }
    io::write_text(out_dir / "tables.csv", tables_csv(result));
    io::write_text(out_dir / "report.json", report_json(result));
    io::write_text(out_dir / "outcomes.csv", outcomes_csv(result));
    for (const auto& s : result.seeds)
    {
        io::write_text(out_dir / fmt::format("visible_satellites_seed{}.svg", s.seed), visible_count_svg(s.visible_counts));
        for (const auto& fig : s.figures)
        {
            io::write_text(out_dir / fmt::format("scene_map_seed{}_epoch{:03}_{}.svg", s.seed, fig.epoch_number,
                                                 to_string(fig.method)),
                           scene_map_svg(s.scene, fig));
        }
    }
}

} // namespace zsm::harness
