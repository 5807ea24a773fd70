#include "zsm/features.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>

#include "io/json_util.hpp"
#include "zsm/errors.hpp"
#include "zsm/scene_io.hpp"

namespace zsm::features
{

namespace
{

struct Linearization
{
    GeometryMatrix G;
    Eigen::VectorXd rho; // linearized pseudoranges: rho_i - |s_i - x0| - u_i . x0
};

Linearization linearize(const scene::EpochObservation& epoch, const Eigen::Vector3d& x0)
{
    const auto n = static_cast<Eigen::Index>(epoch.observations.size());
    Linearization lin{GeometryMatrix(n, 4), Eigen::VectorXd(n)};
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const auto& o = epoch.observations[static_cast<std::size_t>(i)];
        const Eigen::Vector3d d = o.satellite_position - x0;
        const double range = d.norm();
        const Eigen::Vector3d u = d / range;
        lin.G.row(i) << -u.transpose(), 1.0;
        lin.rho(i) = o.pseudorange - range - u.dot(x0);
    }
    return lin;
}

double parse_double(std::string_view s, std::size_t line)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        throw FormatError(fmt::format("csv line {}: bad number '{}'", line, s));
    return v;
}

} // namespace

LeastSquaresResult solve_least_squares(const scene::EpochObservation& epoch, const Eigen::Vector3d& initial_position,
                                       const LsOptions& options)
{
    if (epoch.observations.size() < 4)
        throw DegenerateGeometryError(
            fmt::format("least squares needs four satellites, epoch {} has {}", epoch.epoch_index,
                        epoch.observations.size()));

    Eigen::Vector4d x(initial_position.x(), initial_position.y(), initial_position.z(), 0.0);
    LeastSquaresResult out;
    for (int it = 0; it < options.max_iterations; ++it)
    {
        Linearization lin = linearize(epoch, x.head<3>());
        const Eigen::Matrix4d N = lin.G.transpose() * lin.G;
        const Eigen::JacobiSVD<Eigen::Matrix4d> svd(N);
        const auto& sv = svd.singularValues();
        if (!(sv(3) > 0.0) || sv(0) / sv(3) > options.max_condition)
            throw DegenerateGeometryError(
                fmt::format("ill-conditioned geometry at epoch {} (cond {:.3g})", epoch.epoch_index, sv(0) / sv(3)));

        const Eigen::Vector4d next = lin.G.colPivHouseholderQr().solve(lin.rho);
        const double step = (next.head<3>() - x.head<3>()).norm();
        out.step_norms.push_back(step);
        x = next;
        if (step < options.step_tolerance)
        {
            out.estimate = {x.head<3>(), x(3)};
            out.residuals = compute_residuals(lin.rho, lin.G, out.estimate);
            out.G = std::move(lin.G);
            out.pseudoranges = std::move(lin.rho);
            return out;
        }
    }
    throw LeastSquaresConvergenceError(
        fmt::format("least squares did not converge in {} iterations at epoch {}", options.max_iterations,
                    epoch.epoch_index),
        out.step_norms);
}

Eigen::VectorXd compute_residuals(const Eigen::VectorXd& rho, const GeometryMatrix& G, const ReceiverEstimate& p)
{
    if (rho.size() != G.rows())
        throw std::invalid_argument("compute_residuals: rho and G row counts differ.");
    return rho - G * p.state();
}

std::vector<LabeledSample> extract_features(const scene::EpochObservation& epoch,
                                            const Eigen::Vector3d& initial_position, const LsOptions& options)
{
    const LeastSquaresResult ls = solve_least_squares(epoch, initial_position, options);
    std::vector<LabeledSample> out;
    for (std::size_t i = 0; i < epoch.observations.size(); ++i)
    {
        const auto& o = epoch.observations[i];
        out.push_back({epoch.epoch_index, o.sat_id,
                       {o.elevation_deg, o.cn0, ls.residuals(static_cast<Eigen::Index>(i))}, o.truth});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const LabeledSample& a, const LabeledSample& b) { return a.sat_id < b.sat_id; });
    return out;
}

Dataset to_dataset(const std::vector<LabeledSample>& samples)
{
    Dataset d;
    d.X.resize(static_cast<Eigen::Index>(samples.size()), feature_count);
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        if (!samples[i].label)
            throw std::invalid_argument("to_dataset: unlabeled sample.");
        d.X.row(static_cast<Eigen::Index>(i)) = samples[i].features.values().transpose();
        d.y.push_back(*samples[i].label);
    }
    return d;
}

SplitSamples build_samples(const scene::Scene& scene, const std::vector<scene::EpochObservation>& epochs)
{
    const geom::Point2 mid = scene.street_midpoint();
    const Eigen::Vector3d x0(mid.x(), mid.y(), 0.0);
    SplitSamples out;
    for (const auto& e : epochs)
    {
        try
        {
            auto samples = extract_features(e, x0);
            auto& dst = e.target_road ? out.test : out.train;
            dst.insert(dst.end(), samples.begin(), samples.end());
        }
        catch (const DegenerateGeometryError&)
        {
            ++out.skipped_epochs;
        }
        catch (const LeastSquaresConvergenceError&)
        {
            ++out.skipped_epochs;
        }
    }
    return out;
}

std::string to_csv(const Dataset& d)
{
    std::string out = "elevation_deg,cn0_dbhz,residual_m,label\n";
    for (Eigen::Index i = 0; i < d.X.rows(); ++i)
    {
        out += fmt::format("{},{},{},{}\n", d.X(i, 0), d.X(i, 1), d.X(i, 2),
                           zsm::to_string(d.y[static_cast<std::size_t>(i)]));
    }
    return out;
}

Dataset dataset_from_csv(const std::string& text)
{
    std::vector<std::array<double, 3>> rows;
    std::vector<Label> labels;
    std::size_t pos = 0, line_no = 0;
    bool header = true;
    while (pos < text.size())
    {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos)
            end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty())
            continue;
        if (header)
        {
            if (line != "elevation_deg,cn0_dbhz,residual_m,label")
                throw FormatError("csv: unexpected header");
            header = false;
            continue;
        }
        std::array<std::string_view, 4> cells;
        std::size_t start = 0;
        for (int c = 0; c < 4; ++c)
        {
            const std::size_t comma = c < 3 ? line.find(',', start) : line.size();
            if (comma == std::string_view::npos)
                throw FormatError(fmt::format("csv line {}: expected 4 fields", line_no));
            cells[static_cast<std::size_t>(c)] = line.substr(start, comma - start);
            start = comma + 1;
        }
        if (cells[3].find(',') != std::string_view::npos)
            throw FormatError(fmt::format("csv line {}: expected 4 fields", line_no));
        rows.push_back({parse_double(cells[0], line_no), parse_double(cells[1], line_no),
                        parse_double(cells[2], line_no)});
        labels.push_back(scene::parse_label(cells[3]));
    }
    if (header)
        throw FormatError("csv: missing header");
    Dataset d;
    d.X.resize(static_cast<Eigen::Index>(rows.size()), feature_count);
    for (std::size_t i = 0; i < rows.size(); ++i)
        d.X.row(static_cast<Eigen::Index>(i)) << rows[i][0], rows[i][1], rows[i][2];
    d.y = std::move(labels);
    return d;
}

void write_csv(const std::filesystem::path& path, const Dataset& d) { io::write_text(path, to_csv(d)); }

Dataset read_csv(const std::filesystem::path& path) { return dataset_from_csv(io::read_text(path)); }

} // namespace zsm::features
