#include "zsm/scene_io.hpp"

#include "io/json_util.hpp"

namespace zsm::scene
{

namespace
{

using io::json;

template<typename F>
void visit(SceneConfig& c, F&& f)
{
    f("street_width", c.street_width);
    f("street_azimuth_deg", c.street_azimuth_deg);
    f("speed", c.speed);
    f("target_epochs", c.target_epochs);
    f("training_epochs", c.training_epochs);
    f("building_count", c.building_count);
    f("height_min", c.height_min);
    f("height_max", c.height_max);
    f("building_length_min", c.building_length_min);
    f("building_length_max", c.building_length_max);
    f("building_depth_min", c.building_depth_min);
    f("building_depth_max", c.building_depth_max);
    f("gap_min", c.gap_min);
    f("gap_max", c.gap_max);
    f("setback_max", c.setback_max);
    f("chamfer_probability", c.chamfer_probability);
    f("min_clearance", c.min_clearance);
    f("aoi_margin_along", c.aoi_margin_along);
    f("aoi_margin_cross", c.aoi_margin_cross);
    f("antenna_height", c.antenna_height);
    f("constellation_size", c.constellation_size);
    f("elevation_mask_deg", c.elevation_mask_deg);
    f("max_initial_elevation_deg", c.max_initial_elevation_deg);
    f("azimuth_rate_max", c.azimuth_rate_max);
    f("elevation_rate_max", c.elevation_rate_max);
    f("seed", c.seed);
}

template<typename F>
void visit(NoiseConfig& n, F&& f)
{
    f("sigma_los", n.sigma_los);
    f("sigma_nlos", n.sigma_nlos);
    f("nlos_delay_min", n.nlos_delay_min);
    f("nlos_delay_max", n.nlos_delay_max);
    f("nlos_loss", n.nlos_loss);
    f("sigma_cn0", n.sigma_cn0);
    f("cn0_base", n.cn0_base);
    f("cn0_slope", n.cn0_slope);
    f("cn0_min", n.cn0_min);
    f("cn0_max", n.cn0_max);
    f("clock_bias_spread", n.clock_bias_spread);
    f("clock_drift", n.clock_drift);
    f("los_track_probability", n.los_track_probability);
    f("nlos_track_probability", n.nlos_track_probability);
    f("min_tracked", n.min_tracked);
}

const auto visit_scene = [](SceneConfig& c, auto&& f) { visit(c, f); };
const auto visit_noise = [](NoiseConfig& n, auto&& f) { visit(n, f); };

json ring(const ConvexPolygon& p)
{
    json r = json::array();
    for (const auto& v : p.vertices())
        r.push_back(io::point(v));
    return r;
}

ConvexPolygon polygon(const json& j)
{
    if (!j.is_array())
        throw FormatError("polygon: expected an array of points");
    std::vector<Point2> pts;
    for (const auto& p : j)
        pts.push_back(io::point2(p));
    try
    {
        return ConvexPolygon(std::move(pts));
    }
    catch (const std::exception& e)
    {
        throw FormatError(std::string("polygon: ") + e.what());
    }
}

json points(const std::vector<Point2>& pts)
{
    json a = json::array();
    for (const auto& p : pts)
        a.push_back(io::point(p));
    return a;
}

std::vector<Point2> points(const json& j)
{
    std::vector<Point2> out;
    for (const auto& p : j)
        out.push_back(io::point2(p));
    return out;
}

} // namespace

Label parse_label(std::string_view s)
{
    if (s == "LOS")
        return Label::los;
    if (s == "NLOS")
        return Label::nlos;
    throw FormatError("unknown label '" + std::string(s) + "'");
}

std::string to_json(const SceneConfig& cfg) { return io::config_to_json(cfg, visit_scene).dump(2); }
std::string to_json(const NoiseConfig& cfg) { return io::config_to_json(cfg, visit_noise).dump(2); }

SceneConfig scene_config_from_json(std::string_view text)
{
    SceneConfig cfg;
    io::config_from_json(io::parse(text, "scene config"), cfg, visit_scene, "scene config");
    return cfg;
}

NoiseConfig noise_config_from_json(std::string_view text)
{
    NoiseConfig cfg;
    io::config_from_json(io::parse(text, "noise config"), cfg, visit_noise, "noise config");
    return cfg;
}

std::string to_json(const Scene& s)
{
    json j;
    j["format"] = "zsm-urban/scene";
    j["version"] = 1;
    j["seed"] = s.seed();
    j["config"] = io::config_to_json(s.config, visit_scene);
    j["street"] = {{"direction", io::point(s.street_direction)}, {"width", s.config.street_width}};
    j["bounds"] = ring(s.bounds);
    json aoi = json::array();
    for (const auto& p : s.initial_aoi.parts())
        aoi.push_back(ring(p));
    j["initial_aoi"] = aoi;
    json buildings = json::array();
    for (const auto& b : s.buildings)
        buildings.push_back({{"footprint", ring(b.footprint)}, {"height", b.height}});
    j["buildings"] = buildings;
    j["trajectory"] = points(s.trajectory);
    j["training_trajectory"] = points(s.training_trajectory);
    json sky = json::array();
    for (const auto& t : s.sky)
    {
        sky.push_back({{"sat_id", t.sat_id},
                       {"azimuth0_deg", t.azimuth0_deg},
                       {"elevation0_deg", t.elevation0_deg},
                       {"azimuth_rate", t.azimuth_rate},
                       {"elevation_rate", t.elevation_rate}});
    }
    j["sky"] = sky;
    j["clock_bias0"] = s.clock_bias0;
    return j.dump(2) + "\n";
}

Scene scene_from_json(std::string_view text)
{
    const json j = io::parse(text, "scene.json");
    if (io::get<std::string>(j, "format") != "zsm-urban/scene" || io::get<int>(j, "version") != 1)
        throw FormatError("scene.json: unsupported format or version");

    SceneConfig cfg;
    try
    {
        io::config_from_json(j.at("config"), cfg, visit_scene, "scene config");
    }
    catch (const ConfigError& e)
    {
        throw FormatError(e.what());
    }

    std::vector<Building> buildings;
    for (const auto& b : io::get<json>(j, "buildings"))
        buildings.push_back({polygon(io::get<json>(b, "footprint")), io::get<double>(b, "height")});

    std::vector<ConvexPolygon> parts;
    for (const auto& p : io::get<json>(j, "initial_aoi"))
        parts.push_back(polygon(p));

    std::vector<SkyTrack> sky;
    for (const auto& t : io::get<json>(j, "sky"))
    {
        sky.push_back({io::get<SatId>(t, "sat_id"), io::get<double>(t, "azimuth0_deg"),
                       io::get<double>(t, "elevation0_deg"), io::get<double>(t, "azimuth_rate"),
                       io::get<double>(t, "elevation_rate")});
    }

    return Scene{
        .config = cfg,
        .buildings = std::move(buildings),
        .street_direction = io::point2(io::get<json>(io::get<json>(j, "street"), "direction")),
        .bounds = polygon(io::get<json>(j, "bounds")),
        .initial_aoi = RegionSet(std::move(parts)),
        .trajectory = points(io::get<json>(j, "trajectory")),
        .training_trajectory = points(io::get<json>(j, "training_trajectory")),
        .sky = std::move(sky),
        .clock_bias0 = io::get<double>(j, "clock_bias0"),
    };
}

std::string to_json_line(const EpochObservation& e)
{
    json obs = json::array();
    for (const auto& o : e.observations)
    {
        json jo = {{"sat_id", o.sat_id},
                   {"pseudorange", o.pseudorange},
                   {"cn0", o.cn0},
                   {"elevation_deg", o.elevation_deg},
                   {"azimuth_deg", o.azimuth_deg},
                   {"satellite_position", io::point(o.satellite_position)},
                   {"true_range", o.true_range}};
        jo["truth"] = o.truth ? json(std::string(to_string(*o.truth))) : json(nullptr);
        obs.push_back(jo);
    }
    const json j = {{"epoch", e.epoch_index},
                    {"target_road", e.target_road},
                    {"true_position", io::point(e.true_position)},
                    {"antenna_height", e.antenna_height},
                    {"true_clock_bias", e.true_clock_bias},
                    {"observations", obs}};
    return j.dump();
}

EpochObservation epoch_from_json_line(std::string_view line)
{
    const json j = io::parse(line, "epochs.jsonl");
    EpochObservation e;
    e.epoch_index = io::get<int>(j, "epoch");
    e.target_road = io::get<bool>(j, "target_road");
    e.true_position = io::point2(io::get<json>(j, "true_position"));
    e.antenna_height = io::get<double>(j, "antenna_height");
    e.true_clock_bias = io::get<double>(j, "true_clock_bias");
    for (const auto& jo : io::get<json>(j, "observations"))
    {
        RawObservation o;
        o.sat_id = io::get<SatId>(jo, "sat_id");
        o.pseudorange = io::get<double>(jo, "pseudorange");
        o.cn0 = io::get<double>(jo, "cn0");
        o.elevation_deg = io::get<double>(jo, "elevation_deg");
        o.azimuth_deg = io::get<double>(jo, "azimuth_deg");
        o.satellite_position = io::point3(io::get<json>(jo, "satellite_position"));
        o.true_range = io::get<double>(jo, "true_range");
        if (jo.contains("truth") && !jo.at("truth").is_null())
            o.truth = parse_label(jo.at("truth").get<std::string>());
        e.observations.push_back(o);
    }
    return e;
}

void write_scene(const std::filesystem::path& path, const Scene& scene) { io::write_text(path, to_json(scene)); }

Scene read_scene(const std::filesystem::path& path) { return scene_from_json(io::read_text(path)); }

void write_epochs(const std::filesystem::path& path, const std::vector<EpochObservation>& epochs)
{
    std::string text;
    for (const auto& e : epochs)
        text += to_json_line(e) + "\n";
    io::write_text(path, text);
}

std::vector<EpochObservation> read_epochs(const std::filesystem::path& path)
{
    const std::string text = io::read_text(path);
    std::vector<EpochObservation> out;
    std::size_t pos = 0;
    while (pos < text.size())
    {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos)
            end = text.size();
        const std::string_view line(text.data() + pos, end - pos);
        if (line.find_first_not_of(" \t\r") != std::string_view::npos)
            out.push_back(epoch_from_json_line(line));
        pos = end + 1;
    }
    return out;
}

} // namespace zsm::scene
