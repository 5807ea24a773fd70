#pragma once

// JSON serialization of scenes (scene.json) and epochs (epochs.jsonl, one epoch per line).
// Angles in degrees, lengths in meters. See docs/formats.md for the schema.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "zsm/scene.hpp"

namespace zsm::scene
{

std::string to_json(const Scene& scene);
Scene scene_from_json(std::string_view text);

std::string to_json_line(const EpochObservation& epoch);
EpochObservation epoch_from_json_line(std::string_view line);

std::string to_json(const SceneConfig& cfg);
std::string to_json(const NoiseConfig& cfg);
// Missing keys keep their defaults; unknown keys raise ConfigError.
SceneConfig scene_config_from_json(std::string_view text);
NoiseConfig noise_config_from_json(std::string_view text);

// "LOS" / "NLOS"; anything else raises FormatError.
Label parse_label(std::string_view s);

void write_scene(const std::filesystem::path& path, const Scene& scene);
Scene read_scene(const std::filesystem::path& path);
void write_epochs(const std::filesystem::path& path, const std::vector<EpochObservation>& epochs);
std::vector<EpochObservation> read_epochs(const std::filesystem::path& path);

} // namespace zsm::scene
