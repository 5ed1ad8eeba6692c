#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "powerlines/batch_laws.hpp"
#include "powerlines/frontier.hpp"
#include "powerlines/synth_world.hpp"
#include "powerlines/timescale.hpp"

namespace powerlines {

nlohmann::json tau_law_to_json(const TauLaw& law);
TauLaw tau_law_from_json(const nlohmann::json& j);

nlohmann::json batch_law_to_json(const BatchScalingLaw& law);
BatchScalingLaw batch_law_from_json(const nlohmann::json& j);

nlohmann::json crit_point_to_json(const CritPoint& cp);
CritPoint crit_point_from_json(const nlohmann::json& j);

nlohmann::json chinchilla_to_json(const ChinchillaFit& fit);
ChinchillaFit chinchilla_from_json(const nlohmann::json& j);

nlohmann::json world_to_json(const WorldSpec& world);
WorldSpec world_from_json(const nlohmann::json& j);

nlohmann::json load_json(const std::filesystem::path& path);
void save_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace powerlines
