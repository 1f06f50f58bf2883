#pragma once

#include "edgeperf/profiles.hpp"
#include "json.hpp"

namespace edgeperf::detail {

nlohmann::ordered_json power_json(const PiecewisePowerModel& p);
nlohmann::ordered_json energy_json(const PiecewiseEnergyModel& e);

}  // namespace edgeperf::detail
