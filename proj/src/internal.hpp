#pragma once

#include "json.hpp"
#include "treeflow/channel.hpp"

namespace treeflow {

// Shared by the serialization and experiment translation units.
Channel channel_from_json_value(const nlohmann::json& j);

}  // namespace treeflow
