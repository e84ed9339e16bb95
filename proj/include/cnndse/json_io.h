#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cnndse/accounting.h"
#include "cnndse/fire.h"
#include "cnndse/modkit.h"
#include "cnndse/scale.h"

namespace cnndse {

// Exact integer; a decimal string when it does not fit in 64 bits.
nlohmann::json count_json(Count value);

// Quotient rounded half up to `places` decimals: "1.2876". "undefined" for x/0.
std::string ratio_decimal(const Ratio& ratio, int places = 4);

nlohmann::json shape_json(const TensorShape& shape);
nlohmann::json report_json(const AccountingReport& report);
nlohmann::json delta_json(const DeltaReport& delta);
nlohmann::json sweep_json(const std::vector<SweepPoint>& points, MetaParameter vary);
nlohmann::json scale_json(const ScalingCurve& curve, const ClusterSpec& cluster,
                          const std::optional<TrainPlan>& plan,
                          const AccountingReport& report);

// Request decoding. Unknown keys are rejected; errors carry field paths.
FireMeta meta_from_json(const nlohmann::json& doc, const std::string& where = "meta");
ClusterSpec cluster_from_json(const nlohmann::json& doc,
                              const std::string& where = "cluster");
TrainPlan plan_from_json(const nlohmann::json& doc, const std::string& where = "plan");
Rational rational_from_json(const nlohmann::json& value, const std::string& field);

}  // namespace cnndse
