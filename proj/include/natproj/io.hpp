// Copyright 2026 The natproj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// JSON and CSV serialization of sets, configs and projection results. Keys
// keep a fixed order and doubles print in shortest round-trip form, so equal
// values always produce identical bytes.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "natproj/clustering.hpp"
#include "natproj/geometry.hpp"
#include "natproj/ingest.hpp"
#include "natproj/natset.hpp"
#include "natproj/projector.hpp"

namespace natproj {

using Json = nlohmann::ordered_json;

Json to_json(const Polytope& p);
Polytope polytope_from_json(const Json& j);

Json to_json(const ClustererConfig& c);
ClustererConfig clusterer_config_from_json(const Json& j);

Json to_json(const Provenance& p);
Provenance provenance_from_json(const Json& j);

Json to_json(const NaturalisticSet& nset);
NaturalisticSet natset_from_json(const Json& j);

Json to_json(const RegionSpec& r);
RegionSpec region_from_json(const Json& j);

Json to_json(const FilterSpec& f);
FilterSpec filter_from_json(const Json& j);

Json to_json(const ScenarioSpec& s);
ScenarioSpec scenario_from_json(const Json& j);

Json to_json(const ProjectionConfig& c);
ProjectionConfig projection_config_from_json(const Json& j);

/// States and controls as one row per time step. Non-finite objective and
/// bound print as null.
Json to_json(const ProjectionResult& r);
ProjectionResult projection_result_from_json(const Json& j);

/// Columns of `m` as rows: [[m(0,t), m(1,t), ...], ...].
Json columns_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd columns_from_json(const Json& rows, Eigen::Index dim);

/// Throws ParseError naming the path on unreadable or malformed files.
Json read_json(const std::filesystem::path& path);
/// Two-space indent and a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// Header t,k,area,points,outliers.
void write_metrics_csv(std::ostream& out, const SetMetrics& metrics);

}  // namespace natproj
