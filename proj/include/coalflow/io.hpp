#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "coalflow/flows.hpp"
#include "coalflow/scsm.hpp"

namespace coalflow {

/// Shortest round-trip decimal form.
std::string format_double(double x);

/// "# seed=...; streams: ...; config={...}" comment line opening every CSV.
std::string provenance_line(std::uint64_t seed, const nlohmann::json& config);

/// Columns time, pos_1..pos_m, group_1..group_m (labels and groups 1-based).
void write_bundle_csv(std::ostream& out, const LabeledPathBundle& bundle,
                      const std::string& provenance);
nlohmann::json bundle_summary(const LabeledPathBundle& bundle);

/// Columns time, atom_id, position, mass, group_id.
void write_measure_csv(std::ostream& out, const MeasurePath& path, const std::string& provenance);

/// Plain numeric table.
void write_table_csv(std::ostream& out, const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows, const std::string& provenance);

void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace coalflow
