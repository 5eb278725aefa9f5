#include "coalflow/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "coalflow/errors.hpp"
#include "coalflow/rng.hpp"

namespace coalflow {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string provenance_line(std::uint64_t seed, const nlohmann::json& config) {
  return "# seed=" + std::to_string(seed) + "; streams: " + stream_policy_description() +
         "; config=" + config.dump();
}

void write_bundle_csv(std::ostream& out, const LabeledPathBundle& bundle,
                      const std::string& provenance) {
  out << provenance << "\n";
  out << "time";
  for (std::size_t i = 0; i < bundle.labels; ++i) out << ",pos_" << i + 1;
  for (std::size_t i = 0; i < bundle.labels; ++i) out << ",group_" << i + 1;
  out << "\n";
  for (std::size_t k = 0; k < bundle.grid.points(); ++k) {
    out << format_double(bundle.grid.time(k));
    for (std::size_t i = 0; i < bundle.labels; ++i) out << ',' << format_double(bundle.position(i, k));
    for (std::size_t i = 0; i < bundle.labels; ++i) out << ',' << bundle.group(i, k) + 1;
    out << "\n";
  }
}

nlohmann::json bundle_summary(const LabeledPathBundle& bundle) {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : bundle.merges) {
    merges.push_back({{"time", m.time}, {"left", m.left + 1}, {"right", m.right + 1}});
  }
  nlohmann::json j{{"labels", bundle.labels},
                   {"horizon", bundle.grid.horizon},
                   {"steps", bundle.grid.steps},
                   {"speed", bundle.speed},
                   {"merges", merges}};
  if (std::isfinite(bundle.min_eigenvalue)) j["min_eigenvalue"] = bundle.min_eigenvalue;
  return j;
}

void write_measure_csv(std::ostream& out, const MeasurePath& path, const std::string& provenance) {
  out << provenance << "\n";
  out << "time,atom_id,position,mass,group_id\n";
  for (std::size_t k = 0; k < path.points(); ++k) {
    for (std::size_t i = 0; i < path.atoms; ++i) {
      const double m = path.mass[path.index(k, i)];
      if (path.prune && m == 0.0) continue;
      out << format_double(path.times[k]) << ',' << i + 1 << ','
          << format_double(path.position[path.index(k, i)]) << ',' << format_double(m) << ','
          << path.group[path.index(k, i)] + 1 << "\n";
    }
  }
}

void write_table_csv(std::ostream& out, const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows, const std::string& provenance) {
  out << provenance << "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << "\n";
  }
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot open " + file.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + file.string());
}

}  // namespace coalflow
