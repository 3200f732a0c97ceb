#include "bsel/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bsel/errors.hpp"

namespace bsel {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::size_t FeatureTable::feature_index(const std::string& name) const {
  auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end())
    throw Error(Errc::unknown_feature, "unknown feature: " + name);
  return static_cast<std::size_t>(it - feature_names.begin());
}

void FeatureTable::validate() const {
  if (rows() == 0 || feature_names.empty())
    throw Error(Errc::empty_table, "table has no rows or no features");
  if (labels.size() != rows() || group_ids.size() != rows())
    throw Error(Errc::dimension_mismatch, "labels/group_ids length does not match row count");
  if (feature_names.size() != values.cols())
    throw Error(Errc::dimension_mismatch, "feature name count does not match column count");
  std::set<std::string> seen(feature_names.begin(), feature_names.end());
  if (seen.size() != feature_names.size())
    throw Error(Errc::duplicate_block_name, "duplicate feature names");
  for (int l : labels)
    if (l != 0 && l != 1) throw Error(Errc::non_binary_label, "label outside {0,1}");
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t c = 0; c < values.cols(); ++c)
      if (!std::isfinite(values(r, c)))
        throw Error(Errc::non_finite_value, "non-finite value at row " + std::to_string(r) +
                                                ", column " + feature_names[c]);
}

FeatureTable load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::empty_table, path + " is empty");
  auto header = split_line(line);
  for (auto& h : header) h = trim(h);

  std::ptrdiff_t group_col = -1, label_col = -1;
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "group_id")
      group_col = static_cast<std::ptrdiff_t>(i);
    else if (header[i] == "label")
      label_col = static_cast<std::ptrdiff_t>(i);
    else {
      feature_cols.push_back(i);
      feature_names.push_back(header[i]);
    }
  }
  if (group_col < 0) throw Error(Errc::missing_column, path + ": missing column group_id");
  if (label_col < 0) throw Error(Errc::missing_column, path + ": missing column label");
  if (feature_names.empty()) throw Error(Errc::empty_table, path + ": no feature columns");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<std::string> group_ids;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size())
      throw Error(Errc::non_numeric_cell,
                  path + ": row " + std::to_string(lineno) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    group_ids.push_back(trim(cells[static_cast<std::size_t>(group_col)]));

    const std::string label_cell = trim(cells[static_cast<std::size_t>(label_col)]);
    if (label_cell != "0" && label_cell != "1")
      throw Error(Errc::non_binary_label,
                  path + ": row " + std::to_string(lineno) + ": label '" + label_cell +
                      "' is not 0 or 1");
    labels.push_back(label_cell == "1" ? 1 : 0);

    std::vector<double> row(feature_cols.size());
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const std::string cell = trim(cells[feature_cols[j]]);
      std::size_t used = 0;
      double v = 0.0;
      bool ok = !cell.empty();
      if (ok) {
        try {
          v = std::stod(cell, &used);
        } catch (const std::exception&) {
          ok = false;
        }
      }
      if (!ok || used != cell.size())
        throw Error(Errc::non_numeric_cell, path + ": row " + std::to_string(lineno) +
                                                ", column " + feature_names[j] +
                                                ": cell '" + cell + "' is not numeric");
      if (!std::isfinite(v))
        throw Error(Errc::non_finite_value, path + ": row " + std::to_string(lineno) +
                                                ", column " + feature_names[j] +
                                                ": non-finite value");
      row[j] = v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(Errc::empty_table, path + ": no data rows");

  FeatureTable table;
  table.feature_names = std::move(feature_names);
  table.values = Matrix(rows.size(), table.feature_names.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) table.values(r, c) = rows[r][c];
  table.labels = std::move(labels);
  table.group_ids = std::move(group_ids);
  table.validate();
  return table;
}

void save_csv(const FeatureTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path);
  out << "group_id,label";
  for (const auto& n : table.feature_names) out << ',' << n;
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << table.group_ids[r] << ',' << table.labels[r];
    for (std::size_t c = 0; c < table.values.cols(); ++c) out << ',' << table.values(r, c);
    out << '\n';
  }
}

PreliminaryBlocks singleton_blocks(const FeatureTable& table) {
  PreliminaryBlocks out;
  for (const auto& f : table.feature_names) out.blocks.emplace_back(f, std::vector<std::string>{f});
  return out;
}

PreliminaryBlocks blocks_from_json_text(const std::string& json_text, const FeatureTable& table) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::io_error, std::string("block mapping is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("blocks") || !doc["blocks"].is_array())
    throw Error(Errc::io_error, "block mapping must be an object with a 'blocks' array");

  PreliminaryBlocks out;
  std::set<std::string> block_names;
  std::set<std::string> assigned;
  for (const auto& b : doc["blocks"]) {
    if (!b.is_object() || !b.contains("name") || !b.contains("features"))
      throw Error(Errc::io_error, "each block needs 'name' and 'features'");
    std::string name = b["name"].get<std::string>();
    if (!block_names.insert(name).second)
      throw Error(Errc::duplicate_block_name, "duplicate block name: " + name);
    std::vector<std::string> feats;
    for (const auto& f : b["features"]) {
      std::string fname = f.get<std::string>();
      table.feature_index(fname);  // throws unknown_feature
      if (!assigned.insert(fname).second)
        throw Error(Errc::duplicate_feature_assignment,
                    "feature assigned to more than one block: " + fname);
      feats.push_back(fname);
    }
    out.blocks.emplace_back(std::move(name), std::move(feats));
  }

  // Unlisted features become singleton blocks named after the feature.
  for (const auto& f : table.feature_names) {
    if (assigned.count(f)) continue;
    if (!block_names.insert(f).second)
      throw Error(Errc::duplicate_block_name,
                  "singleton block for feature '" + f + "' collides with an explicit block name");
    out.blocks.emplace_back(f, std::vector<std::string>{f});
  }
  return out;
}

PreliminaryBlocks load_blocks(const std::string& path, const FeatureTable& table) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return blocks_from_json_text(ss.str(), table);
}

}  // namespace bsel
