#ifndef LIFE_DATASET_IO_HPP
#define LIFE_DATASET_IO_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "life/common.hpp"
#include "life/matrix.hpp"
#include "life/time_series.hpp"

namespace life {

/// JSON-lines dataset: one object per sample with "timestamps", "values"
/// (null where missing), "mask", optional "label" and "id".
inline std::string sample_to_jsonl(const TimeSeriesSample& s) {
  nlohmann::json j;
  if (!s.id.empty()) j["id"] = s.id;
  j["timestamps"] = s.timestamps;
  nlohmann::json values = nlohmann::json::array();
  nlohmann::json mask = nlohmann::json::array();
  for (std::size_t t = 0; t < s.length(); ++t) {
    nlohmann::json vrow = nlohmann::json::array();
    nlohmann::json mrow = nlohmann::json::array();
    for (std::size_t d = 0; d < s.dims(); ++d) {
      if (s.mask(t, d) == 1.0)
        vrow.push_back(s.values(t, d));
      else
        vrow.push_back(nullptr);
      mrow.push_back(static_cast<int>(s.mask(t, d)));
    }
    values.push_back(std::move(vrow));
    mask.push_back(std::move(mrow));
  }
  j["values"] = std::move(values);
  j["mask"] = std::move(mask);
  if (s.has_label) j["label"] = s.label;
  return j.dump();
}

inline void write_dataset_jsonl(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  for (const auto& s : ds.samples) out << sample_to_jsonl(s) << '\n';
}

inline TimeSeriesSample sample_from_json(const nlohmann::json& j, std::size_t line_no) {
  const std::string where = "dataset line " + std::to_string(line_no);
  for (const char* key : {"timestamps", "values", "mask"})
    if (!j.contains(key)) throw InputError(where + ": missing key '" + key + "'");
  std::vector<double> timestamps = j.at("timestamps").get<std::vector<double>>();
  const auto& jv = j.at("values");
  const auto& jm = j.at("mask");
  if (!jv.is_array() || !jm.is_array() || jv.size() != timestamps.size() ||
      jm.size() != timestamps.size())
    throw InputError(where + ": values/mask must be arrays with one row per timestamp");
  const std::size_t T = timestamps.size();
  if (T == 0) throw InputError(where + ": empty series");
  const std::size_t D = jv.front().size();
  Matrix values(T, D, kMissing), mask(T, D, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    if (jv[t].size() != D || jm[t].size() != D)
      throw InputError(where + ": ragged values/mask rows");
    for (std::size_t d = 0; d < D; ++d) {
      const auto& cell = jv[t][d];
      const int m = jm[t][d].get<int>();
      if (m != 0 && m != 1) throw InputError(where + ": mask entries must be 0 or 1");
      mask(t, d) = static_cast<double>(m);
      if (!cell.is_null()) {
        values(t, d) = cell.get<double>();
      } else if (m == 1) {
        throw InputError(where + ": observed entry is null");
      }
    }
  }
  std::string id = j.contains("id") ? j.at("id").get<std::string>()
                                    : "sample-" + std::to_string(line_no);
  TimeSeriesSample s = make_sample(std::move(id), std::move(timestamps), std::move(values),
                                   std::move(mask));
  if (j.contains("label") && !j.at("label").is_null()) {
    s.label = j.at("label").get<double>();
    s.has_label = true;
  }
  return s;
}

inline Dataset read_dataset_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InputError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
    ds.samples.push_back(sample_from_json(j, line_no));
  }
  if (!ds.samples.empty()) validate_dataset(ds);
  return ds;
}

/// Long-format CSV ingestion: rows of (sample_id, t, dim, value) with an
/// optional header. Dimension indices are 0-based; D is one past the largest
/// index seen. With bucket_width > 0, timestamps collapse to bucket left
/// edges and co-bucket observations of a cell are averaged.
inline Dataset dataset_from_csv_long(std::istream& in, double bucket_width = 0.0) {
  if (bucket_width < 0.0) throw InputError("convert: bucket width must be non-negative");
  struct Cell {
    double sum = 0.0;
    std::size_t count = 0;
  };
  // sample -> time -> dim -> running mean; ordered maps keep output stable
  std::map<std::string, std::map<double, std::map<std::size_t, Cell>>> table;
  std::vector<std::string> sample_order;
  std::size_t max_dim = 0;
  std::string line;
  std::size_t line_no = 0;
  bool saw_any = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) fields.push_back(cell);
    if (fields.size() != 4)
      throw InputError("convert line " + std::to_string(line_no) + ": expected 4 fields, got " +
                       std::to_string(fields.size()));
    double t, value;
    std::size_t dim;
    try {
      std::size_t pos = 0;
      t = std::stod(fields[1], &pos);
      if (pos != fields[1].size()) throw std::invalid_argument("trailing characters");
      dim = std::stoul(fields[2], &pos);
      if (pos != fields[2].size()) throw std::invalid_argument("trailing characters");
      value = std::stod(fields[3], &pos);
      if (pos != fields[3].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header row
      throw InputError("convert line " + std::to_string(line_no) + ": malformed numeric field");
    }
    saw_any = true;
    if (bucket_width > 0.0) t = std::floor(t / bucket_width) * bucket_width;
    auto [it, inserted] = table.try_emplace(fields[0]);
    if (inserted) sample_order.push_back(fields[0]);
    Cell& c = it->second[t][dim];
    c.sum += value;
    c.count += 1;
    max_dim = std::max(max_dim, dim);
  }

  Dataset ds;
  if (!saw_any) return ds;  // empty CSV: empty dataset
  const std::size_t D = max_dim + 1;
  for (const std::string& sid : sample_order) {
    const auto& times = table.at(sid);
    std::vector<double> timestamps;
    timestamps.reserve(times.size());
    for (const auto& [t, cells] : times) timestamps.push_back(t);
    const std::size_t T = timestamps.size();
    Matrix values(T, D, kMissing), mask(T, D, 0.0);
    std::size_t row = 0;
    for (const auto& [t, cells] : times) {
      for (const auto& [dim, c] : cells) {
        values(row, dim) = c.sum / static_cast<double>(c.count);
        mask(row, dim) = 1.0;
      }
      ++row;
    }
    ds.samples.push_back(make_sample(sid, std::move(timestamps), std::move(values),
                                     std::move(mask)));
  }
  validate_dataset(ds);
  return ds;
}

inline Dataset read_dataset_csv_long(const std::string& path, double bucket_width = 0.0) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  return dataset_from_csv_long(in, bucket_width);
}

}  // namespace life

#endif  // LIFE_DATASET_IO_HPP
