#ifndef VSGEO_DATASET_HPP
#define VSGEO_DATASET_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vsgeo/errors.hpp"

namespace vsgeo {

struct Location {
  double x = 0.0;
  double y = 0.0;
};

inline bool location_finite(const Location& s) {
  return std::isfinite(s.x) && std::isfinite(s.y);
}

// One covariate column of the design matrix.  Surface terms carry their own
// evaluator so simulated elevation-style covariates can be rebuilt from
// locations alone; custom terms are read from a named file column.
struct DesignTerm {
  enum class Kind { intercept, coord_x, coord_y, surface, custom };
  Kind kind = Kind::intercept;
  std::string column;                              // custom: source column name
  std::function<double(const Location&)> surface;  // surface: h(s)

  static DesignTerm Intercept() { return {Kind::intercept, "intercept", nullptr}; }
  static DesignTerm CoordX() { return {Kind::coord_x, "x", nullptr}; }
  static DesignTerm CoordY() { return {Kind::coord_y, "y", nullptr}; }
  static DesignTerm Surface(std::function<double(const Location&)> h, std::string name = "h") {
    return {Kind::surface, std::move(name), std::move(h)};
  }
  static DesignTerm Custom(std::string column) { return {Kind::custom, std::move(column), nullptr}; }
};

struct DesignSpec {
  std::vector<DesignTerm> terms;

  static DesignSpec intercept_only() { return {{DesignTerm::Intercept()}}; }

  void validate() const {
    if (terms.empty()) throw ParameterError("design: needs at least one term");
    int intercepts = 0;
    for (const auto& t : terms) {
      if (t.kind == DesignTerm::Kind::intercept) ++intercepts;
      if (t.kind == DesignTerm::Kind::surface && !t.surface)
        throw ParameterError("design: surface term without evaluator");
    }
    if (intercepts > 1) throw ParameterError("design: more than one intercept term");
  }
};

// Observations, responses and the design matrix, index-aligned.  Immutable
// after construction; readers may share it freely across threads.
struct SpatialDataset {
  std::vector<Location> locations;
  Eigen::VectorXd values;
  Eigen::MatrixXd covariates;
  std::vector<std::string> column_names;  // one per covariate column
  std::string value_name = "z";

  Eigen::Index n() const { return values.size(); }
  Eigen::Index p() const { return covariates.cols(); }
};

inline void validate_dataset(const SpatialDataset& ds) {
  const auto n = ds.values.size();
  if (n < 1) throw DimensionError("dataset: needs at least one observation");
  if (static_cast<Eigen::Index>(ds.locations.size()) != n)
    throw DimensionError("dataset: locations/values length mismatch");
  if (ds.covariates.rows() != n) throw DimensionError("dataset: covariate rows != n");
  if (ds.covariates.cols() < 1) throw DimensionError("dataset: needs at least one covariate");
  if (static_cast<Eigen::Index>(ds.column_names.size()) != ds.covariates.cols())
    throw DimensionError("dataset: column_names length != covariate columns");
  for (const auto& s : ds.locations)
    if (!location_finite(s)) throw ParseError("dataset: non-finite location");
  if (!ds.values.allFinite()) throw ParseError("dataset: non-finite value");
  if (!ds.covariates.allFinite()) throw ParseError("dataset: non-finite covariate");
}

// Duplicate coordinates are allowed (neighborhood logic treats them as
// distinct observations) but callers may want to surface them.
inline std::size_t duplicate_location_count(const SpatialDataset& ds) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(ds.locations.size());
  for (const auto& s : ds.locations) pts.emplace_back(s.x, s.y);
  std::sort(pts.begin(), pts.end());
  std::size_t dups = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i] == pts[i - 1]) ++dups;
  return dups;
}

inline bool dataset_equal(const SpatialDataset& a, const SpatialDataset& b) {
  if (a.n() != b.n() || a.p() != b.p()) return false;
  for (Eigen::Index i = 0; i < a.n(); ++i)
    if (a.locations[i].x != b.locations[i].x || a.locations[i].y != b.locations[i].y) return false;
  return a.values == b.values && a.covariates == b.covariates && a.column_names == b.column_names;
}

// Evaluates one design-matrix row; row i depends only on location i, the
// source row's custom cells and the spec.
inline double design_cell(const DesignTerm& t, const Location& s,
                          const std::map<std::string, double>* custom_cells) {
  switch (t.kind) {
    case DesignTerm::Kind::intercept: return 1.0;
    case DesignTerm::Kind::coord_x: return s.x;
    case DesignTerm::Kind::coord_y: return s.y;
    case DesignTerm::Kind::surface: return t.surface(s);
    case DesignTerm::Kind::custom: {
      if (!custom_cells) throw SchemaError("design: custom column '" + t.column + "' needs a source row");
      auto it = custom_cells->find(t.column);
      if (it == custom_cells->end())
        throw SchemaError("design: custom column '" + t.column + "' missing");
      return it->second;
    }
  }
  throw ParameterError("design: unknown term kind");
}

struct CsvSchema {
  std::string x_col = "x";
  std::string y_col = "y";
  std::string value_col = "z";
  DesignSpec design = DesignSpec::intercept_only();
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0'))
    throw ParseError("csv: cell '" + cell + "' in column '" + col + "' at data row " +
                     std::to_string(row) + " is not numeric");
  if (!std::isfinite(v))
    throw ParseError("csv: non-finite value in column '" + col + "' at data row " +
                     std::to_string(row));
  return v;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline SpatialDataset read_csv(const std::string& path, const CsvSchema& schema) {
  schema.design.validate();
  std::ifstream in(path);
  if (!in) throw ParseError("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);

  std::map<std::string, std::size_t> col_of;
  for (std::size_t j = 0; j < header.size(); ++j) col_of[header[j]] = j;
  auto require = [&](const std::string& name) {
    auto it = col_of.find(name);
    if (it == col_of.end()) throw SchemaError("csv: column '" + name + "' not found in '" + path + "'");
    return it->second;
  };
  const std::size_t jx = require(schema.x_col);
  const std::size_t jy = require(schema.y_col);
  const std::size_t jz = require(schema.value_col);
  std::vector<std::pair<std::string, std::size_t>> custom_cols;
  for (const auto& t : schema.design.terms)
    if (t.kind == DesignTerm::Kind::custom) custom_cols.emplace_back(t.column, require(t.column));

  SpatialDataset ds;
  std::vector<double> zs;
  std::vector<std::map<std::string, double>> customs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("csv: data row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(header.size()));
    Location s{detail::parse_cell(cells[jx], row, schema.x_col),
               detail::parse_cell(cells[jy], row, schema.y_col)};
    ds.locations.push_back(s);
    zs.push_back(detail::parse_cell(cells[jz], row, schema.value_col));
    std::map<std::string, double> cc;
    for (const auto& [name, j] : custom_cols) cc[name] = detail::parse_cell(cells[j], row, name);
    customs.push_back(std::move(cc));
  }
  if (row == 0) throw ParseError("csv: '" + path + "' has no data rows");

  const auto n = static_cast<Eigen::Index>(row);
  const auto p = static_cast<Eigen::Index>(schema.design.terms.size());
  ds.values = Eigen::Map<Eigen::VectorXd>(zs.data(), n);
  ds.covariates.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      ds.covariates(i, j) = design_cell(schema.design.terms[j], ds.locations[i], &customs[i]);
  for (const auto& t : schema.design.terms) ds.column_names.push_back(t.column);
  ds.value_name = schema.value_col;
  validate_dataset(ds);
  return ds;
}

// Writes x, y, value, any custom covariate columns, then the extra columns.
// Numbers are printed with 17 significant digits so a read_csv round trip
// reproduces every double bit-for-bit.
inline void write_csv(const SpatialDataset& ds, const DesignSpec& design,
                      const std::vector<std::pair<std::string, Eigen::VectorXd>>& extra,
                      const std::string& path, const std::string& x_col = "x",
                      const std::string& y_col = "y") {
  for (const auto& [name, v] : extra)
    if (v.size() != ds.n())
      throw DimensionError("write_csv: extra column '" + name + "' has length " +
                           std::to_string(v.size()) + ", dataset has n=" + std::to_string(ds.n()));
  std::vector<Eigen::Index> custom_idx;
  for (std::size_t j = 0; j < design.terms.size(); ++j)
    if (design.terms[j].kind == DesignTerm::Kind::custom)
      custom_idx.push_back(static_cast<Eigen::Index>(j));

  std::ofstream out(path);
  if (!out) throw ParseError("csv: cannot write '" + path + "'");
  out << x_col << ',' << y_col << ',' << ds.value_name;
  for (auto j : custom_idx) out << ',' << ds.column_names[j];
  for (const auto& [name, v] : extra) out << ',' << name;
  out << '\n';
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    out << detail::format_double(ds.locations[i].x) << ','
        << detail::format_double(ds.locations[i].y) << ','
        << detail::format_double(ds.values[i]);
    for (auto j : custom_idx) out << ',' << detail::format_double(ds.covariates(i, j));
    for (const auto& [name, v] : extra) out << ',' << detail::format_double(v[i]);
    out << '\n';
  }
}

// Row subset preserving order; used by cross-validation folds.
inline SpatialDataset subset(const SpatialDataset& ds, const std::vector<Eigen::Index>& keep) {
  if (keep.empty()) throw DimensionError("subset: empty index set");
  SpatialDataset out;
  out.values.resize(static_cast<Eigen::Index>(keep.size()));
  out.covariates.resize(static_cast<Eigen::Index>(keep.size()), ds.p());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto i = keep[r];
    if (i < 0 || i >= ds.n()) throw DimensionError("subset: index out of range");
    out.locations.push_back(ds.locations[static_cast<std::size_t>(i)]);
    out.values[static_cast<Eigen::Index>(r)] = ds.values[i];
    out.covariates.row(static_cast<Eigen::Index>(r)) = ds.covariates.row(i);
  }
  out.column_names = ds.column_names;
  out.value_name = ds.value_name;
  return out;
}

}  // namespace vsgeo

#endif
