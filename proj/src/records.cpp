#include "hbm/records.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hbm {

using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string header_line(const CsvMeta& meta) {
  std::ostringstream h;
  h << "# hbm-csv schema=" << csv_schema_version << " kind=" << meta.kind << " dofs=" << meta.dofs
    << " harmonics=" << meta.harmonics << " subharmonic=" << meta.subharmonic
    << " parameter=" << (meta.parameter.empty() ? "-" : meta.parameter);
  return h.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::vector<std::string> branch_columns(const CsvMeta& meta) {
  const Index m = (2 * meta.harmonics + 1) * meta.dofs;
  std::vector<std::string> c = {"index", "omega", "p2"};
  for (Index i = 0; i < m; ++i) c.push_back("z_" + std::to_string(i));
  for (Index d = 0; d < meta.dofs; ++d) c.push_back("amp_" + std::to_string(d));
  for (Index d = 0; d < meta.dofs; ++d) c.push_back("amp_over_F_" + std::to_string(d));
  for (const char* s : {"stability", "marginal", "phi_F", "phi_BP", "phi_NS"}) c.emplace_back(s);
  for (Index k = 0; k < 2 * meta.dofs; ++k) {
    c.push_back("lambda_re_" + std::to_string(k));
    c.push_back("lambda_im_" + std::to_string(k));
  }
  for (Index d = 0; d < meta.dofs; ++d)
    for (int k = 0; k <= meta.harmonics; ++k)
      c.push_back("sigma_" + std::to_string(d) + "_" + std::to_string(k));
  c.emplace_back("iterations");
  c.emplace_back("residual_norm");
  return c;
}

void write_branch_csv(std::ostream& out, const CsvMeta& meta, const std::vector<BranchPoint>& points,
                      const HarmonicGrid& grid, double forcing_scale) {
  const CollocationOperator col(grid);
  const auto columns = branch_columns(meta);
  out << header_line(meta) << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const BranchPoint& p = points[i];
    std::vector<std::string> row = {std::to_string(i), format_double(p.omega),
                                    format_double(p.parameter)};
    for (Index k = 0; k < p.z.size(); ++k) row.push_back(format_double(p.z[k]));
    const Vec amp = peak_amplitudes(col, p.z);
    const double scale = meta.parameter == "F" ? p.parameter : forcing_scale;
    for (Index d = 0; d < amp.size(); ++d) row.push_back(format_double(amp[d]));
    for (Index d = 0; d < amp.size(); ++d)
      row.push_back(format_double(scale != 0.0 && std::isfinite(scale) ? amp[d] / scale : nan));
    row.push_back(to_string(p.stability));
    row.push_back(p.marginal ? "1" : "0");
    row.push_back(format_double(p.tests.fold));
    row.push_back(format_double(p.tests.branch_point));
    row.push_back(format_double(p.tests.neimark_sacker));
    for (Index k = 0; k < 2 * meta.dofs; ++k) {
      const bool have = k < p.floquet.size();
      row.push_back(format_double(have ? p.floquet[k].real() : nan));
      row.push_back(format_double(have ? p.floquet[k].imag() : nan));
    }
    const HarmonicIndicators ind = harmonic_indicators(p.z, grid);
    for (Index d = 0; d < meta.dofs; ++d)
      for (int k = 0; k <= meta.harmonics; ++k) row.push_back(format_double(ind.sigma(d, k)));
    row.push_back(std::to_string(p.iterations));
    row.push_back(format_double(p.residual_norm));
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
}

void write_branch_csv(const std::string& path, const CsvMeta& meta,
                      const std::vector<BranchPoint>& points, const HarmonicGrid& grid,
                      double forcing_scale) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  write_branch_csv(out, meta, points, grid, forcing_scale);
}

Index CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<Index>(i);
  throw InvalidInput("csv: no column '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  return std::strtod(rows.at(row).at(static_cast<std::size_t>(column(name))).c_str(), nullptr);
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# hbm-", 0) != 0)
    throw InvalidInput("csv: missing schema line");
  std::istringstream meta(line.substr(2));
  std::string token;
  meta >> token;
  // plain tables (sweep, validation, convergence) carry their name as kind
  if (token != "hbm-csv") t.meta.kind = token.substr(4);
  while (meta >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = token.substr(0, eq), value = token.substr(eq + 1);
    if (key == "schema") t.schema = std::stoi(value);
    else if (key == "kind") t.meta.kind = value;
    else if (key == "dofs") t.meta.dofs = std::stoi(value);
    else if (key == "harmonics") t.meta.harmonics = std::stoi(value);
    else if (key == "subharmonic") t.meta.subharmonic = std::stoi(value);
    else if (key == "parameter") t.meta.parameter = value;
  }
  if (t.schema != csv_schema_version) throw InvalidInput("csv: unsupported schema version");
  if (!std::getline(in, line)) throw InvalidInput("csv: missing column header");
  t.columns = split(line, ',');
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line, ',');
    if (row.size() != t.columns.size()) throw InvalidInput("csv: ragged row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return read_csv(in);
}

std::vector<BranchPoint> points_from_table(const CsvTable& table) {
  const Index m = (2 * table.meta.harmonics + 1) * table.meta.dofs;
  std::vector<BranchPoint> points;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    BranchPoint p;
    p.omega = table.number(r, "omega");
    p.parameter = table.number(r, "p2");
    p.z.resize(m);
    for (Index k = 0; k < m; ++k) p.z[k] = table.number(r, "z_" + std::to_string(k));
    const std::string s = table.rows[r][static_cast<std::size_t>(table.column("stability"))];
    p.stability = s == "stable" ? Stability::stable
                  : s == "unstable" ? Stability::unstable
                                    : Stability::unknown;
    p.marginal = table.number(r, "marginal") != 0.0;
    p.tests.fold = table.number(r, "phi_F");
    p.tests.branch_point = table.number(r, "phi_BP");
    p.tests.neimark_sacker = table.number(r, "phi_NS");
    std::vector<Complex> fl;
    for (Index k = 0; k < 2 * table.meta.dofs; ++k) {
      const double re = table.number(r, "lambda_re_" + std::to_string(k));
      const double im = table.number(r, "lambda_im_" + std::to_string(k));
      if (std::isnan(re)) break;
      fl.emplace_back(re, im);
    }
    p.floquet = Eigen::Map<const CVec>(fl.data(), static_cast<Index>(fl.size()));
    p.iterations = static_cast<int>(table.number(r, "iterations"));
    p.residual_norm = table.number(r, "residual_norm");
    points.push_back(std::move(p));
  }
  return points;
}

json event_to_json(const Event& e, const std::vector<std::string>& amplitude_labels,
                   const Vec& amplitude) {
  json j;
  j["kind"] = to_string(e.kind);
  j["segment"] = e.segment;
  j["located"] = e.located;
  j["omega"] = number_or_null(e.point.omega);
  j["parameter"] = number_or_null(e.point.parameter);
  j["stability"] = to_string(e.point.stability);
  j["marginal"] = e.point.marginal;
  j["phi_F"] = number_or_null(e.point.tests.fold);
  j["phi_BP"] = number_or_null(e.point.tests.branch_point);
  j["phi_NS"] = number_or_null(e.point.tests.neimark_sacker);
  json fl = json::array();
  for (Index k = 0; k < e.point.floquet.size(); ++k)
    fl.push_back({e.point.floquet[k].real(), e.point.floquet[k].imag()});
  j["floquet"] = fl;
  json amp = json::object();
  for (std::size_t d = 0; d < amplitude_labels.size(); ++d)
    amp[amplitude_labels[d]] = number_or_null(amplitude[static_cast<Index>(d)]);
  j["amplitude"] = amp;
  j["note"] = e.note;
  return j;
}

void write_json(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

void write_table_csv(const std::string& path, const std::string& schema,
                     const std::vector<std::string>& columns,
                     const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << "# " << schema << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

}  // namespace hbm
