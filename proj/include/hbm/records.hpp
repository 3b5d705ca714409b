#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbm/bifurcation.hpp"
#include "hbm/harmonic.hpp"

namespace hbm {

/// Normalized harmonic content per DOF: row d holds sigma_0..sigma_NH with
/// phi_0 = |c_0| / sqrt2 and phi_k = sqrt(s_k^2 + c_k^2). A DOF with zero
/// response gets a zero row and `defined[d] = false`.
struct HarmonicIndicators {
  Mat sigma;
  std::vector<bool> defined;
};
HarmonicIndicators harmonic_indicators(const Vec& z, const HarmonicGrid& grid);

/// Branch / curve CSV, schema version 1.
///
///   # hbm-csv schema=1 kind=<branch|fold|neimark_sacker> dofs=<n> harmonics=<N_H>
///     subharmonic=<nu> parameter=<p2 name or ->
///   index,omega,p2,z_0..z_{m-1},amp_0..amp_{n-1},amp_over_F_0..,stability,marginal,
///   phi_F,phi_BP,phi_NS,lambda_re_0,lambda_im_0,..(2n),sigma_<d>_<k>..,iterations,residual_norm
///
/// Every float is written with 17 significant digits; NaN as "nan".
inline constexpr int csv_schema_version = 1;

struct CsvMeta {
  std::string kind = "branch";
  Index dofs = 1;
  int harmonics = 1;
  int subharmonic = 1;
  std::string parameter = "-";
};

std::string format_double(double x);
std::vector<std::string> branch_columns(const CsvMeta& meta);

void write_branch_csv(std::ostream& out, const CsvMeta& meta, const std::vector<BranchPoint>& points,
                      const HarmonicGrid& grid, double forcing_scale);
void write_branch_csv(const std::string& path, const CsvMeta& meta,
                      const std::vector<BranchPoint>& points, const HarmonicGrid& grid,
                      double forcing_scale);

struct CsvTable {
  CsvMeta meta;
  int schema = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  Index column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};
/// Reads branch/curve CSVs and the plain "# hbm-<name> schema=1" tables.
CsvTable read_csv(const std::string& path);
CsvTable read_csv(std::istream& in);
/// Rebuilds points (z, omega, p2, stability, tests, Floquet exponents).
std::vector<BranchPoint> points_from_table(const CsvTable& table);

nlohmann::json event_to_json(const Event& e, const std::vector<std::string>& amplitude_labels,
                             const Vec& amplitude);
void write_json(const std::string& path, const nlohmann::json& doc);
/// Plain numeric table with a schema comment line.
void write_table_csv(const std::string& path, const std::string& schema,
                     const std::vector<std::string>& columns,
                     const std::vector<std::vector<std::string>>& rows);

}  // namespace hbm
