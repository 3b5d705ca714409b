#include "hbm/model_io.hpp"

#include <fstream>

namespace hbm {

using nlohmann::json;

namespace {

Mat matrix_from_json(const json& rows, const char* name) {
  if (!rows.is_array() || rows.empty())
    throw InvalidInput(std::string("model: '") + name + "' must be a non-empty array of rows");
  const Index n = static_cast<Index>(rows.size());
  Index m = -1;
  Mat out;
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array()) throw InvalidInput(std::string("model: row of '") + name + "' not array");
    if (m < 0) {
      m = static_cast<Index>(row.size());
      out.resize(n, m);
    }
    if (static_cast<Index>(row.size()) != m)
      throw InvalidInput(std::string("model: ragged matrix '") + name + "'");
    for (Index j = 0; j < m; ++j) out(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return out;
}

json matrix_to_json(const Mat& a) {
  json rows = json::array();
  for (Index i = 0; i < a.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(row);
  }
  return rows;
}

std::pair<int, std::optional<int>> dofs_from_json(const json& j) {
  const auto& d = j.at("dofs");
  if (!d.is_array() || d.empty() || d.size() > 2)
    throw InvalidInput("model: 'dofs' must hold one or two indices");
  std::optional<int> second;
  if (d.size() == 2) second = d[1].get<int>();
  return {d[0].get<int>(), second};
}

json dofs_to_json(int i, std::optional<int> j) {
  json d = json::array({i});
  if (j) d.push_back(*j);
  return d;
}

}  // namespace

SystemModel model_from_json(const json& doc) {
  try {
    Mat m = matrix_from_json(doc.at("mass"), "mass");
    Mat k = matrix_from_json(doc.at("stiffness"), "stiffness");
    Mat c = doc.contains("damping") ? matrix_from_json(doc.at("damping"), "damping")
                                    : Mat::Zero(m.rows(), m.cols());

    std::vector<LinearConnector> connectors;
    const json jconn = doc.value("connectors", json::array());
    for (const auto& jc : jconn) {
      LinearConnector lc;
      const auto type = jc.at("type").get<std::string>();
      if (type == "spring") lc.kind = LinearConnector::Kind::spring;
      else if (type == "dashpot") lc.kind = LinearConnector::Kind::dashpot;
      else throw InvalidInput("model: connector type must be spring or dashpot");
      std::tie(lc.dof_i, lc.dof_j) = dofs_from_json(jc);
      lc.value = jc.value("value", 0.0);
      lc.parameter = jc.value("parameter", std::string{});
      connectors.push_back(lc);
    }

    std::vector<NonlinearElement> elements;
    const json jel = doc.value("elements", json::array());
    for (const auto& je : jel) {
      NonlinearElement e;
      e.kind = element_kind_from_string(je.at("kind").get<std::string>());
      std::tie(e.dof_i, e.dof_j) = dofs_from_json(je);
      e.coefficients = je.value("coefficients", std::vector<double>{});
      e.velocity_coefficients = je.value("velocity_coefficients", std::vector<double>{});
      e.clearances = je.value("clearances", std::vector<double>{});
      if (je.contains("regularization")) e.regularization = je.at("regularization").get<double>();
      e.coefficient_parameters =
          je.value("coefficient_parameters", std::vector<std::string>{});
      elements.push_back(std::move(e));
    }

    ForcingSpec forcing;
    const auto& jf = doc.at("forcing");
    const auto amp = jf.at("amplitude").get<std::vector<double>>();
    forcing.amplitude = Eigen::Map<const Vec>(amp.data(), static_cast<Index>(amp.size()));
    forcing.harmonic = jf.value("harmonic", 1);
    forcing.subharmonic = jf.value("subharmonic", 1);

    std::map<std::string, double> parameters;
    const json jp = doc.value("parameters", json::object());
    for (const auto& [name, value] : jp.items()) parameters[name] = value.get<double>();

    return SystemModel(std::move(m), std::move(c), std::move(k), std::move(elements),
                       std::move(forcing), std::move(parameters), std::move(connectors));
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("model: ") + e.what());
  }
}

json model_to_json(const SystemModel& model) {
  json doc;
  doc["mass"] = matrix_to_json(model.mass());
  doc["damping"] = matrix_to_json(model.base_damping());
  doc["stiffness"] = matrix_to_json(model.base_stiffness());
  json connectors = json::array();
  for (const auto& c : model.connectors()) {
    json jc;
    jc["type"] = c.kind == LinearConnector::Kind::spring ? "spring" : "dashpot";
    jc["dofs"] = dofs_to_json(c.dof_i, c.dof_j);
    jc["value"] = c.value;
    if (!c.parameter.empty()) jc["parameter"] = c.parameter;
    connectors.push_back(jc);
  }
  doc["connectors"] = connectors;
  json elements = json::array();
  for (const auto& e : model.element_definitions()) {
    json je;
    je["kind"] = to_string(e.kind);
    je["dofs"] = dofs_to_json(e.dof_i, e.dof_j);
    je["coefficients"] = e.coefficients;
    if (!e.velocity_coefficients.empty()) je["velocity_coefficients"] = e.velocity_coefficients;
    if (!e.clearances.empty()) je["clearances"] = e.clearances;
    if (e.regularization) je["regularization"] = *e.regularization;
    if (!e.coefficient_parameters.empty()) je["coefficient_parameters"] = e.coefficient_parameters;
    elements.push_back(je);
  }
  doc["elements"] = elements;
  const auto& f = model.forcing();
  doc["forcing"] = {{"amplitude", std::vector<double>(f.amplitude.data(),
                                                      f.amplitude.data() + f.amplitude.size())},
                    {"harmonic", f.harmonic},
                    {"subharmonic", f.subharmonic}};
  doc["parameters"] = model.parameters();
  return doc;
}

SystemModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open model file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidInput("model file '" + path + "': " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace hbm
