#include "cfgtn/io.hpp"

#include <charconv>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "cfgtn/errors.hpp"

namespace cfgtn {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

const json& require(const json& doc, const char* key) {
  if (!doc.contains(key)) throw InputError(std::string("missing field \"") + key + "\"");
  return doc.at(key);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  CsvTable table;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw InputError("empty CSV input");
  table.header = split(line);
  for (const auto& h : table.header) {
    double probe = 0.0;
    const auto r = std::from_chars(h.data(), h.data() + h.size(), probe);
    if (h.empty() || (r.ec == std::errc() && r.ptr == h.data() + h.size())) {
      throw InputError("CSV header row is missing (line " + std::to_string(line_no) + ")");
    }
  }
  const std::size_t p = table.header.size();
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != p) {
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(p) +
                       " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < p; ++j) {
      const auto& f = fields[j];
      double v = 0.0;
      const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || r.ec != std::errc() || r.ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw InputError("line " + std::to_string(line_no) + ", column " + table.header[j] +
                         ": not a finite number: \"" + f + "\"");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw InputError("CSV has no data rows");
  table.values = Eigen::Map<SampleMatrix>(values.data(), static_cast<Eigen::Index>(rows),
                                          static_cast<Eigen::Index>(p));
  return table;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_text_file(path)); }

void write_sample_csv(std::ostream& out, const SampleMatrix& values, const std::string& prefix) {
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    out << (j ? "," : "") << prefix << (j + 1);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      out << (j ? "," : "") << format_double(values(i, j));
    }
    out << '\n';
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << content;
  if (!out) throw InputError("write failed for " + path);
}

std::string model_to_json(const CfgtnModel& model, const std::optional<FitReport>& fit) {
  model.validate();
  json doc;
  doc["dimension"] = model.dimension;
  doc["weights"] = {{"clayton", model.w_clayton},
                    {"frank", model.w_frank},
                    {"gumbel", model.w_gumbel},
                    {"t", model.w_t},
                    {"normal", model.normal_weights}};
  json families = json::array();
  for (const auto& c : model_components(model)) families.push_back(std::string(family_name(c.family)));
  doc["families"] = families;
  doc["clayton_alpha"] = model.alpha_clayton;
  doc["frank_alpha"] = model.alpha_frank;
  doc["gumbel_alpha"] = model.alpha_gumbel;
  doc["t_dof"] = model.nu;
  doc["t_angles"] = model.theta_t.values();
  doc["t_correlation"] = matrix_json(angles_to_correlation(model.theta_t).matrix());
  json angles = json::array();
  json correlations = json::array();
  for (const auto& th : model.theta_normals) {
    angles.push_back(th.values());
    correlations.push_back(matrix_json(angles_to_correlation(th).matrix()));
  }
  doc["normal_angles"] = angles;
  doc["normal_correlations"] = correlations;
  if (fit) {
    doc["loglik"] = fit->loglik;
    doc["df"] = fit->df;
    doc["aicc"] = fit->aicc;
  } else {
    doc["loglik"] = nullptr;
    doc["df"] = nullptr;
    doc["aicc"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

CfgtnModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("model JSON: ") + e.what());
  }
  try {
    CfgtnModel m = CfgtnModel::empty(require(doc, "dimension").get<int>());
    const json& w = require(doc, "weights");
    m.w_clayton = w.value("clayton", 0.0);
    m.w_frank = w.value("frank", 0.0);
    m.w_gumbel = w.value("gumbel", 0.0);
    m.w_t = w.value("t", 0.0);
    m.normal_weights = w.value("normal", std::vector<double>{});
    m.alpha_clayton = require(doc, "clayton_alpha").get<double>();
    m.alpha_frank = require(doc, "frank_alpha").get<double>();
    m.alpha_gumbel = require(doc, "gumbel_alpha").get<double>();
    m.nu = require(doc, "t_dof").get<double>();
    m.theta_t = AngleVector(require(doc, "t_angles").get<std::vector<double>>());
    for (const auto& a : require(doc, "normal_angles")) {
      m.theta_normals.emplace_back(a.get<std::vector<double>>());
    }
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("model JSON: ") + e.what());
  } catch (const DomainError& e) {
    throw InputError(std::string("model JSON: ") + e.what());
  }
}

std::string scenario_to_json(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  json doc;
  doc["name"] = spec.name;
  doc["dimension"] = spec.dimension;
  doc["n"] = spec.n;
  doc["seed"] = seed;
  json comps = json::array();
  for (const auto& c : spec.components) {
    json jc;
    jc["family"] = std::string(family_name(c.family));
    jc["weight"] = c.weight;
    if (c.tau) jc["tau"] = *c.tau;
    if (c.param) jc["param"] = *c.param;
    if (c.family == Family::StudentT) jc["dof"] = c.dof;
    comps.push_back(jc);
  }
  doc["components"] = comps;
  json resolved = json::array();
  for (const auto& c : spec.resolve()) {
    json jc;
    jc["family"] = std::string(family_name(c.family));
    jc["weight"] = c.weight;
    if (is_archimedean(c.family)) {
      jc["alpha"] = c.alpha;
    } else {
      jc["correlation"] = matrix_json(c.correlation.matrix());
      if (c.family == Family::StudentT) jc["dof"] = c.dof;
    }
    resolved.push_back(jc);
  }
  doc["true_parameters"] = resolved;
  return doc.dump(2) + "\n";
}

ScenarioSpec scenario_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    ScenarioSpec spec;
    spec.name = require(doc, "name").get<std::string>();
    spec.dimension = require(doc, "dimension").get<int>();
    spec.n = require(doc, "n").get<std::size_t>();
    for (const auto& jc : require(doc, "components")) {
      ScenarioComponent c;
      c.family = family_from_name(require(jc, "family").get<std::string>());
      c.weight = require(jc, "weight").get<double>();
      if (jc.contains("tau")) c.tau = jc.at("tau").get<double>();
      if (jc.contains("param")) c.param = jc.at("param").get<double>();
      c.dof = jc.value("dof", 0.0);
      spec.components.push_back(c);
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw InputError(std::string("scenario JSON: ") + e.what());
  } catch (const DomainError& e) {
    throw InputError(std::string("scenario JSON: ") + e.what());
  }
}

}  // namespace cfgtn
