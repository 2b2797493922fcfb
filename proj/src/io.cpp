#include "kubo/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kubo/error.hpp"

namespace kubo {

using nlohmann::json;

std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& cell, const std::string& name, int row, int col) {
  std::string t = trim(cell);
  double v = 0.0;
  const char* first = t.data();
  const char* last = first + t.size();
  if (!t.empty() && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (t.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    std::ostringstream os;
    os << name << ": row " << row + 1 << ", column " << col + 1 << ": cannot parse '" << t << "'";
    throw UsageError(os.str());
  }
  return v;
}

}  // namespace

SymMatrix parse_matrix_csv(std::istream& in, std::ostream* warn, const std::string& name) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) row.push_back(parse_cell(cell, name, static_cast<int>(rows.size()), col++));
    if (!line.empty() && trim(line).back() == ',') {
      throw UsageError(name + ": trailing comma in row " + std::to_string(rows.size() + 1));
    }
    rows.push_back(std::move(row));
  }
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw ShapeError(name + ": empty matrix");
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != n) {
      std::ostringstream os;
      os << name << ": row " << i + 1 << " has " << rows[static_cast<std::size_t>(i)].size() << " entries, expected "
         << n << " (square matrix)";
      throw ShapeError(os.str());
    }
    for (int j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  const double asym = (m - m.transpose()).norm() * 0.5;
  const double norm = m.norm();
  if (warn && asym > 1e-8 * norm) {
    *warn << "warning: " << name << " is not symmetric (asymmetry " << asym << "); using (A+Aᵀ)/2\n";
  }
  return SymMatrix(m);
}

SymMatrix read_matrix_csv(const std::string& path, std::ostream* warn) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open matrix file '" + path + "'");
  return parse_matrix_csv(in, warn, path);
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

json measure_to_json(const UnitMeasure& m) {
  json j = json::object();
  json atoms = json::array();
  for (const auto& a : m.atoms()) atoms.push_back({a.location, a.weight});
  j["atoms"] = atoms;
  json ac = json::array();
  for (const auto& t : m.ac().terms()) {
    if (t.kind() == DensityKind::psi_image) {
      throw UsageError("measure JSON: half-line image densities have no catalog id");
    }
    json term = {{"id", t.id()}, {"w", t.weight()}};
    if (t.kind() == DensityKind::geometric) term["alpha"] = t.alpha();
    Endpoints e = t.exponents();
    term["exponents"] = {e.p, e.q};
    ac.push_back(term);
  }
  if (!ac.empty()) j["ac"] = ac;
  json sc = json::array();
  for (const auto& part : m.sc()) {
    json maps = json::array();
    for (const auto& f : part.ifs.maps()) maps.push_back({f.ratio, f.shift});
    sc.push_back({{"maps", maps}, {"probs", part.ifs.probs()}, {"weight", part.weight}});
  }
  if (!sc.empty()) j["sc"] = sc;
  if (m.atom_tail_mass() != 0.0) j["tail"] = m.atom_tail_mass();
  return j;
}

namespace {

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw UsageError("measure JSON: " + what + " must be a number");
  return v.get<double>();
}

double weight_of(const json& obj, double fallback = 1.0) {
  if (obj.contains("w")) return number(obj["w"], "w");
  if (obj.contains("weight")) return number(obj["weight"], "weight");
  return fallback;
}

DensityTerm parse_term(const json& t) {
  if (!t.is_object() || !t.contains("id") || !t["id"].is_string()) {
    throw UsageError("measure JSON: each ac entry needs a string 'id'");
  }
  const std::string id = t["id"].get<std::string>();
  const double w = weight_of(t);
  if (id == "lebesgue" || id == "uniform" || id == "dual_log_mean") return DensityTerm::lebesgue(w);
  if (id == "log_mean") return DensityTerm::log_mean(w);
  if (id == "geometric") {
    if (!t.contains("alpha")) throw UsageError("measure JSON: geometric density needs 'alpha'");
    return DensityTerm::geometric(number(t["alpha"], "alpha"), w);
  }
  throw UsageError("measure JSON: unknown density id '" + id + "'");
}

SingularPart parse_sc(const json& s) {
  if (!s.is_object()) throw UsageError("measure JSON: sc entries must be objects");
  if (s.contains("id")) {
    if (s["id"] != "cantor" && s["id"] != "cantor_mean") throw UsageError("measure JSON: unknown sc id");
    return {IfsMeasure::cantor(), weight_of(s)};
  }
  if (!s.contains("maps") || !s.contains("probs")) throw UsageError("measure JSON: sc needs 'maps' and 'probs'");
  std::vector<AffineMap> maps;
  for (const auto& m : s["maps"]) {
    if (!m.is_array() || m.size() != 2) throw UsageError("measure JSON: each map is [ratio, shift]");
    maps.push_back({number(m[0], "ratio"), number(m[1], "shift")});
  }
  std::vector<double> probs;
  for (const auto& p : s["probs"]) probs.push_back(number(p, "prob"));
  return {IfsMeasure(std::move(maps), std::move(probs)), weight_of(s)};
}

}  // namespace

UnitMeasure measure_from_json(const json& j) {
  if (!j.is_object()) throw UsageError("measure JSON: expected an object");
  try {
    UnitMeasure m;
    if (j.contains("atoms")) {
      if (!j["atoms"].is_array()) throw UsageError("measure JSON: 'atoms' must be an array");
      std::vector<Atom> atoms;
      for (const auto& a : j["atoms"]) {
        if (!a.is_array() || a.size() != 2) throw UsageError("measure JSON: each atom is [t, weight]");
        atoms.push_back({number(a[0], "atom location"), number(a[1], "atom weight")});
      }
      m = add(m, UnitMeasure::atomic(atoms));
    }
    if (j.contains("ac")) {
      std::vector<DensityTerm> terms;
      if (j["ac"].is_array()) {
        for (const auto& t : j["ac"]) terms.push_back(parse_term(t));
      } else {
        terms.push_back(parse_term(j["ac"]));
      }
      m = add(m, UnitMeasure::with_density(Density(terms)));
    }
    if (j.contains("sc")) {
      if (j["sc"].is_array()) {
        for (const auto& s : j["sc"]) {
          SingularPart p = parse_sc(s);
          m = add(m, UnitMeasure::singular(p.ifs, p.weight));
        }
      } else {
        SingularPart p = parse_sc(j["sc"]);
        m = add(m, UnitMeasure::singular(p.ifs, p.weight));
      }
    }
    if (j.contains("tail")) m = m.with_atom_tail_mass(number(j["tail"], "tail"));
    return m;
  } catch (const RangeError& e) {
    throw UsageError(std::string("measure JSON: ") + e.what());
  }
}

UnitMeasure parse_measure_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("measure JSON: ") + e.what());
  }
  return measure_from_json(j);
}

}  // namespace kubo
