#include "kubo/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "kubo/catalog.hpp"
#include "kubo/error.hpp"
#include "kubo/harness.hpp"
#include "kubo/io.hpp"
#include "kubo/random.hpp"

namespace kubo {

namespace {

using nlohmann::json;

struct Options {
  std::string mean;
  std::string a_path;
  std::string b_path;
  std::string out_path;
  std::string meta_path;
  std::string measure_json;
  std::optional<double> tol;
  std::string scheme = "automatic";
  int max_nodes = 4096;
  bool verify = false;
  double verify_tol = 1e-6;

  std::vector<double> xs;
  std::string grid;
  bool closed_form = false;
  int depth = 0;

  int density_grid = 0;
  int moments = 0;

  std::string suite = "all";
  std::string profile = "quick";
  std::uint64_t seed = 1;
  std::optional<int> trials;
  std::optional<int> dim;
  double cond = 100.0;
  bool timings = false;
  int threads = 0;
};

QuadratureSpec make_spec(const Options& o) {
  QuadratureSpec s;
  if (o.tol) s = s.with_tol(*o.tol);
  s.scheme = parse_scheme(o.scheme);
  s.max_nodes = o.max_nodes;
  s.ifs_depth = o.depth;
  if (o.depth > 0) s.scheme = Scheme::ifs_recursion;
  try {
    s.validate();
  } catch (const RangeError& e) {
    throw UsageError(e.what());
  }
  return s;
}

// Writes to a temporary sibling and renames, so readers never see a partial file.
void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + path + "'");
    f << content;
    if (!f) throw UsageError("cannot write '" + path + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw UsageError("cannot write '" + path + "': " + ec.message());
}

Connection connection_from(const Options& o) {
  if (!o.measure_json.empty()) {
    if (!o.mean.empty()) throw UsageError("give either --mean or --measure, not both");
    std::string text = o.measure_json;
    if (!text.empty() && text[0] == '@') {
      std::ifstream f(text.substr(1));
      if (!f) throw UsageError("cannot open measure file '" + text.substr(1) + "'");
      std::stringstream ss;
      ss << f.rdbuf();
      text = ss.str();
    }
    return Connection(parse_measure_json(text), "measure");
  }
  if (o.mean.empty()) throw UsageError("--mean or --measure is required");
  return lookup(o.mean).connection;
}

std::vector<double> parse_grid(const std::string& g) {
  std::vector<std::string> f;
  std::stringstream ss(g);
  std::string item;
  while (std::getline(ss, item, ':')) f.push_back(item);
  if (f.size() != 3) throw UsageError("--grid expects a:b:n");
  double a = 0.0, b = 0.0;
  int n = 0;
  try {
    std::size_t pa = 0, pb = 0, pn = 0;
    a = std::stod(f[0], &pa);
    b = std::stod(f[1], &pb);
    n = std::stoi(f[2], &pn);
    if (pa != f[0].size() || pb != f[1].size() || pn != f[2].size()) throw std::invalid_argument("grid");
  } catch (const std::exception&) {
    throw UsageError("--grid expects a:b:n, got '" + g + "'");
  }
  if (n < 1) throw UsageError("--grid: n must be positive");
  if (!std::isfinite(a) || !std::isfinite(b) || a > b) throw UsageError("--grid: need finite a ≤ b");
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return xs;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  QuadratureSpec spec = make_spec(o);
  CatalogEntry entry = lookup(o.mean);
  SpdMatrix a(read_matrix_csv(o.a_path, &err));
  SpdMatrix b(read_matrix_csv(o.b_path, &err));
  if (a.dim() != b.dim()) {
    throw ShapeError("A is " + std::to_string(a.dim()) + "×" + std::to_string(a.dim()) + " but B is " +
                     std::to_string(b.dim()) + "×" + std::to_string(b.dim()));
  }
  Evaluation ev = evaluate_detailed(entry.connection, a, b, spec);
  SpdMatrix result(SymMatrix(ev.value), default_psd_tolerance(ev.value.norm()) + 10.0 * ev.error);

  json meta = {{"mean", entry.id},          {"dim", a.dim()},
               {"error_estimate", ev.error}, {"nodes", ev.nodes},
               {"regularized", ev.regularized}};
  if (ev.regularized) meta["epsilon"] = ev.epsilon;
  int status = 0;
  if (o.verify) {
    if (!entry.has_closed_matrix()) throw UsageError("--verify: '" + entry.id + "' has no closed form");
    SpdMatrix closed = entry.connection.closed_form()->matrix(a, b);
    const double d = relative_frobenius_distance(result.matrix(), closed.matrix());
    meta["verify"] = {{"relative_frobenius", d}, {"tolerance", o.verify_tol}, {"passed", d <= o.verify_tol}};
    if (!(d <= o.verify_tol)) status = 1;
  }

  std::ostringstream csv;
  write_matrix_csv(csv, result.matrix());
  const std::string meta_text = meta.dump() + "\n";
  if (!o.out_path.empty()) {
    write_atomically(o.out_path, csv.str());
  } else {
    out << csv.str();
  }
  if (!o.meta_path.empty()) {
    write_atomically(o.meta_path, meta_text);
  } else if (!o.out_path.empty()) {
    out << meta_text;
  } else {
    err << meta_text;
  }
  return status;
}

int cmd_f(const Options& o, std::ostream& out) {
  QuadratureSpec spec = make_spec(o);
  CatalogEntry entry = lookup(o.mean);
  std::vector<double> xs = o.xs;
  if (!o.grid.empty()) {
    std::vector<double> g = parse_grid(o.grid);
    xs.insert(xs.end(), g.begin(), g.end());
  }
  if (xs.empty()) throw UsageError("f: give --x or --grid");
  for (double x : xs) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw UsageError("f: x must be finite and non-negative");
  }
  if (o.closed_form && !entry.has_closed_scalar()) {
    throw UsageError("--closed-form: '" + entry.id + "' has no closed-form representing function");
  }
  std::ostringstream csv;
  csv << (o.closed_form ? "x,f,closed_form\n" : "x,f\n");
  for (double x : xs) {
    csv << format_double(x) << ',' << format_double(representing_function(entry.connection, x, spec));
    if (o.closed_form) csv << ',' << format_double(entry.connection.closed_form()->scalar(x));
    csv << '\n';
  }
  if (!o.out_path.empty()) {
    write_atomically(o.out_path, csv.str());
  } else {
    out << csv.str();
  }
  return 0;
}

int cmd_measure(const Options& o, std::ostream& out) {
  QuadratureSpec spec = make_spec(o);
  Connection sigma = connection_from(o);
  const UnitMeasure& mu = sigma.measure();
  if (o.density_grid < 0 || o.moments < 0) throw UsageError("--density-grid and --moments must be non-negative");
  json j = measure_to_json(mu);
  if (!o.mean.empty()) j["id"] = lookup(o.mean).id;
  const double mass = total_mass(mu, spec);
  j["mass"] = mass;
  j["parts"] = {{"ac", density_mass(mu.ac(), spec)}, {"sc", mu.sc_mass()}, {"sd", mu.atom_mass()}};
  j["symmetric"] = is_symmetric(mu, 1e-9, spec);
  j["mean"] = is_mean(sigma, 1e-9, spec);
  if (o.moments > 0) {
    json m = json::array();
    for (int k = 1; k <= o.moments; ++k) {
      m.push_back(integrate_scalar(mu, [k](Point p) { return std::pow(p.t, k); }, spec).value);
    }
    j["moments"] = m;
  }
  if (o.density_grid > 0) {
    json d = json::array();
    for (double t : chebyshev_grid(o.density_grid)) d.push_back({t, mu.ac().empty() ? 0.0 : mu.ac()(t)});
    j["density"] = d;
  }
  out << j.dump() << '\n';
  return 0;
}

int cmd_check(const Options& o, std::ostream& out) {
  const Profile profile = parse_profile(o.profile);
  std::vector<std::string> suites;
  if (o.suite == "all") {
    suites = suite_ids();
  } else {
    default_tolerance(o.suite);
    suites.push_back(o.suite);
  }
  std::vector<CatalogEntry> entries;
  if (o.mean.empty() || o.mean == "all") {
    entries = catalog();
  } else {
    entries.push_back(lookup(o.mean));
  }
  const std::vector<int> dims = o.dim ? std::vector<int>{*o.dim}
                                      : (profile == Profile::quick ? std::vector<int>{4} : std::vector<int>{2, 6, 12});
  const int trials = o.trials ? *o.trials : (profile == Profile::quick ? 20 : 200);

  std::vector<SuiteReport> reports;
  if (o.suite == "all" && !o.trials && !o.dim && (o.mean.empty() || o.mean == "all") && !o.tol && o.cond == 100.0) {
    reports = run_all(profile, o.seed, o.threads);
  } else {
    std::uint64_t k = 0;
    for (const auto& entry : entries) {
      for (const auto& suite : suites) {
        for (int dim : dims) {
          const double tol = o.tol ? *o.tol : default_tolerance(suite);
          reports.push_back(run_suite(suite, entry, trials, dim, o.cond, derive_seed(o.seed, k++), tol, o.threads));
        }
      }
    }
  }
  json j = to_json(reports, o.timings);
  const std::string text = j.dump(2) + "\n";
  if (!o.out_path.empty()) {
    write_atomically(o.out_path, text);
  } else {
    out << text;
  }
  return j["summary"]["passed"].get<bool>() ? 0 : 1;
}

json connection_json(const Connection& c) { return measure_to_json(c.measure()); }

int cmd_decompose(const Options& o, std::ostream& out) {
  QuadratureSpec spec = make_spec(o);
  Connection sigma = connection_from(o);
  ConnectionParts parts = decompose_connection(sigma, spec);
  json j;
  j["parts"] = {{"ac", connection_json(parts.ac)}, {"sc", connection_json(parts.sc)}, {"sd", connection_json(parts.sd)}};
  const double m_ac = density_mass(sigma.measure().ac(), spec);
  const double m_sc = sigma.measure().sc_mass();
  const double m_sd = sigma.measure().atom_mass();
  j["masses"] = {{"ac", m_ac}, {"sc", m_sc}, {"sd", m_sd}};
  j["mass"] = m_ac + m_sc + m_sd;
  const bool mean = is_mean(sigma, 1e-9, spec);
  j["mean"] = mean;
  if (mean) {
    ConvexDecomposition d = mean_convex_decomposition(sigma, 1e-9, spec);
    j["k"] = {d.ac.k, d.sc.k, d.sd.k};
    j["k_sum"] = d.ac.k + d.sc.k + d.sd.k;
  }
  out << j.dump() << '\n';
  return 0;
}

int cmd_catalog(std::ostream& out) {
  json arr = json::array();
  for (const auto& e : catalog()) {
    arr.push_back({{"id", e.id},
                   {"symmetric", e.symmetric},
                   {"mean", e.is_mean},
                   {"closed_matrix", e.has_closed_matrix()},
                   {"closed_scalar", e.has_closed_scalar()},
                   {"measure", measure_to_json(e.connection.measure())}});
  }
  out << arr.dump(2) << '\n';
  return 0;
}

int cmd_nodes(const Options& o, std::ostream& out) {
  QuadratureSpec spec = make_spec(o);
  Connection sigma = connection_from(o);
  const double x = o.xs.empty() ? 2.0 : o.xs.front();
  if (!(x >= 0.0)) throw UsageError("nodes: x must be non-negative");
  auto h = [x](Point p) { return x / (p.tc * x + p.t); };
  std::ostringstream csv;
  csv << "part,t,weight\n";
  for (const auto& r : node_table(sigma.measure(), h, spec)) {
    csv << r.part << ',' << format_double(r.t) << ',' << format_double(r.weight) << '\n';
  }
  if (!o.out_path.empty()) {
    write_atomically(o.out_path, csv.str());
  } else {
    out << csv.str();
  }
  return 0;
}

void add_quadrature_options(CLI::App* c, Options& o) {
  c->add_option("--tol", o.tol, "Quadrature tolerance (absolute and relative)")->check(CLI::PositiveNumber);
  c->add_option("--scheme", o.scheme, "automatic, gauss_legendre, gauss_jacobi, logistic, tanh_sinh, ifs_recursion");
  c->add_option("--max-nodes", o.max_nodes, "Node budget per measure part")->check(CLI::PositiveNumber);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Operator connections and means through their associated measures", "kubo-means"};
  app.require_subcommand(1);

  CLI::App* eval = app.add_subcommand("eval", "Evaluate A σ B; matrix CSV plus JSON metadata");
  eval->add_option("--mean", o.mean, "Mean id")->required();
  eval->add_option("--A", o.a_path, "CSV file for A")->required();
  eval->add_option("--B", o.b_path, "CSV file for B")->required();
  eval->add_option("--out", o.out_path, "Write the matrix here (metadata then goes to stdout)");
  eval->add_option("--meta", o.meta_path, "Write the JSON metadata here");
  eval->add_flag("--verify", o.verify, "Compare against the closed form; exit 1 above --verify-tol");
  eval->add_option("--verify-tol", o.verify_tol, "Relative Frobenius tolerance for --verify")->check(CLI::PositiveNumber);
  add_quadrature_options(eval, o);

  CLI::App* f = app.add_subcommand("f", "Representing function f(x) as x,f CSV");
  f->add_option("--mean", o.mean, "Mean id")->required();
  f->add_option("--x", o.xs, "Points, comma-separated or repeated")->delimiter(',');
  f->add_option("--grid", o.grid, "a:b:n, n equally spaced points");
  f->add_flag("--closed-form", o.closed_form, "Add a closed-form column");
  f->add_option("--depth", o.depth, "IFS cylinder depth (selects ifs_recursion)")->check(CLI::Range(1, 24));
  f->add_option("--out", o.out_path, "Write the CSV here");
  add_quadrature_options(f, o);

  CLI::App* measure = app.add_subcommand("measure", "Associated measure as JSON");
  measure->add_option("--mean", o.mean, "Mean id");
  measure->add_option("--measure", o.measure_json, "Measure JSON (or @file)");
  measure->add_option("--density-grid", o.density_grid, "Sample the density on n Chebyshev points");
  measure->add_option("--moments", o.moments, "First k moments ∫tᵏ dμ");
  add_quadrature_options(measure, o);

  CLI::App* check = app.add_subcommand("check", "Run property suites; JSON reports");
  check->add_option("--suite", o.suite, "Suite id or all");
  check->add_option("--profile", o.profile, "quick or full");
  check->add_option("--seed", o.seed, "Base seed");
  check->add_option("--mean", o.mean, "Restrict to one mean id");
  check->add_option("--trials", o.trials, "Trials per suite")->check(CLI::PositiveNumber);
  check->add_option("--dim", o.dim, "Matrix dimension")->check(CLI::PositiveNumber);
  check->add_option("--cond", o.cond, "Condition number of random SPD inputs")->check(CLI::Range(1.0, 1e12));
  check->add_option("--tol", o.tol, "Violation tolerance (default: per suite)")->check(CLI::PositiveNumber);
  check->add_option("--threads", o.threads, "Worker threads (0: KUBO_MEANS_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
  check->add_flag("--timings", o.timings, "Include wall time in the reports");
  check->add_option("--out", o.out_path, "Write the JSON here");

  CLI::App* decompose = app.add_subcommand("decompose", "Lebesgue decomposition and convex coefficients");
  decompose->add_option("--mean", o.mean, "Mean id");
  decompose->add_option("--measure", o.measure_json, "Measure JSON (or @file)");
  add_quadrature_options(decompose, o);

  CLI::App* cat = app.add_subcommand("catalog", "List the catalog");

  CLI::App* nodes = app.add_subcommand("nodes", "Quadrature nodes and weights used for f(x)");
  nodes->add_option("--mean", o.mean, "Mean id");
  nodes->add_option("--measure", o.measure_json, "Measure JSON (or @file)");
  nodes->add_option("--x", o.xs, "Point x (default 2)")->delimiter(',');
  nodes->add_option("--out", o.out_path, "Write the CSV here");
  add_quadrature_options(nodes, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*eval) return cmd_eval(o, out, err);
    if (*f) return cmd_f(o, out);
    if (*measure) return cmd_measure(o, out);
    if (*check) return cmd_check(o, out);
    if (*decompose) return cmd_decompose(o, out);
    if (*cat) return cmd_catalog(out);
    if (*nodes) return cmd_nodes(o, out);
  } catch (const QuadratureError& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  } catch (const PsdError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const SingularityError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const EigenError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("kubo-means");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace kubo
