#include "evodyn/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "evodyn/errors.hpp"

namespace evodyn {

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
  auto same_initial = [&] {
    if (initial.size() != o.initial.size()) return false;
    for (std::size_t i = 0; i < initial.size(); ++i) {
      if (initial[i].first != o.initial[i].first || initial[i].second != o.initial[i].second) return false;
    }
    return true;
  };
  return name == o.name && description == o.description && n == o.n && game_A == o.game_A &&
         game_b == o.game_b && filter == o.filter && rules == o.rules && same_initial() &&
         integrator == o.integrator && analysis == o.analysis && output == o.output;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_identifier(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << source_;
    if (line_ > 0) os << ":" << line_;
    os << ": " << msg;
    throw ConfigError(os.str());
  }

  void set_line(std::size_t line) { line_ = line; }

  double number(const std::string& token) const {
    double v = 0.0;
    const char* first = token.data();
    const char* last = first + token.size();
    if (!token.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) fail("expected a finite number, got '" + token + "'");
    return v;
  }

  long long integer(const std::string& token) const {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) fail("expected an integer, got '" + token + "'");
    return v;
  }

  Vector vector(const std::string& text) const {
    std::string t = text;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream is(t);
    std::vector<double> vals;
    for (std::string tok; is >> tok;) vals.push_back(number(tok));
    if (vals.empty()) fail("expected a vector of numbers");
    return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  }

  Matrix matrix(const std::string& text) const {
    std::vector<Vector> rows;
    std::size_t start = 0;
    while (true) {
      const auto semi = text.find(';', start);
      const std::string row = trim(std::string_view(text).substr(start, semi - start));
      if (!row.empty() || semi != std::string::npos) rows.push_back(vector(row));
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
    if (rows.empty()) fail("expected a matrix");
    const auto cols = rows.front().size();
    Matrix M(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) fail("matrix rows have different lengths");
      M.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    }
    return M;
  }

  // kind(a, b) -> {"kind", {"a", "b"}}
  std::pair<std::string, std::vector<std::string>> call(const std::string& text) const {
    const auto open = text.find('(');
    if (open == std::string::npos) return {trim(text), {}};
    if (text.back() != ')') fail("unbalanced parentheses in '" + text + "'");
    std::vector<std::string> args;
    std::istringstream is(text.substr(open + 1, text.size() - open - 2));
    for (std::string a; std::getline(is, a, ',');) args.push_back(trim(a));
    return {trim(text.substr(0, open)), args};
  }

  TermConfig term(const std::string& value) const {
    std::istringstream is(value);
    std::string cls, weight_tok, rest;
    is >> cls >> weight_tok;
    std::getline(is, rest);
    rest = trim(rest);
    if (cls.empty() || weight_tok.empty() || rest.empty()) {
      fail("term needs '<class> <weight> <kind>', got '" + value + "'");
    }
    TermConfig t;
    t.weight = number(weight_tok);
    if (t.weight < 0.0) fail("term weight must be nonnegative");
    const auto [kind, args] = call(rest);
    auto expect_args = [&](std::size_t n) {
      if (args.size() != n) fail("'" + kind + "' takes " + std::to_string(n) + " argument(s)");
    };
    auto exponent = [&](const std::string& tok) {
      const long long e = integer(tok);
      if (e < 1 || e > 64) fail("exponent must be an integer in [1, 64]");
      return static_cast<int>(e);
    };

    if (cls == "imitation") {
      if (kind == "replicator") {
        expect_args(0);
        t.component = ImitationRule::replicator();
      } else if (kind == "power") {
        expect_args(2);
        t.component = ImitationRule{number(args[0]), exponent(args[1])};
      } else {
        fail("unknown imitation rule '" + kind + "' (expected replicator or power)");
      }
    } else if (cls == "comparison") {
      if (kind == "smith") {
        expect_args(0);
        t.component = ComparisonRule::smith();
      } else if (kind == "power") {
        expect_args(2);
        t.component = ComparisonRule{ComparisonRule::Kind::Power, number(args[0]), exponent(args[1])};
      } else if (kind == "indexed_exp") {
        expect_args(1);
        t.component = ComparisonRule::indexed_exponential(number(args[0]));
      } else {
        fail("unknown comparison rule '" + kind + "' (expected smith, power or indexed_exp)");
      }
    } else if (cls == "excess") {
      if (kind == "bnn") {
        expect_args(0);
        t.component = ExcessRule::bnn();
      } else if (kind == "power") {
        expect_args(2);
        t.component = ExcessRule{ExcessRule::Kind::Power, number(args[0]), exponent(args[1]), 0.0};
      } else if (kind == "abr") {
        expect_args(2);
        try {
          t.component = ExcessRule::approx_best_response(exponent(args[0]), number(args[1]));
        } catch (const InvalidParameter& e) {
          fail(e.what());
        }
      } else {
        fail("unknown excess-payoff rule '" + kind + "' (expected bnn, power or abr)");
      }
    } else {
      fail("unknown rule class '" + cls + "' (expected imitation, comparison or excess)");
    }
    return t;
  }

 private:
  std::string source_;
  std::size_t line_ = 0;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_vector(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += fmt(v(i));
  }
  return out;
}

std::string fmt_matrix(const Matrix& M) {
  std::string out;
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    if (r) out += "; ";
    out += fmt_vector(M.row(r).transpose());
  }
  return out;
}

std::string fmt_term(const TermConfig& t) {
  std::string out;
  std::visit(
      [&](const auto& c) {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, ImitationRule>) {
          out = "imitation " + fmt(t.weight) + " power(" + fmt(c.coef) + ", " + std::to_string(c.exponent) + ")";
        } else if constexpr (std::is_same_v<C, ComparisonRule>) {
          if (c.kind == ComparisonRule::Kind::IndexedExponential) {
            out = "comparison " + fmt(t.weight) + " indexed_exp(" + fmt(c.coef) + ")";
          } else {
            out = "comparison " + fmt(t.weight) + " power(" + fmt(c.coef) + ", " + std::to_string(c.exponent) + ")";
          }
        } else {
          if (c.kind == ExcessRule::Kind::ApproxBestResponse) {
            out = "excess " + fmt(t.weight) + " abr(" + std::to_string(c.exponent) + ", " + fmt(c.eps) + ")";
          } else {
            out = "excess " + fmt(t.weight) + " power(" + fmt(c.coef) + ", " + std::to_string(c.exponent) + ")";
          }
        }
      },
      t.component);
  return out;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::string& source) {
  Parser P(source);
  ScenarioConfig cfg;

  std::string section;
  RuleConfig* rule = nullptr;
  std::set<std::string> seen_sections;
  std::map<std::string, std::set<std::string>> seen_keys;
  std::optional<std::size_t> n_value;
  std::optional<Matrix> game_A, filter_A;
  std::optional<Vector> game_b, filter_b;
  std::optional<double> filter_lambda, filter_k;
  bool have_game = false;

  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    P.set_line(lineno);
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') P.fail("malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!seen_sections.insert(section).second) P.fail("duplicate section [" + section + "]");
      rule = nullptr;
      if (section.rfind("rule.", 0) == 0) {
        const std::string name = section.substr(5);
        if (!valid_identifier(name)) P.fail("rule name '" + name + "' must use letters, digits, '_' or '-'");
        cfg.rules.push_back({name, std::nullopt, {}});
        rule = &cfg.rules.back();
      } else if (section == "game") {
        have_game = true;
      } else if (section != "scenario" && section != "filter" && section != "initial" && section != "integrator" &&
                 section != "analysis" && section != "output") {
        P.fail("unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) P.fail("expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) P.fail("key '" + key + "' appears before any section");
    if (key.empty() || value.empty()) P.fail("empty key or value");
    if (key != "term" && !seen_keys[section].insert(key).second) {
      P.fail("duplicate key '" + key + "' in [" + section + "]");
    }
    auto unknown = [&] { P.fail("unknown key '" + key + "' in [" + section + "]"); };
    auto positive_size = [&](const std::string& v) {
      const long long x = P.integer(v);
      if (x <= 0) P.fail("'" + key + "' must be a positive integer");
      return static_cast<std::size_t>(x);
    };

    if (section == "scenario") {
      if (key == "name") {
        if (!valid_identifier(value)) P.fail("scenario name must use letters, digits, '_' or '-'");
        cfg.name = value;
      } else if (key == "description") {
        cfg.description = value;
      } else if (key == "n") {
        n_value = positive_size(value);
      } else {
        unknown();
      }
    } else if (section == "game") {
      if (key == "type") {
        if (value != "affine") P.fail("only 'affine' games can be configured");
      } else if (key == "A") {
        game_A = P.matrix(value);
      } else if (key == "b") {
        game_b = P.vector(value);
      } else {
        unknown();
      }
    } else if (section == "filter") {
      if (key == "lambda") {
        filter_lambda = P.number(value);
      } else if (key == "k") {
        filter_k = P.number(value);
      } else if (key == "A") {
        filter_A = P.matrix(value);
      } else if (key == "b") {
        filter_b = P.vector(value);
      } else {
        unknown();
      }
    } else if (rule) {
      if (key == "preset") {
        if (!RuleSpec::preset(value)) P.fail("unknown rule preset '" + value + "'");
        rule->preset = value;
      } else if (key == "term") {
        rule->terms.push_back(P.term(value));
      } else {
        unknown();
      }
      if (rule->preset && !rule->terms.empty()) P.fail("rule '" + rule->name + "' mixes a preset with terms");
    } else if (section == "initial") {
      if (!valid_identifier(key)) P.fail("initial condition name must use letters, digits, '_' or '-'");
      cfg.initial.emplace_back(key, P.vector(value));
    } else if (section == "integrator") {
      IntegratorConfig& ic = cfg.integrator;
      if (key == "method") {
        if (value == "rk4") {
          ic.method = IntegratorMethod::Rk4Fixed;
        } else if (value == "rk45") {
          ic.method = IntegratorMethod::Rk45Adaptive;
        } else {
          P.fail("integrator method must be rk4 or rk45");
        }
      } else if (key == "dt") {
        ic.dt = P.number(value);
      } else if (key == "rel_tol") {
        ic.rel_tol = P.number(value);
      } else if (key == "abs_tol") {
        ic.abs_tol = P.number(value);
      } else if (key == "t_max") {
        ic.t_max = P.number(value);
      } else if (key == "stop_speed") {
        ic.stop_speed = P.number(value);
      } else if (key == "record_stride") {
        ic.record_stride = positive_size(value);
      } else if (key == "drift_bound") {
        ic.drift_bound = P.number(value);
      } else {
        unknown();
      }
    } else if (section == "analysis") {
      AnalysisConfig& ac = cfg.analysis;
      if (key == "speed_tol") {
        ac.speed_tol = P.number(value);
      } else if (key == "dist_tol") {
        ac.dist_tol = P.number(value);
      } else if (key == "correlation_tol") {
        ac.correlation_tol = P.number(value);
      } else if (key == "drift_threshold") {
        ac.drift_threshold = P.number(value);
      } else if (key == "zero_tol") {
        ac.zero_tol = P.number(value);
      } else if (key == "ccw_horizon") {
        ac.ccw_horizon = P.number(value);
      } else if (key == "samples") {
        ac.samples = positive_size(value);
      } else if (key == "seed") {
        const long long s = P.integer(value);
        if (s < 0) P.fail("seed must be nonnegative");
        ac.seed = static_cast<std::uint64_t>(s);
      } else {
        unknown();
      }
    } else if (section == "output") {
      if (key == "csv_dir") {
        cfg.output.csv_dir = value;
      } else if (key == "svg_path") {
        cfg.output.svg_path = value;
      } else if (key == "report_path") {
        cfg.output.report_path = value;
      } else if (key == "certify_path") {
        cfg.output.certify_path = value;
      } else {
        unknown();
      }
    } else {
      unknown();
    }
  }

  // Cross-field validation.
  P.set_line(0);
  if (cfg.name.empty()) P.fail("[scenario] needs a name");
  if (!n_value) P.fail("[scenario] needs n");
  cfg.n = *n_value;
  const auto n = static_cast<Eigen::Index>(cfg.n);
  if (!have_game || !game_A || !game_b) P.fail("[game] needs A and b");
  if (game_A->rows() != n || game_A->cols() != n) P.fail("[game] A must be n x n with n = " + std::to_string(n));
  if (game_b->size() != n) P.fail("[game] b must have n = " + std::to_string(n) + " entries");
  cfg.game_A = *game_A;
  cfg.game_b = *game_b;

  if (seen_sections.count("filter")) {
    if (!filter_lambda || !filter_k || !filter_A || !filter_b) P.fail("[filter] needs lambda, k, A and b");
    if (filter_A->rows() != n || filter_A->cols() != n) P.fail("[filter] A must be n x n");
    if (filter_b->size() != n) P.fail("[filter] b must have n entries");
    cfg.filter = FilterConfig{*filter_lambda, *filter_k, *filter_A, *filter_b};
  }

  if (cfg.rules.empty()) P.fail("at least one [rule.<name>] section is required");
  for (const auto& r : cfg.rules) {
    if (!r.preset && r.terms.empty()) P.fail("rule '" + r.name + "' needs a preset or at least one term");
  }
  if (cfg.initial.empty()) P.fail("[initial] needs at least one initial condition");
  std::set<std::string> names;
  for (const auto& [name, v] : cfg.initial) {
    if (!names.insert(name).second) P.fail("initial condition '" + name + "' is defined twice");
    if (v.size() != n) P.fail("initial condition '" + name + "' must have n entries");
    try {
      PopulationState check(v);
    } catch (const InvalidState&) {
      P.fail("initial condition '" + name + "' is not on the simplex");
    }
  }
  try {
    cfg.integrator.validate();
  } catch (const InvalidParameter& e) {
    P.fail(std::string("[integrator] ") + e.what());
  }
  const AnalysisConfig& ac = cfg.analysis;
  if (!(ac.speed_tol > 0.0) || !(ac.dist_tol > 0.0) || !(ac.correlation_tol >= 0.0) || !(ac.drift_threshold >= 0.0) ||
      !(ac.zero_tol > 0.0)) {
    P.fail("[analysis] tolerances must be positive");
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

std::string serialize_scenario(const ScenarioConfig& cfg) {
  auto plain = [](const std::string& s, const char* what) {
    if (s.find_first_of("#\n\r") != std::string::npos || trim(s) != s) {
      throw ConfigError(std::string(what) + " cannot contain '#', line breaks or surrounding blanks");
    }
    return s;
  };
  std::ostringstream os;
  os << "[scenario]\n";
  os << "name = " << plain(cfg.name, "scenario name") << "\n";
  if (!cfg.description.empty()) os << "description = " << plain(cfg.description, "description") << "\n";
  os << "n = " << cfg.n << "\n\n";

  os << "[game]\ntype = affine\n";
  os << "A = " << fmt_matrix(cfg.game_A) << "\n";
  os << "b = " << fmt_vector(cfg.game_b) << "\n\n";

  if (cfg.filter) {
    os << "[filter]\n";
    os << "lambda = " << fmt(cfg.filter->lambda) << "\n";
    os << "k = " << fmt(cfg.filter->k) << "\n";
    os << "A = " << fmt_matrix(cfg.filter->A) << "\n";
    os << "b = " << fmt_vector(cfg.filter->b) << "\n\n";
  }

  for (const auto& r : cfg.rules) {
    os << "[rule." << r.name << "]\n";
    if (r.preset) os << "preset = " << *r.preset << "\n";
    for (const auto& t : r.terms) os << "term = " << fmt_term(t) << "\n";
    os << "\n";
  }

  os << "[initial]\n";
  for (const auto& [name, v] : cfg.initial) os << name << " = " << fmt_vector(v) << "\n";
  os << "\n";

  const IntegratorConfig& ic = cfg.integrator;
  os << "[integrator]\n";
  os << "method = " << (ic.method == IntegratorMethod::Rk4Fixed ? "rk4" : "rk45") << "\n";
  os << "dt = " << fmt(ic.dt) << "\n";
  os << "rel_tol = " << fmt(ic.rel_tol) << "\n";
  os << "abs_tol = " << fmt(ic.abs_tol) << "\n";
  os << "t_max = " << fmt(ic.t_max) << "\n";
  os << "stop_speed = " << fmt(ic.stop_speed) << "\n";
  os << "record_stride = " << ic.record_stride << "\n";
  os << "drift_bound = " << fmt(ic.drift_bound) << "\n\n";

  const AnalysisConfig& ac = cfg.analysis;
  os << "[analysis]\n";
  os << "speed_tol = " << fmt(ac.speed_tol) << "\n";
  os << "dist_tol = " << fmt(ac.dist_tol) << "\n";
  os << "correlation_tol = " << fmt(ac.correlation_tol) << "\n";
  os << "drift_threshold = " << fmt(ac.drift_threshold) << "\n";
  os << "zero_tol = " << fmt(ac.zero_tol) << "\n";
  os << "ccw_horizon = " << fmt(ac.ccw_horizon) << "\n";
  os << "samples = " << ac.samples << "\n";
  os << "seed = " << ac.seed << "\n";

  const OutputConfig& out = cfg.output;
  if (!out.csv_dir.empty() || !out.svg_path.empty() || !out.report_path.empty() || !out.certify_path.empty()) {
    os << "\n[output]\n";
    if (!cfg.output.csv_dir.empty()) os << "csv_dir = " << plain(cfg.output.csv_dir, "csv_dir") << "\n";
    if (!cfg.output.svg_path.empty()) os << "svg_path = " << plain(cfg.output.svg_path, "svg_path") << "\n";
    if (!cfg.output.report_path.empty()) {
      os << "report_path = " << plain(cfg.output.report_path, "report_path") << "\n";
    }
    if (!out.certify_path.empty()) os << "certify_path = " << plain(out.certify_path, "certify_path") << "\n";
  }
  return os.str();
}

MemorylessGame build_game(const ScenarioConfig& cfg) {
  try {
    return MemorylessGame::affine(cfg.game_A, cfg.game_b);
  } catch (const Error& e) {
    throw ConfigError(std::string("[game] ") + e.what());
  }
}

PayoffMechanism build_mechanism(const ScenarioConfig& cfg, bool validate_filter) {
  MemorylessGame game = build_game(cfg);
  if (!cfg.filter) return PayoffMechanism::memoryless(std::move(game));
  try {
    const FilterConfig& f = *cfg.filter;
    LtiFilter filter{f.lambda, f.k, f.A, f.b};
    if (validate_filter) {
      filter = LtiFilter::make(f.lambda, f.k, f.A, f.b);
    } else if (!(f.lambda > 0.0)) {
      throw InvalidParameter("filter rate lambda must be positive");
    }
    return PayoffMechanism::perturbed(std::move(game), std::move(filter), false);
  } catch (const Error& e) {
    throw ConfigError(std::string("[filter] ") + e.what());
  }
}

RuleSpec build_rule(const RuleConfig& rule, bool allow_pure_imitation) {
  const std::string where = "[rule." + rule.name + "] ";
  if (rule.preset) {
    auto spec = RuleSpec::preset(*rule.preset);
    if (!spec) throw ConfigError(where + "unknown preset '" + *rule.preset + "'");
    if (!spec->cone_enforced() && !allow_pure_imitation) {
      throw ConfigError(where + "hybrid cone constraint violated: alpha_CO + alpha_EP must be > 0");
    }
    return spec->cone_enforced() ? RuleSpec::hybrid(spec->terms(), rule.name)
                                 : RuleSpec::unchecked(spec->terms(), rule.name);
  }
  std::vector<RuleTerm> terms;
  for (const auto& t : rule.terms) {
    RuleTerm term;
    term.weight = t.weight;
    std::visit([&](const auto& c) { term.component = c; }, t.component);
    terms.push_back(std::move(term));
  }
  try {
    return RuleSpec::hybrid(terms, rule.name);
  } catch (const InvalidRuleSpec& e) {
    if (!allow_pure_imitation) throw ConfigError(where + e.what());
  }
  try {
    return RuleSpec::unchecked(std::move(terms), rule.name);
  } catch (const Error& e) {
    throw ConfigError(where + e.what());
  }
}

std::vector<RuleSpec> build_rules(const ScenarioConfig& cfg, bool allow_pure_imitation) {
  std::vector<RuleSpec> specs;
  for (const auto& r : cfg.rules) specs.push_back(build_rule(r, allow_pure_imitation));
  return specs;
}

std::vector<PopulationState> build_initial_states(const ScenarioConfig& cfg) {
  std::vector<PopulationState> out;
  for (const auto& [name, v] : cfg.initial) {
    try {
      out.emplace_back(v);
    } catch (const Error& e) {
      throw ConfigError("[initial] " + name + ": " + e.what());
    }
  }
  return out;
}

}  // namespace evodyn
