#include "mvhedge/config.hpp"

#include "mvhedge/analytic.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace mvhedge {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Where an error happened, for "file:line: key 'k': ..." diagnostics.
struct At {
  const std::string& file;
  int line;
  std::string key;

  [[noreturn]] void err(const std::string& msg) const {
    std::string where = file + ":" + std::to_string(line) + ": ";
    if (!key.empty()) where += "key '" + key + "': ";
    fail(where + msg);
  }
};

template <class T>
T number(const At& at, const std::string& v) {
  T out{};
  const char* b = v.data();
  const char* e = b + v.size();
  auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc{} || p != e) at.err("expected a number, got '" + v + "'");
  return out;
}

bool boolean(const At& at, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  at.err("expected true or false, got '" + v + "'");
}

template <class T>
std::vector<T> number_list(const At& at, const std::string& v) {
  std::vector<T> out;
  std::istringstream is(v);
  std::string tok;
  while (is >> tok) out.push_back(number<T>(at, tok));
  if (out.empty()) at.err("expected a list of numbers");
  return out;
}

std::string format(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);  // shortest round trip
  return std::string(buf, p);
}

}  // namespace

TradingSchedule ExperimentConfig::schedule() const {
  if (n_dates > 0) return TradingSchedule::equally_spaced(market.maturity, n_dates);
  TradingSchedule s{explicit_dates};
  s.validate(market.maturity);
  return s;
}

double ExperimentConfig::resolve_x0() const {
  if (!x0_analytic) return constraints.x0;
  return value({0.0, market.d0, market.f0}, market);
}

ExperimentConfig ExperimentConfig::parse(std::istream& is, const std::string& name) {
  ExperimentConfig cfg;
  std::string section;
  std::set<std::string> seen_sections, seen_keys;
  bool have_n_dates = false, have_dates = false;

  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    if (const auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      At at{name, lineno, ""};
      if (line.back() != ']') at.err("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      static const std::set<std::string> known = {"market", "schedule", "constraints",
                                                  "solver", "eval",     "convergence"};
      if (!known.count(section)) at.err("unknown section [" + section + "]");
      if (!seen_sections.insert(section).second) at.err("duplicate section [" + section + "]");
      continue;
    }

    const auto eq = line.find('=');
    At at{name, lineno, ""};
    if (eq == std::string::npos) at.err("expected 'key = value'");
    at.key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (at.key.empty()) at.err("empty key");
    if (value.empty()) at.err("missing value");
    if (section.empty()) at.err("appears before any [section]");
    if (!seen_keys.insert(section + "." + at.key).second) at.err("duplicate key");

    if (section == "market") {
      static const std::pair<const char*, double MarketParams::*> fields[] = {
          {"f0", &MarketParams::f0},           {"sigma_e", &MarketParams::sigma_e},
          {"a_e", &MarketParams::a_e},         {"d_hat", &MarketParams::d_hat},
          {"d0", &MarketParams::d0},           {"sigma_d", &MarketParams::sigma_d},
          {"a_d", &MarketParams::a_d},         {"rho", &MarketParams::rho},
          {"maturity", &MarketParams::maturity}};
      bool hit = false;
      for (const auto& [k, member] : fields)
        if (at.key == k) {
          cfg.market.*member = number<double>(at, value);
          hit = true;
          break;
        }
      if (!hit) at.err("unknown key in [market]");
    } else if (section == "schedule") {
      if (at.key == "n_dates") {
        cfg.n_dates = number<int>(at, value);
        if (cfg.n_dates < 2) at.err("need at least two trading dates");
        have_n_dates = true;
      } else if (at.key == "dates") {
        cfg.explicit_dates = number_list<double>(at, value);
        have_dates = true;
      } else {
        at.err("unknown key in [schedule]");
      }
    } else if (section == "constraints") {
      if (at.key == "lambda") cfg.constraints.lambda = number<double>(at, value);
      else if (at.key == "m_bar") cfg.constraints.m_bar = number<double>(at, value);
      else if (at.key == "l_bar") cfg.constraints.l_bar = number<double>(at, value);
      else if (at.key == "xi") cfg.constraints.xi = number<double>(at, value);
      else if (at.key == "pos_min") cfg.constraints.pos_min = number<double>(at, value);
      else if (at.key == "pos_max") cfg.constraints.pos_max = number<double>(at, value);
      else if (at.key == "x0") {
        if (value == "analytic") {
          cfg.x0_analytic = true;
        } else {
          cfg.x0_analytic = false;
          cfg.constraints.x0 = number<double>(at, value);
        }
      } else at.err("unknown key in [constraints]");
    } else if (section == "solver") {
      if (at.key == "algo") {
        try {
          cfg.solver.algo = algorithm_from_name(value);
        } catch (const std::exception& e) {
          at.err(e.what());
        }
      } else if (at.key == "n_f") cfg.solver.n_f = number<int>(at, value);
      else if (at.key == "n_d") cfg.solver.n_d = number<int>(at, value);
      else if (at.key == "paths") cfg.solver.paths = number<std::size_t>(at, value);
      else if (at.key == "seed") cfg.solver.seed = number<std::uint64_t>(at, value);
      else if (at.key == "optimize_x") cfg.solver.optimize_x = boolean(at, value);
      else at.err("unknown key in [solver]");
    } else if (section == "eval") {
      if (at.key == "paths") cfg.eval.paths = number<std::size_t>(at, value);
      else if (at.key == "seed") cfg.eval.seed = number<std::uint64_t>(at, value);
      else if (at.key == "runs") cfg.eval.runs = number<int>(at, value);
      else if (at.key == "strategies") {
        cfg.eval.strategies.clear();
        std::istringstream toks(value);
        std::string tok;
        while (toks >> tok) {
          if (tok != "numerical" && tok != "analytic" && tok != "delta" && tok != "nohedge")
            at.err("unknown strategy '" + tok + "'");
          cfg.eval.strategies.push_back(tok);
        }
      } else at.err("unknown key in [eval]");
    } else {  // convergence
      if (at.key == "mesh") cfg.convergence.mesh = number_list<int>(at, value);
      else if (at.key == "paths_per_cell")
        cfg.convergence.paths_per_cell = number<std::size_t>(at, value);
      else if (at.key == "paths") cfg.convergence.paths = number_list<std::size_t>(at, value);
      else if (at.key == "runs") cfg.convergence.runs = number<int>(at, value);
      else at.err("unknown key in [convergence]");
    }
  }

  for (const char* s : {"market", "schedule", "constraints", "solver", "eval"})
    if (!seen_sections.count(s)) fail(name + ": missing required section [" + std::string(s) + "]");
  if (have_n_dates && have_dates)
    fail(name + ": [schedule] takes n_dates or an explicit dates list, not both");
  if (!have_n_dates && !have_dates) fail(name + ": [schedule] needs n_dates or dates");
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("cannot open config file: " + path);
  return parse(is, path);
}

void ExperimentConfig::emit(std::ostream& os) const {
  os << "[market]\n";
  os << "f0 = " << format(market.f0) << '\n';
  os << "sigma_e = " << format(market.sigma_e) << '\n';
  os << "a_e = " << format(market.a_e) << '\n';
  os << "d_hat = " << format(market.d_hat) << '\n';
  os << "d0 = " << format(market.d0) << '\n';
  os << "sigma_d = " << format(market.sigma_d) << '\n';
  os << "a_d = " << format(market.a_d) << '\n';
  os << "rho = " << format(market.rho) << '\n';
  os << "maturity = " << format(market.maturity) << '\n';

  os << "\n[schedule]\n";
  if (n_dates > 0) {
    os << "n_dates = " << n_dates << '\n';
  } else {
    os << "dates =";
    for (double t : explicit_dates) os << ' ' << format(t);
    os << '\n';
  }

  os << "\n[constraints]\n";
  os << "lambda = " << format(constraints.lambda) << '\n';
  os << "m_bar = " << format(constraints.m_bar) << '\n';
  os << "l_bar = " << format(constraints.l_bar) << '\n';
  os << "xi = " << format(constraints.xi) << '\n';
  os << "pos_min = " << format(constraints.pos_min) << '\n';
  os << "pos_max = " << format(constraints.pos_max) << '\n';
  if (x0_analytic) os << "x0 = analytic\n";
  else os << "x0 = " << format(constraints.x0) << '\n';

  os << "\n[solver]\n";
  os << "algo = " << algorithm_name(solver.algo) << '\n';
  os << "n_f = " << solver.n_f << '\n';
  os << "n_d = " << solver.n_d << '\n';
  os << "paths = " << solver.paths << '\n';
  os << "seed = " << solver.seed << '\n';
  os << "optimize_x = " << (solver.optimize_x ? "true" : "false") << '\n';

  os << "\n[eval]\n";
  os << "paths = " << eval.paths << '\n';
  os << "seed = " << eval.seed << '\n';
  os << "runs = " << eval.runs << '\n';
  if (!eval.strategies.empty()) {
    os << "strategies =";
    for (const std::string& s : eval.strategies) os << ' ' << s;
    os << '\n';
  }

  os << "\n[convergence]\n";
  os << "mesh =";
  for (int m : convergence.mesh) os << ' ' << m;
  os << '\n';
  os << "paths_per_cell = " << convergence.paths_per_cell << '\n';
  os << "paths =";
  for (std::size_t n : convergence.paths) os << ' ' << n;
  os << '\n';
  os << "runs = " << convergence.runs << '\n';
}

}  // namespace mvhedge
