#include "lqmfg/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <vector>

#include "lqmfg/errors.hpp"

namespace lqmfg {

namespace {

std::string strip(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_real(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw InvalidProblem("'" + s + "' is not a number");
  }
  return v;
}

long long parse_integer(const std::string& s) {
  long long v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw InvalidProblem("'" + s + "' is not an integer");
  }
  return v;
}

struct Line {
  int number;
  std::string key, value;
};

struct Section {
  std::string name;
  int line;
  std::vector<Line> entries;
};

const std::set<std::string> kRunning{"A", "Abar", "B", "sigma", "Q", "Qbar", "R", "S"};
const std::set<std::string> kTerminal{"QT", "QbarT", "ST", "Qcal"};
const std::set<std::string> kKeyed{"problem", "appendix", "simulation"};

std::vector<Section> tokenize(std::istream& in) {
  std::vector<Section> sections;
  std::set<std::string> seen;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const std::string line = strip(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(number, "malformed section header");
      }
      const std::string name = line.substr(1, line.size() - 2);
      if (!kRunning.count(name) && !kTerminal.count(name) && !kKeyed.count(name)) {
        throw ConfigError(number, "unknown section [" + name + "]");
      }
      if (!seen.insert(name).second) {
        throw ConfigError(number, "duplicate section [" + name + "]");
      }
      sections.push_back({name, number, {}});
      continue;
    }
    if (sections.empty()) throw ConfigError(number, "entry outside of any section");
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(number, "expected 'key = value'");
    sections.back().entries.push_back({number, line.substr(0, eq), line.substr(eq + 1)});
  }
  return sections;
}

// Runs `f` and rethrows any parse failure with the line number attached.
template <class F>
auto at_line(int line, F f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(line, e.what());
  }
}

std::map<std::string, Line> keyed(const Section& s, const std::set<std::string>& allowed) {
  std::map<std::string, Line> out;
  for (const Line& l : s.entries) {
    if (!allowed.count(l.key)) {
      throw ConfigError(l.number, "unknown key '" + l.key + "' in [" + s.name + "]");
    }
    if (!out.emplace(l.key, l).second) {
      throw ConfigError(l.number, "duplicate key '" + l.key + "'");
    }
  }
  return out;
}

Schedule parse_schedule(const Section& s) {
  std::vector<Schedule::Piece> pieces;
  bool constant = false;
  for (const Line& l : s.entries) {
    if (l.key == "const") {
      if (constant || !pieces.empty()) {
        throw ConfigError(l.number, "[" + s.name + "] mixes 'const' with other entries");
      }
      constant = true;
      pieces.push_back({0.0, at_line(l.number, [&] { return parse_matrix(l.value); })});
    } else if (l.key.rfind("at", 0) == 0 && l.key.size() > 2) {
      if (constant) {
        throw ConfigError(l.number, "[" + s.name + "] mixes 'const' with other entries");
      }
      const double t = at_line(l.number, [&] { return parse_real(l.key.substr(2)); });
      if (pieces.empty() ? t != 0.0 : !(t > pieces.back().start)) {
        throw ConfigError(l.number, "piece times must start at 0 and increase");
      }
      const Matrix& first = pieces.empty() ? Matrix() : pieces.front().value;
      Matrix value = at_line(l.number, [&] { return parse_matrix(l.value); });
      if (!pieces.empty() &&
          (value.rows() != first.rows() || value.cols() != first.cols())) {
        throw ConfigError(l.number, "piece shape differs from the first piece");
      }
      pieces.push_back({t, std::move(value)});
    } else {
      throw ConfigError(l.number, "expected 'const' or 'at <time>' in [" + s.name + "]");
    }
  }
  if (pieces.empty()) throw ConfigError(s.line, "[" + s.name + "] has no value");
  return constant ? Schedule::constant(pieces[0].value)
                  : Schedule::piecewise(std::move(pieces));
}

Matrix parse_constant(const Section& s) {
  if (s.entries.size() != 1 || s.entries[0].key != "const") {
    throw ConfigError(s.line, "[" + s.name + "] takes a single 'const = ...' entry");
  }
  const Line& l = s.entries[0];
  return at_line(l.number, [&] { return parse_matrix(l.value); });
}

Vector parse_vector(const Line& l) {
  return at_line(l.number, [&] {
    const auto parts = split(l.value, ',');
    Vector v(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) v(i) = parse_real(parts[i]);
    return v;
  });
}

double real_of(const Line& l) {
  return at_line(l.number, [&] { return parse_real(l.value); });
}

long long int_of(const Line& l) {
  return at_line(l.number, [&] { return parse_integer(l.value); });
}

AppendixParams parse_appendix(const Section& s) {
  AppendixParams p;
  const auto kv = keyed(s, {"a", "b", "r", "alpha", "gamma", "eta", "T"});
  const std::map<std::string, double*> fields{
      {"a", &p.a},         {"b", &p.b},         {"r", &p.r},  {"alpha", &p.alpha},
      {"gamma", &p.gamma}, {"eta", &p.eta},     {"T", &p.T}};
  for (const auto& [key, line] : kv) *fields.at(key) = real_of(line);
  return p;
}

SimConfig parse_simulation(const Section& s) {
  SimConfig cfg;
  const auto kv = keyed(s, {"N", "paths", "seed", "dt", "x0_cov", "substeps"});
  if (kv.count("N")) {
    const Line& l = kv.at("N");
    cfg.N_values.clear();
    for (const auto& part : split(l.value, ',')) {
      cfg.N_values.push_back(
          static_cast<int>(at_line(l.number, [&] { return parse_integer(part); })));
    }
  }
  if (kv.count("paths")) cfg.paths = static_cast<int>(int_of(kv.at("paths")));
  if (kv.count("seed")) cfg.seed = static_cast<std::uint64_t>(int_of(kv.at("seed")));
  if (kv.count("dt")) cfg.dt = real_of(kv.at("dt"));
  if (kv.count("substeps")) cfg.noise_substeps = static_cast<int>(int_of(kv.at("substeps")));
  if (kv.count("x0_cov")) {
    const Line& l = kv.at("x0_cov");
    cfg.x0_cov = at_line(l.number, [&] { return parse_matrix(l.value); });
  }
  return cfg;
}

}  // namespace

Matrix parse_matrix(const std::string& text) {
  const std::string s = strip(text);
  if (s.empty()) throw InvalidProblem("empty matrix");
  const auto rows = split(s, ';');
  std::vector<std::vector<double>> values;
  for (const auto& row : rows) {
    std::vector<double> r;
    for (const auto& entry : split(row, ',')) r.push_back(parse_real(entry));
    if (!values.empty() && r.size() != values[0].size()) {
      throw InvalidProblem("matrix rows have different lengths");
    }
    values.push_back(std::move(r));
  }
  Matrix m(values.size(), values[0].size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = 0; j < values[i].size(); ++j) m(i, j) = values[i][j];
  }
  return m;
}

Config parse_config(std::istream& in) {
  const std::vector<Section> sections = tokenize(in);
  auto find = [&](const std::string& name) -> const Section* {
    for (const auto& s : sections) {
      if (s.name == name) return &s;
    }
    return nullptr;
  };

  const Section* problem = find("problem");
  if (!problem) throw ConfigError(0, "missing [problem] section");
  const auto kv = keyed(*problem, {"n", "m", "T", "delta", "x0_mean"});
  for (const char* required : {"n", "m", "T"}) {
    if (!kv.count(required)) {
      throw ConfigError(problem->line, std::string("[problem] is missing '") + required + "'");
    }
  }
  const long long n = int_of(kv.at("n")), m = int_of(kv.at("m"));
  if (n < 1 || m < 1) throw ConfigError(kv.at("n").number, "n and m must be positive");
  const double T = real_of(kv.at("T"));
  if (!(T > 0.0)) throw ConfigError(kv.at("T").number, "T must be positive");

  Config cfg;
  cfg.spec = zero_problem(static_cast<int>(n), static_cast<int>(m), T);
  if (kv.count("delta")) cfg.spec.delta = real_of(kv.at("delta"));
  if (kv.count("x0_mean")) {
    cfg.spec.x0_mean = parse_vector(kv.at("x0_mean"));
    if (cfg.spec.x0_mean.size() != n) {
      throw ConfigError(kv.at("x0_mean").number, "x0_mean must have n entries");
    }
  }

  if (!find("R")) throw ConfigError(0, "missing [R] section");
  const std::map<std::string, Schedule*> running{
      {"A", &cfg.spec.A},         {"Abar", &cfg.spec.Abar}, {"B", &cfg.spec.B},
      {"sigma", &cfg.spec.sigma}, {"Q", &cfg.spec.Q},       {"Qbar", &cfg.spec.Qbar},
      {"R", &cfg.spec.R},         {"S", &cfg.spec.S}};
  const std::map<std::string, Matrix*> terminal{
      {"QT", &cfg.spec.QT}, {"QbarT", &cfg.spec.QbarT}, {"ST", &cfg.spec.ST}};
  for (const Section& s : sections) {
    if (running.count(s.name)) {
      *running.at(s.name) = parse_schedule(s);
    } else if (terminal.count(s.name)) {
      *terminal.at(s.name) = parse_constant(s);
    } else if (s.name == "Qcal") {
      cfg.Qcal = parse_constant(s);
    } else if (s.name == "appendix") {
      cfg.appendix = parse_appendix(s);
    } else if (s.name == "simulation") {
      cfg.simulation = parse_simulation(s);
    }
  }
  cfg.spec = symmetrized(std::move(cfg.spec));
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot read config file '" + path + "'");
  return parse_config(in);
}

}  // namespace lqmfg
