#include "wkam/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "wkam/error.hpp"
#include "wkam/hamiltonian.hpp"

namespace wkam {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_number(const std::string &key, const std::string &value, int line) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(v))
      throw ConfigError("", line);
    return v;
  } catch (const std::exception &) {
    throw ConfigError("'" + key + "' expects a number, got '" + value + "'",
                      line);
  }
}

int to_int(const std::string &key, const std::string &value, int line) {
  const double v = to_number(key, value, line);
  if (v != std::floor(v) || std::abs(v) > 1e9)
    throw ConfigError("'" + key + "' expects an integer, got '" + value + "'",
                      line);
  return static_cast<int>(v);
}

using Setter = std::function<void(Config &, const std::string &, int)>;

const std::map<std::string, std::map<std::string, Setter>> &known_keys() {
  auto num = [](double Config::*field) -> Setter {
    return [field](Config &c, const std::string &v, int line) {
      c.*field = to_number("value", v, line);
    };
  };
  auto tol = [](double Tolerances::*field, const char *name) -> Setter {
    return [field, name](Config &c, const std::string &v, int line) {
      c.tol.*field = to_number(name, v, line);
    };
  };
  auto tol_int = [](int Tolerances::*field, const char *name) -> Setter {
    return [field, name](Config &c, const std::string &v, int line) {
      c.tol.*field = to_int(name, v, line);
    };
  };
  auto tol_opt = [](std::optional<double> Tolerances::*field,
                    const char *name) -> Setter {
    return [field, name](Config &c, const std::string &v, int line) {
      c.tol.*field = to_number(name, v, line);
    };
  };
  static const std::map<std::string, std::map<std::string, Setter>> keys{
      {"environment",
       {{"kind",
         [](Config &c, const std::string &v, int line) {
           try {
             c.env.kind = parse_env_kind(v);
           } catch (const Error &e) {
             throw ConfigError(e.what(), line);
           }
         }},
        {"dimension",
         [](Config &c, const std::string &v, int line) {
           c.env.dimension = to_int("dimension", v, line);
         }},
        {"seed",
         [](Config &c, const std::string &v, int line) {
           c.env.seed = static_cast<std::uint64_t>(to_int("seed", v, line));
         }},
        {"realization",
         [](Config &c, const std::string &v, int line) {
           c.realization =
               static_cast<std::uint64_t>(to_int("realization", v, line));
         }}}},
      {"hamiltonian",
       {{"model", [](Config &c, const std::string &v,
                     int) { c.model = v; }},
        {"theta", num(&Config::theta)}}},
      {"grid",
       {{"n",
         [](Config &c, const std::string &v, int line) {
           c.grid.n = to_int("n", v, line);
         }},
        {"length",
         [](Config &c, const std::string &v, int line) {
           c.grid.length = to_number("length", v, line);
         }}}},
      {"ladder", {{"dt", num(&Config::dt)}, {"t_max", num(&Config::t_max)}}},
      {"tolerances",
       {{"tol_sub", tol_opt(&Tolerances::tol_sub, "tol_sub")},
        {"eps_aubry", tol_opt(&Tolerances::eps_aubry, "eps_aubry")},
        {"bisection", tol(&Tolerances::bisection, "bisection")},
        {"neighborhood_radius",
         tol(&Tolerances::neighborhood_radius, "neighborhood_radius")},
        {"seeds", tol_int(&Tolerances::seeds, "seeds")},
        {"d0", tol(&Tolerances::d0, "d0")},
        {"tau", tol(&Tolerances::tau, "tau")},
        {"terms", tol_int(&Tolerances::terms, "terms")},
        {"delta", tol(&Tolerances::delta, "delta")},
        {"epsilon", tol_opt(&Tolerances::epsilon, "epsilon")},
        {"reg_s", tol(&Tolerances::reg_s, "reg_s")},
        {"reg_t", tol(&Tolerances::reg_t, "reg_t")},
        {"flow_dt", tol(&Tolerances::flow_dt, "flow_dt")},
        {"pairs", tol_int(&Tolerances::pairs, "pairs")}}}};
  return keys;
}

} // namespace

std::vector<double> Config::ladder() const {
  std::vector<double> out;
  for (double t = dt; t <= t_max * (1 + 1e-12); t *= 2)
    out.push_back(t);
  return out;
}

void Config::validate() const {
  try {
    env.validate();
    GridSpec g = grid;
    g.dim = env.dimension;
    g.validate();
  } catch (const ConfigError &) {
    throw;
  } catch (const Error &e) {
    throw ConfigError(e.what());
  }
  if (!(dt > 0.0) || !(t_max >= dt))
    throw ConfigError("ladder needs 0 < dt <= t_max");
  if (!(theta > 0.0))
    throw ConfigError("theta must be positive");
  if (!(tol.bisection > 0.0) || !(tol.d0 > 0.0) || !(tol.tau > 0.0) ||
      !(tol.delta > 0.0) || !(tol.reg_s >= 0.0) || !(tol.reg_t >= 0.0) ||
      !(tol.flow_dt > 0.0))
    throw ConfigError("tolerances must be positive");
  if (tol.seeds < 1 || tol.terms < 1 || tol.pairs < 1)
    throw ConfigError("seeds, terms and pairs must be at least 1");
  if (tol.tol_sub && !(*tol.tol_sub >= 0.0))
    throw ConfigError("tol_sub must be nonnegative");
  if (tol.eps_aubry && !(*tol.eps_aubry > 0.0))
    throw ConfigError("eps_aubry must be positive");
}

Config parse_config(const std::string &text) {
  Config c;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0, model_line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find_first_of("#;");
    if (hash != std::string::npos)
      s = s.substr(0, hash);
    s = trim(s);
    if (s.empty())
      continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError("unterminated section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (!known_keys().count(section))
        throw ConfigError("unknown section [" + section + "]", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value'", line);
    if (section.empty())
      throw ConfigError("entry outside of a section", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("empty key or value", line);
    const auto &keys = known_keys().at(section);
    if (section == "hamiltonian" && key == "model")
      model_line = line;
    if (auto it = keys.find(key); it != keys.end()) {
      it->second(c, value, line);
    } else if (section == "environment") {
      c.env.params[key] = to_number(key, value, line);
    } else if (section == "hamiltonian") {
      c.model_params[key] = to_number(key, value, line);
    } else {
      throw ConfigError("unknown key '" + key + "' in [" + section + "]",
                        line);
    }
  }
  c.grid.dim = c.env.dimension;
  try {
    make_model(c.model, c.model_params);
  } catch (const Error &e) {
    throw ConfigError(e.what(), model_line);
  }
  c.validate();
  return c;
}

Config load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
      throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!j.contains("config"))
      throw ConfigError("manifest has no 'config' object");
    return config_from_json(j.at("config"));
  }
  return parse_config(text);
}

nlohmann::json to_json(const Config &c) {
  nlohmann::json j;
  j["environment"] = {{"kind", to_string(c.env.kind)},
                      {"dimension", c.env.dimension},
                      {"seed", c.env.seed},
                      {"realization", c.realization},
                      {"params", c.env.params}};
  j["hamiltonian"] = {
      {"model", c.model}, {"theta", c.theta}, {"params", c.model_params}};
  j["grid"] = {{"n", c.grid.n}, {"length", c.grid.length}};
  j["ladder"] = {{"dt", c.dt}, {"t_max", c.t_max}};
  const Tolerances &t = c.tol;
  auto opt = [](const std::optional<double> &v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json("default");
  };
  j["tolerances"] = {{"tol_sub", opt(t.tol_sub)},
                     {"eps_aubry", opt(t.eps_aubry)},
                     {"bisection", t.bisection},
                     {"neighborhood_radius", t.neighborhood_radius},
                     {"seeds", t.seeds},
                     {"d0", t.d0},
                     {"tau", t.tau},
                     {"terms", t.terms},
                     {"delta", t.delta},
                     {"epsilon", opt(t.epsilon)},
                     {"reg_s", t.reg_s},
                     {"reg_t", t.reg_t},
                     {"flow_dt", t.flow_dt},
                     {"pairs", t.pairs}};
  return j;
}

Config config_from_json(const nlohmann::json &j) {
  try {
    Config c;
    const auto &e = j.at("environment");
    c.env.kind = parse_env_kind(e.at("kind").get<std::string>());
    c.env.dimension = e.at("dimension").get<int>();
    c.env.seed = e.at("seed").get<std::uint64_t>();
    c.realization = e.at("realization").get<std::uint64_t>();
    c.env.params = e.at("params").get<std::map<std::string, double>>();
    const auto &h = j.at("hamiltonian");
    c.model = h.at("model").get<std::string>();
    c.theta = h.at("theta").get<double>();
    c.model_params = h.at("params").get<std::map<std::string, double>>();
    c.grid.n = j.at("grid").at("n").get<int>();
    c.grid.length = j.at("grid").at("length").get<double>();
    c.grid.dim = c.env.dimension;
    c.dt = j.at("ladder").at("dt").get<double>();
    c.t_max = j.at("ladder").at("t_max").get<double>();
    const auto &t = j.at("tolerances");
    auto opt = [&](const char *k) -> std::optional<double> {
      if (t.at(k).is_string())
        return std::nullopt;
      return t.at(k).get<double>();
    };
    c.tol.tol_sub = opt("tol_sub");
    c.tol.eps_aubry = opt("eps_aubry");
    c.tol.epsilon = opt("epsilon");
    c.tol.bisection = t.at("bisection").get<double>();
    c.tol.neighborhood_radius = t.at("neighborhood_radius").get<double>();
    c.tol.seeds = t.at("seeds").get<int>();
    c.tol.d0 = t.at("d0").get<double>();
    c.tol.tau = t.at("tau").get<double>();
    c.tol.terms = t.at("terms").get<int>();
    c.tol.delta = t.at("delta").get<double>();
    c.tol.reg_s = t.at("reg_s").get<double>();
    c.tol.reg_t = t.at("reg_t").get<double>();
    c.tol.flow_dt = t.at("flow_dt").get<double>();
    c.tol.pairs = t.at("pairs").get<int>();
    make_model(c.model, c.model_params);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed config object: ") + e.what());
  } catch (const ConfigError &) {
    throw;
  } catch (const Error &e) {
    throw ConfigError(e.what());
  }
}

std::string config_hash(const Config &config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace wkam
