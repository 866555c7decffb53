#include "aggmark/cli/config.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "aggmark/csv.hpp"
#include "aggmark/model_io.hpp"

namespace aggmark::cli {

namespace fs = std::filesystem;

namespace {

// Walks JSON text until the value at the target path starts.
class Locator {
 public:
  Locator(std::string_view text, std::vector<std::string> target)
      : s_(text), target_(std::move(target)) {}

  int find() {
    std::vector<std::string> path;
    return value(path) ? line_ : 0;
  }

 private:
  void ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) {
      if (s_[i_] == '\n') ++line_;
      ++i_;
    }
  }

  std::string str() {
    std::string out;
    ++i_;
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
        const char c = s_[i_ + 1];
        out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
        i_ += 2;
        continue;
      }
      out += s_[i_++];
    }
    ++i_;
    return out;
  }

  bool value(std::vector<std::string>& path) {
    ws();
    if (path == target_) return true;
    if (i_ >= s_.size()) return false;
    const char c = s_[i_];
    if (c == '{') {
      ++i_;
      while (true) {
        ws();
        if (i_ >= s_.size()) return false;
        if (s_[i_] == '}') {
          ++i_;
          return false;
        }
        if (s_[i_] == ',') {
          ++i_;
          continue;
        }
        if (s_[i_] != '"') return false;
        path.push_back(str());
        ws();
        if (i_ < s_.size() && s_[i_] == ':') ++i_;
        if (value(path)) return true;
        path.pop_back();
      }
    }
    if (c == '[') {
      ++i_;
      int index = 0;
      while (true) {
        ws();
        if (i_ >= s_.size()) return false;
        if (s_[i_] == ']') {
          ++i_;
          return false;
        }
        if (s_[i_] == ',') {
          ++i_;
          continue;
        }
        path.push_back(std::to_string(index++));
        if (value(path)) return true;
        path.pop_back();
      }
    }
    if (c == '"') {
      str();
      return false;
    }
    while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != ']' && s_[i_] != '}' &&
           !std::isspace(static_cast<unsigned char>(s_[i_])))
      ++i_;
    return false;
  }

  std::string_view s_;
  std::vector<std::string> target_;
  std::size_t i_ = 0;
  int line_ = 1;
};

std::vector<std::string> split_pointer(const std::string& pointer) {
  std::vector<std::string> out;
  if (pointer.empty()) return out;
  std::size_t pos = 1;
  while (true) {
    const std::size_t next = pointer.find('/', pos);
    std::string tok = pointer.substr(pos, next == std::string::npos ? std::string::npos
                                                                    : next - pos);
    std::string unescaped;
    for (std::size_t k = 0; k < tok.size(); ++k) {
      if (tok[k] == '~' && k + 1 < tok.size()) {
        unescaped += tok[k + 1] == '1' ? '/' : '~';
        ++k;
      } else {
        unescaped += tok[k];
      }
    }
    out.push_back(unescaped);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

// A parsed JSON file and how to report positions inside it.
struct Source {
  std::string path;
  std::string text;
  nlohmann::json doc;

  std::string where(const std::string& pointer) const {
    const int line = line_of_pointer(text, pointer);
    return line > 0 ? path + ":" + std::to_string(line) : path;
  }
  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    throw ConfigError(where(pointer), pointer.empty() ? message : pointer + ": " + message);
  }
};

Source read_source(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot read file");
  std::ostringstream os;
  os << in.rdbuf();
  Source src{path, os.str(), {}};
  try {
    src.doc = nlohmann::json::parse(src.text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw ConfigError(path + ":" + std::to_string(line_of_offset(src.text, at)),
                      std::string("invalid JSON: ") + e.what());
  }
  return src;
}

// Runs `f` and turns schema errors into file:line errors.
template <class F>
auto with_source(const Source& src, const std::string& base, F&& f) {
  try {
    return f();
  } catch (const SchemaError& e) {
    src.fail(base + e.pointer(), e.message());
  }
}

double number(const Source& src, const nlohmann::json& obj, const std::string& key,
              const std::string& pointer) {
  if (!obj.contains(key)) src.fail(pointer, "missing field '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number()) src.fail(pointer + "/" + key, "must be a number");
  return v.get<double>();
}

long long integer(const Source& src, const nlohmann::json& obj, const std::string& key,
                  const std::string& pointer) {
  if (!obj.contains(key)) src.fail(pointer, "missing field '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) src.fail(pointer + "/" + key, "must be an integer");
  return v.get<long long>();
}

void only_keys(const Source& src, const nlohmann::json& obj, const std::string& pointer,
               const std::set<std::string>& allowed) {
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) src.fail(pointer + "/" + k, "unknown field");
}

// Inline object, or a path to a JSON file relative to the config.
std::pair<Source, std::string> sub_document(const Source& cfg, const fs::path& dir,
                                            const std::string& key) {
  if (!cfg.doc.contains(key)) cfg.fail("", "missing field '" + key + "'");
  const auto& v = cfg.doc.at(key);
  if (v.is_string()) {
    const fs::path p = dir / v.get<std::string>();
    if (!fs::exists(p)) cfg.fail("/" + key, "file " + p.string() + " not found");
    return {read_source(p.string()), ""};
  }
  if (!v.is_object()) cfg.fail("/" + key, "must be an object or a file name");
  return {cfg, "/" + key};
}

}  // namespace

int line_of_offset(std::string_view text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

int line_of_pointer(std::string_view text, const std::string& pointer) {
  return Locator(text, split_pointer(pointer)).find();
}

RunConfig load_config(const std::string& path, const Overrides& overrides) {
  const Source cfg = read_source(path);
  if (!cfg.doc.is_object()) cfg.fail("", "configuration must be a JSON object");
  only_keys(cfg, cfg.doc, "",
            {"model", "payments", "grid", "conditioning", "behaviour", "simulation", "output",
             "quadrature", "description"});
  const fs::path dir = fs::path(path).parent_path();
  RunConfig rc;
  rc.path = path;

  // model
  auto [msrc, mbase] = sub_document(cfg, dir, "model");
  const nlohmann::json& mdoc = mbase.empty() ? msrc.doc : msrc.doc.at(mbase.substr(1));
  rc.model.emplace(with_source(msrc, mbase, [&] { return model_from_json(mdoc); }));
  const int J = rc.model->macrostates();

  // payments
  auto [psrc, pbase] = sub_document(cfg, dir, "payments");
  const nlohmann::json& pdoc = pbase.empty() ? psrc.doc : psrc.doc.at(pbase.substr(1));
  rc.payments = with_source(psrc, pbase, [&] { return payments_from_json(pdoc, J); });

  // grid
  if (!cfg.doc.contains("grid")) cfg.fail("", "missing field 'grid'");
  const auto& g = cfg.doc.at("grid");
  if (!g.is_object()) cfg.fail("/grid", "must be an object");
  only_keys(cfg, g, "/grid", {"start", "end", "steps", "substeps"});
  rc.grid.start = number(cfg, g, "start", "/grid");
  rc.grid.end = number(cfg, g, "end", "/grid");
  const long long steps = integer(cfg, g, "steps", "/grid");
  if (steps <= 0 || steps > 1000000) cfg.fail("/grid/steps", "must be between 1 and 1000000");
  rc.grid.steps = static_cast<int>(steps);
  if (g.contains("substeps")) {
    const long long sub = integer(cfg, g, "substeps", "/grid");
    if (sub <= 0 || sub > 10000) cfg.fail("/grid/substeps", "must be between 1 and 10000");
    rc.grid.substeps = static_cast<int>(sub);
  }
  if (overrides.grid_steps) {
    if (*overrides.grid_steps <= 0) throw ConfigError("--grid-steps", "must be positive");
    rc.grid.steps = *overrides.grid_steps;
  }
  if (overrides.substeps) {
    if (*overrides.substeps <= 0) throw ConfigError("--substeps", "must be positive");
    rc.grid.substeps = *overrides.substeps;
  }
  if (!(rc.grid.start < rc.grid.end)) cfg.fail("/grid/end", "must be greater than start");
  if (rc.grid.end > rc.payments.horizon)
    cfg.fail("/grid/end", "lies after the payment horizon " +
                              format_number(rc.payments.horizon));
  if (rc.grid.start < 0.0) cfg.fail("/grid/start", "must be nonnegative");
  rc.declared_horizon = rc.payments.horizon;
  rc.payments.horizon = rc.grid.end;

  // conditioning
  if (!cfg.doc.contains("conditioning")) cfg.fail("", "missing field 'conditioning'");
  const auto& cond = cfg.doc.at("conditioning");
  if (!cond.is_array() || cond.empty())
    cfg.fail("/conditioning", "must be a non-empty array of {state, duration}");
  for (std::size_t i = 0; i < cond.size(); ++i) {
    const std::string p = "/conditioning/" + std::to_string(i);
    if (!cond[i].is_object()) cfg.fail(p, "must be an object");
    only_keys(cfg, cond[i], p, {"state", "duration"});
    const long long state = integer(cfg, cond[i], "state", p);
    if (state < 1 || state > J)
      cfg.fail(p + "/state", "must be a macrostate between 1 and " + std::to_string(J));
    const double u = number(cfg, cond[i], "duration", p);
    if (u < 0.0) cfg.fail(p + "/duration", "must be nonnegative");
    if (u > rc.grid.start)
      cfg.fail(p + "/duration", "exceeds the valuation time " + format_number(rc.grid.start));
    rc.conditioning.push_back({static_cast<int>(state - 1), u});
  }

  // behaviour
  if (cfg.doc.contains("behaviour")) {
    const auto& b = cfg.doc.at("behaviour");
    if (!b.is_object()) cfg.fail("/behaviour", "must be an object");
    only_keys(cfg, b, "/behaviour", {"J0", "J1", "rho", "exercise"});
    BehaviourBlock blk;
    nlohmann::json core = b;
    core.erase("exercise");
    blk.spec = with_source(cfg, "", [&] { return behaviour_from_json(core, J, "/behaviour"); });
    if (b.contains("exercise")) {
      const auto& e = b.at("exercise");
      const std::string p = "/behaviour/exercise";
      if (!e.is_object()) cfg.fail(p, "must be an object");
      only_keys(cfg, e, p, {"time", "from", "to"});
      Exercise ex;
      ex.time = number(cfg, e, "time", p);
      const long long from = integer(cfg, e, "from", p);
      const long long to = integer(cfg, e, "to", p);
      if (from < 1 || from > J) cfg.fail(p + "/from", "must be a macrostate");
      if (to < 1 || to > J) cfg.fail(p + "/to", "must be a macrostate");
      ex.from = static_cast<int>(from - 1);
      ex.to = static_cast<int>(to - 1);
      if (ex.time > rc.grid.start) cfg.fail(p + "/time", "lies after the valuation time");
      blk.exercise = ex;
    }
    try {
      check_behaviour(*rc.model, blk.spec);
    } catch (const StructuralError& e) {
      cfg.fail("/behaviour", e.what());
    }
    rc.behaviour = std::move(blk);
  }

  // simulation
  if (cfg.doc.contains("simulation")) {
    const auto& s = cfg.doc.at("simulation");
    const std::string p = "/simulation";
    if (!s.is_object()) cfg.fail(p, "must be an object");
    only_keys(cfg, s, p, {"paths", "seed", "bins", "corrupt_intensity_factor"});
    SimulationSpec sim;
    const long long n = integer(cfg, s, "paths", p);
    if (n < 2) cfg.fail(p + "/paths", "must be at least 2");
    sim.paths = static_cast<std::size_t>(n);
    if (s.contains("seed")) {
      const auto& v = s.at("seed");
      if (!v.is_number_unsigned()) cfg.fail(p + "/seed", "must be a nonnegative integer");
      sim.seed = v.get<std::uint64_t>();
    }
    if (s.contains("bins")) {
      const auto& v = s.at("bins");
      if (!v.is_array() || v.size() < 2) cfg.fail(p + "/bins", "must list at least two edges");
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) cfg.fail(p + "/bins/" + std::to_string(i), "must be a number");
        const double x = v[i].get<double>();
        if (!sim.bins.empty() && !(x > sim.bins.back()))
          cfg.fail(p + "/bins/" + std::to_string(i), "bin edges must increase");
        sim.bins.push_back(x);
      }
    }
    if (s.contains("corrupt_intensity_factor")) {
      sim.corrupt_intensity_factor = number(cfg, s, "corrupt_intensity_factor", p);
      if (!(sim.corrupt_intensity_factor > 0.0))
        cfg.fail(p + "/corrupt_intensity_factor", "must be positive");
    }
    rc.simulation = sim;
  }
  if (rc.simulation) {
    if (overrides.seed) rc.simulation->seed = *overrides.seed;
    if (overrides.paths) rc.simulation->paths = *overrides.paths;
  }

  if (cfg.doc.contains("quadrature")) {
    const auto& q = cfg.doc.at("quadrature");
    if (q == "simpson")
      rc.options.quadrature = Quadrature::simpson;
    else if (q == "trapezoid")
      rc.options.quadrature = Quadrature::trapezoid;
    else
      cfg.fail("/quadrature", "must be \"simpson\" or \"trapezoid\"");
  }

  if (overrides.out) {
    rc.output_dir = *overrides.out;
  } else if (cfg.doc.contains("output")) {
    if (!cfg.doc.at("output").is_string()) cfg.fail("/output", "must be a directory name");
    rc.output_dir = (dir / cfg.doc.at("output").get<std::string>()).string();
  } else {
    rc.output_dir = (dir / "out").string();
  }

  // semantic checks on the resolved objects
  const TimeGrid grid = rc.grid.build();
  const auto report =
      validate(*rc.model, std::vector<double>(grid.points().begin(), grid.points().end()));
  if (!report.ok())
    throw ValidationError(msrc.where(mbase) + ": model fails validation:\n" + report.summary());
  rc.payments.check(J);

  // effective configuration: files inlined, overrides applied, output excluded
  rc.effective = cfg.doc;
  rc.effective.erase("output");
  rc.effective["model"] = mdoc;
  rc.effective["payments"] = pdoc;
  rc.effective["grid"] = {{"start", rc.grid.start},
                          {"end", rc.grid.end},
                          {"steps", rc.grid.steps},
                          {"substeps", rc.grid.substeps}};
  if (rc.simulation) {
    rc.effective["simulation"]["seed"] = rc.simulation->seed;
    rc.effective["simulation"]["paths"] = rc.simulation->paths;
  }
  rc.hash = fnv1a_hex(rc.effective.dump());
  return rc;
}

}  // namespace aggmark::cli
