#include "aggmark/cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "aggmark/csv.hpp"
#include "aggmark/occprob.hpp"
#include "aggmark/parallel.hpp"
#include "aggmark/sim.hpp"

namespace aggmark::cli {

namespace fs = std::filesystem;

namespace {

// Stage name reported with numerical failures.
thread_local const char* g_stage = "cli";

struct Stage {
  const char* previous;
  explicit Stage(const char* name) : previous(g_stage) { g_stage = name; }
  ~Stage() { g_stage = previous; }
};

nlohmann::json tolerances() {
  return {{"row_sum", kRowSumTolerance},
          {"initial_sum", kInitialSumTolerance},
          {"reset", kResetTolerance},
          {"conditioning_floor", kConditioningFloor},
          {"blowup", kBlowupThreshold}};
}

nlohmann::json base_report(const RunConfig& rc, const std::string& command,
                           const Valuation& v) {
  nlohmann::json r;
  r["command"] = command;
  r["config_hash"] = rc.hash;
  r["method"] = v.method;
  r["valuation_time"] = rc.valuation_time();
  r["payment_horizon"] = rc.declared_horizon;
  r["horizon_used"] = rc.payments.horizon;
  r["grid"] = {{"start", rc.grid.start},
               {"end", rc.grid.end},
               {"steps", rc.grid.steps},
               {"substeps", rc.grid.substeps},
               {"output_points", v.table.times.size()}};
  r["quadrature"] = rc.options.quadrature == Quadrature::simpson ? "simpson" : "trapezoid";
  r["tolerances"] = tolerances();
  r["behaviour"] = rc.behaviour.has_value();
  r["exercise_factor"] = v.factor;
  return r;
}

void write_json(const fs::path& p, const nlohmann::json& doc) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError(p.string(), "cannot write file");
  os << doc.dump(2) << '\n';
}

fs::path prepare_output(const RunConfig& rc) {
  const fs::path dir(rc.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError(rc.output_dir, "cannot create output directory: " + ec.message());
  return dir;
}

AggregateModel scaled_intensities(const AggregateModel& m, double factor) {
  if (factor == 1.0) return m;
  const ScalarFunction c = ScalarFunction::constant(factor);
  auto scale = [&](const IntensityEntry& e) {
    if (e.kind != IntensityEntry::Kind::function) return e;
    return IntensityEntry::of(ScalarFunction::product({c, e.function}));
  };
  std::optional<ResetStructure> reset;
  if (m.has_reset()) {
    ResetStructure rs = m.reset();
    for (auto& row : rs.beta)
      for (auto& cell : row)
        for (auto& f : cell)
          if (!f.is_zero()) f = ScalarFunction::product({c, f});
    reset = std::move(rs);
  }
  EntryGrid entries = m.entries();
  for (auto& row : entries)
    for (auto& e : row) e = scale(e);
  const RowVector& ini = m.initial();
  return AggregateModel(m.micro_counts(), std::move(entries),
                        std::vector<double>(ini.data(), ini.data() + ini.size()),
                        std::move(reset));
}

std::optional<std::size_t> find_time(const std::vector<double>& ts, double x) {
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (std::abs(ts[i] - x) <= 1e-12 * std::max(1.0, std::abs(x))) return i;
  return std::nullopt;
}

}  // namespace

Valuation value(const RunConfig& rc) {
  Stage stage("cashflow");
  const double t = rc.valuation_time();
  const TimeGrid grid = rc.grid.build();
  Valuation v;
  std::optional<ScaledProblem> scaled;
  if (rc.behaviour) {
    Stage s2("phb");
    std::vector<int> states;
    for (const auto& c : rc.conditioning) states.push_back(c.state);
    scaled.emplace(prepare_scaled(*rc.model, rc.behaviour->spec, rc.payments, states, t, grid,
                                  rc.behaviour->exercise));
    v.factor = scaled->factor;
  }
  const AggregateModel& model = scaled ? scaled->model : *rc.model;
  const PaymentSpec& payments = scaled ? scaled->payments : rc.payments;
  std::vector<SpellState> spells;
  {
    Stage s3("occprob");
    for (const auto& c : rc.conditioning)
      spells.push_back(spell_state(model, c.state, t, c.duration, grid));
  }
  const bool fast = payments.declared_duration_independent.value_or(false);
  v.method = fast ? "fast_path" : "duration_aware";
  v.table = fast ? fast_path_cashflow_spells(model, spells, t, grid, payments)
                 : expected_cashflow_spells(model, spells, t, grid, payments, rc.options);
  if (v.factor != 1.0) scale_table(v.table, v.factor);
  return v;
}

int run_command(const RunConfig& rc, std::ostream& out) {
  const Valuation v = value(rc);
  const fs::path dir = prepare_output(rc);
  CsvTable flows({"state", "duration", "time", "rate", "rate_before", "rate_after",
                  "accumulated", "discounted"});
  CsvTable reserves({"state", "duration", "reserve"});
  for (const auto& row : v.table.rows) {
    const std::string st = std::to_string(row.initial_state + 1);
    const std::string du = format_number(row.initial_duration);
    for (std::size_t l = 0; l < v.table.times.size(); ++l)
      flows.add_row({st, du, format_number(v.table.times[l]), format_number(row.rate[l]),
                     format_number(row.rate_before[l]), format_number(row.rate_after[l]),
                     format_number(row.accumulated[l]), format_number(row.discounted[l])});
    reserves.add_row({st, du, format_number(row.reserve)});
    out << "state " << st << " duration " << du << ": reserve " << format_number(row.reserve)
        << '\n';
  }
  flows.write_file((dir / "cashflows.csv").string(), rc.hash);
  reserves.write_file((dir / "reserves.csv").string(), rc.hash);
  nlohmann::json report = base_report(rc, "run", v);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : v.table.rows)
    rows.push_back({{"state", row.initial_state + 1},
                    {"duration", row.initial_duration},
                    {"reserve", row.reserve}});
  report["rows"] = rows;
  write_json(dir / "report.json", report);
  out << "wrote " << (dir / "cashflows.csv").string() << ", reserves.csv, report.json\n";
  return kOk;
}

int verify_command(const RunConfig& rc, std::ostream& out) {
  if (!rc.simulation) throw ConfigError(rc.path, "verify needs a 'simulation' block");
  const SimulationSpec& sim_spec = *rc.simulation;
  const Valuation v = value(rc);
  const double t = rc.valuation_time();
  const auto& ts = v.table.times;

  std::vector<double> edges = sim_spec.bins;
  if (edges.empty()) {
    const std::size_t L = ts.size();
    for (int k = 0; k <= 5; ++k) edges.push_back(ts[(L - 1) * k / 5]);
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  }
  std::vector<std::size_t> edge_index;
  for (double e : edges) {
    const auto i = find_time(ts, e);
    if (!i)
      throw ConfigError(rc.path, "bin edge " + format_number(e) +
                                     " is not a point of the output grid");
    edge_index.push_back(*i);
  }
  const int nb = static_cast<int>(edges.size()) - 1;

  const AggregateModel mc_model =
      scaled_intensities(*rc.model, sim_spec.corrupt_intensity_factor);
  const PaymentSpec& pay = rc.payments;
  const double horizon = pay.horizon;

  CsvTable table({"quantity", "state", "duration", "from", "to", "analytic", "mc_mean",
                  "std_error", "z"});
  nlohmann::json rows = nlohmann::json::array();
  double worst = 0.0;
  for (std::size_t r = 0; r < rc.conditioning.size(); ++r) {
    Stage stage("sim");
    const auto& c = rc.conditioning[r];
    const auto& row = v.table.rows[r];
    Simulator sim(mc_model, t - c.duration, horizon);
    const Conditioning cond = Conditioning::spell(mc_model, c.state, t, c.duration);
    const std::optional<BehaviourBlock>& beh = rc.behaviour;
    const double fixed = v.factor;
    PathWeight scale = [&beh, fixed, t](const SimPath& p, double s) {
      if (!beh) return 1.0;
      if (beh->exercise) return fixed;
      const auto ev = p.macro_events();
      for (std::size_t i = 1; i < ev.size(); ++i) {
        if (ev[i].time <= t) continue;
        if (beh->spec.in_before(ev[i - 1].macro) && beh->spec.in_after(ev[i].macro))
          return s >= ev[i].time ? beh->spec.rho_of(ev[i - 1].macro, ev[i].macro)(ev[i].time)
                                 : 1.0;
      }
      return 1.0;
    };
    PathWeight discounted = [&pay, scale, t](const SimPath& p, double s) {
      return pay.discount(t, s) * scale(p, s);
    };
    Functional f = [&](const SimPath& p, std::span<double> o) {
      for (int b = 0; b < nb; ++b) o[b] = path_payments(p, pay, edges[b], edges[b + 1], scale);
      o[nb] = path_payments(p, pay, t, horizon, discounted);
    };
    const Estimate est =
        sim.estimate(cond, nb + 1, f, sim_spec.paths, path_seed(sim_spec.seed, r));
    auto emit = [&](const std::string& q, double from, double to, double an, int k) {
      const double mean = est.mean[k];
      const double se = est.std_error[k];
      const double diff = mean - an;
      double z = 0.0;
      if (se > 0.0)
        z = diff / se;
      else if (std::abs(diff) > 1e-12 * std::max(1.0, std::abs(an)))
        z = diff > 0 ? INFINITY : -INFINITY;
      worst = std::max(worst, std::abs(z));
      const std::string st = std::to_string(c.state + 1);
      table.add_row({q, st, format_number(c.duration), format_number(from), format_number(to),
                     format_number(an), format_number(mean), format_number(se),
                     format_number(z)});
      rows.push_back({{"quantity", q},
                      {"state", c.state + 1},
                      {"duration", c.duration},
                      {"from", from},
                      {"to", to},
                      {"analytic", an},
                      {"mc_mean", mean},
                      {"std_error", se},
                      {"z", std::isfinite(z) ? nlohmann::json(z) : nlohmann::json("inf")}});
      out << q << " state " << st << " duration " << format_number(c.duration) << " ["
          << format_number(from) << ", " << format_number(to) << "]: analytic "
          << format_number(an) << " mc " << format_number(mean) << " se "
          << format_number(se) << " z " << format_number(z) << '\n';
    };
    for (int b = 0; b < nb; ++b)
      emit("cashflow", edges[b], edges[b + 1],
           row.accumulated[edge_index[b + 1]] - row.accumulated[edge_index[b]], b);
    emit("reserve", t, horizon, row.reserve, nb);
  }
  const fs::path dir = prepare_output(rc);
  table.write_file((dir / "verify.csv").string(), rc.hash);
  nlohmann::json report = base_report(rc, "verify", v);
  report["simulation"] = {{"paths", sim_spec.paths},
                          {"seed", sim_spec.seed},
                          {"corrupt_intensity_factor", sim_spec.corrupt_intensity_factor}};
  report["z_threshold"] = 4.0;
  report["max_abs_z"] = std::isfinite(worst) ? nlohmann::json(worst) : nlohmann::json("inf");
  report["passed"] = worst <= 4.0;
  report["quantities"] = rows;
  write_json(dir / "report.json", report);
  if (worst > 4.0) {
    out << "verification FAILED: max |z| = " << format_number(worst) << " > 4\n";
    return kVerifyFailure;
  }
  out << "verification passed: max |z| = " << format_number(worst) << '\n';
  return kOk;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"aggmark: valuation of aggregate Markov multi-state models"};
  app.require_subcommand(1);
  std::string config;
  Overrides ov;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "run configuration (JSON)")->required();
    sub->add_option_function<int>(
        "--grid-steps", [&](const int& v) { ov.grid_steps = v; }, "override grid steps");
    sub->add_option_function<int>(
        "--substeps", [&](const int& v) { ov.substeps = v; }, "override RK4 substeps");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { ov.seed = v; }, "override simulation seed");
    sub->add_option_function<std::size_t>(
        "--paths", [&](const std::size_t& v) { ov.paths = v; }, "override simulated paths");
    sub->add_option_function<std::string>(
        "--out", [&](const std::string& v) { ov.out = v; }, "output directory");
  };
  CLI::App* run = app.add_subcommand("run", "value the contract and write CSV tables");
  CLI::App* verify = app.add_subcommand("verify", "compare analytic and Monte Carlo results");
  add_common(run);
  add_common(verify);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    const RunConfig rc = load_config(config, ov);
    if (run->parsed()) return run_command(rc, out);
    return verify_command(rc, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const SchemaError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ValidationError& e) {
    err << "validation failed: " << e.what() << '\n';
    return kConfigError;
  } catch (const StructuralError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalBlowup& e) {
    err << "numerical failure in " << g_stage << " at t=" << format_number(e.time()) << ": "
        << e.what() << '\n';
    return kNumericalFailure;
  } catch (const Error& e) {
    err << "numerical failure in " << g_stage << ": " << e.what() << '\n';
    return kNumericalFailure;
  }
}

}  // namespace aggmark::cli
