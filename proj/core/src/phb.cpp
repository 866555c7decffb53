#include "aggmark/phb.hpp"

#include <algorithm>
#include <sstream>

#include "aggmark/error.hpp"

namespace aggmark {

ScalarFunction BehaviourSpec::rho_of(int j, int k) const {
  auto it = rho.find({j, k});
  return it == rho.end() ? ScalarFunction::constant(1.0) : it->second;
}

bool BehaviourSpec::in_before(int j) const {
  return std::find(before.begin(), before.end(), j) != before.end();
}

bool BehaviourSpec::in_after(int j) const {
  return std::find(after.begin(), after.end(), j) != after.end();
}

void check_behaviour(const AggregateModel& model, const BehaviourSpec& spec) {
  const int J = model.macrostates();
  std::vector<int> seen(J, 0);
  for (int j : spec.before) {
    if (j < 0 || j >= J) throw StructuralError("J0 names a macrostate outside the model");
    ++seen[j];
  }
  for (int j : spec.after) {
    if (j < 0 || j >= J) throw StructuralError("J1 names a macrostate outside the model");
    ++seen[j];
  }
  for (int j = 0; j < J; ++j)
    if (seen[j] != 1) {
      std::ostringstream os;
      os << "macrostate " << j + 1 << " must be in exactly one of J0 and J1";
      throw StructuralError(os.str());
    }
  if (!spec.in_before(0)) throw StructuralError("the initial macrostate must be in J0");
  for (int j : spec.after)
    for (int k : spec.before)
      if (!model.block_is_zero(j, k)) {
        std::ostringstream os;
        os << "transition " << j + 1 << " -> " << k + 1 << " leads from J1 back to J0";
        throw StructuralError(os.str());
      }
  for (const auto& [jk, f] : spec.rho)
    if (!spec.in_before(jk.first) || !spec.in_after(jk.second)) {
      std::ostringstream os;
      os << "rho given for " << jk.first + 1 << " -> " << jk.second + 1
         << ", which is not a J0 -> J1 transition";
      throw StructuralError(os.str());
    }
}

void check_rho(const BehaviourSpec& spec, std::span<const double> sample_times) {
  for (const auto& [jk, f] : spec.rho)
    for (double t : sample_times) {
      const double v = f(t);
      if (!(v > 0.0 && v <= 1.0)) {
        std::ostringstream os;
        os << "rho(" << t << ", " << jk.first + 1 << ", " << jk.second + 1 << ") = " << v
           << " is outside (0, 1]";
        throw ValidationError(os.str());
      }
    }
}

AggregateModel transform(const AggregateModel& model, const BehaviourSpec& spec) {
  check_behaviour(model, spec);
  const int J = model.macrostates();
  std::vector<int> counts = model.micro_counts();
  counts.push_back(1);
  const int nabla = J;

  if (model.has_reset() && model.blocks_from_reset()) {
    const auto& rs = model.reset();
    ResetStructure out;
    out.beta.assign(J + 1, std::vector<std::vector<ScalarFunction>>(J + 1));
    out.pi = rs.pi;
    out.pi.push_back({ScalarFunction::constant(1.0)});
    for (int j = 0; j < J; ++j) {
      std::vector<std::vector<ScalarFunction>> to_nabla(model.micro_count(j));
      for (int k = 0; k < J; ++k) {
        const auto& b = rs.beta[j][k];
        if (b.empty()) continue;
        if (spec.in_before(j) && spec.in_after(k)) {
          const ScalarFunction r = spec.rho_of(j, k);
          std::vector<ScalarFunction> scaled;
          for (std::size_t a = 0; a < b.size(); ++a) {
            scaled.push_back(ScalarFunction::product({r, b[a]}));
            to_nabla[a].push_back(
                ScalarFunction::product({ScalarFunction::affine(1.0, -1.0, r), b[a]}));
          }
          out.beta[j][k] = std::move(scaled);
        } else {
          out.beta[j][k] = b;
        }
      }
      bool any = false;
      for (const auto& v : to_nabla) any = any || !v.empty();
      if (any) {
        std::vector<ScalarFunction> col;
        for (auto& v : to_nabla) col.push_back(v.empty() ? ScalarFunction() : ScalarFunction::sum(v));
        out.beta[j][nabla] = std::move(col);
      }
    }
    std::vector<EntryGrid> diag;
    for (int j = 0; j < J; ++j) {
      const int d = model.micro_count(j);
      EntryGrid blk(d, std::vector<IntensityEntry>(d));
      for (int a = 0; a < d; ++a)
        for (int c = 0; c < d; ++c)
          blk[a][c] = model.entries()[model.offset(j) + a][model.offset(j) + c];
      diag.push_back(std::move(blk));
    }
    diag.push_back(EntryGrid(1, std::vector<IntensityEntry>(1)));
    const RowVector& ini = model.initial();
    AggregateModel m = AggregateModel::build_from_reset(
        counts, std::move(diag), std::move(out),
        std::vector<double>(ini.data(), ini.data() + ini.size()));
    if (!model.names().empty()) {
      auto names = model.names();
      names.push_back("nabla");
      m.set_names(std::move(names));
    }
    return m;
  }

  const int n = model.dimension();
  EntryGrid entries(n + 1, std::vector<IntensityEntry>(n + 1));
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) entries[r][c] = model.entries()[r][c];
  for (int j : spec.before)
    for (int k : spec.after) {
      if (model.block_is_zero(j, k)) continue;
      const ScalarFunction rho = spec.rho_of(j, k);
      const ScalarFunction rest = ScalarFunction::affine(1.0, -1.0, rho);
      for (int a = 0; a < model.micro_count(j); ++a) {
        const int r = model.offset(j) + a;
        std::vector<ScalarFunction> lost;
        for (int b = 0; b < model.micro_count(k); ++b) {
          auto& e = entries[r][model.offset(k) + b];
          if (e.kind != IntensityEntry::Kind::function) continue;
          lost.push_back(ScalarFunction::product({rest, e.function}));
          e = IntensityEntry::of(ScalarFunction::product({rho, e.function}));
        }
        if (lost.empty()) continue;
        auto& cell = entries[r][n];
        if (cell.kind == IntensityEntry::Kind::function) lost.insert(lost.begin(), cell.function);
        cell = IntensityEntry::of(ScalarFunction::sum(std::move(lost)));
      }
    }
  std::optional<ResetStructure> reset;
  if (model.has_reset()) {
    // explicit jump blocks with a reset description: rebuild it for M̂
    const auto& rs = model.reset();
    ResetStructure out;
    out.beta.assign(J + 1, std::vector<std::vector<ScalarFunction>>(J + 1));
    out.pi = rs.pi;
    out.pi.push_back({ScalarFunction::constant(1.0)});
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < J; ++k) {
        const auto& b = rs.beta[j][k];
        if (b.empty()) continue;
        if (spec.in_before(j) && spec.in_after(k)) {
          const ScalarFunction r = spec.rho_of(j, k);
          for (const auto& f : b) out.beta[j][k].push_back(ScalarFunction::product({r, f}));
          auto& col = out.beta[j][nabla];
          if (col.empty()) col.assign(b.size(), ScalarFunction());
          for (std::size_t a = 0; a < b.size(); ++a)
            col[a] = ScalarFunction::sum(
                {col[a], ScalarFunction::product({ScalarFunction::affine(1.0, -1.0, r), b[a]})});
        } else {
          out.beta[j][k] = b;
        }
      }
    reset = std::move(out);
  }
  const RowVector& ini = model.initial();
  AggregateModel m(counts, std::move(entries),
                   std::vector<double>(ini.data(), ini.data() + ini.size()), std::move(reset));
  if (!model.names().empty()) {
    auto names = model.names();
    names.push_back("nabla");
    m.set_names(std::move(names));
  }
  return m;
}

void scale_table(CashFlowTable& table, double factor) {
  for (auto& row : table.rows) {
    for (auto* col : {&row.rate, &row.rate_before, &row.rate_after, &row.rate_mid,
                      &row.accumulated, &row.discounted})
      for (double& v : *col) v *= factor;
    row.reserve *= factor;
  }
}

ScaledProblem prepare_scaled(const AggregateModel& model, const BehaviourSpec& spec,
                             const PaymentSpec& payments, const std::vector<int>& states,
                             double t, const TimeGrid& grid,
                             const std::optional<Exercise>& exercise) {
  check_behaviour(model, spec);
  check_rho(spec, std::vector<double>(grid.points().begin(), grid.points().end()));
  for (int state : states) {
    if (!exercise && !spec.in_before(state))
      throw DomainError("valuation after exercise needs the realised exercise");
    if (exercise && !spec.in_after(state))
      throw DomainError("with an exercise the current macrostate must be in J1");
  }
  double factor = 1.0;
  if (exercise) {
    if (exercise->time > t) throw DomainError("exercise time lies after the valuation time");
    if (!spec.in_before(exercise->from) || !spec.in_after(exercise->to))
      throw DomainError("exercise must be a J0 -> J1 transition");
    factor = spec.rho_of(exercise->from, exercise->to)(exercise->time);
    if (!(factor > 0.0 && factor <= 1.0))
      throw ValidationError("rho at the exercise lies outside (0, 1]");
  }
  AggregateModel hat = transform(model, spec);
  PaymentSpec ext = payments.extended(hat.macrostates());
  return ScaledProblem{std::move(hat), std::move(ext), factor};
}

CashFlowTable scaled_cashflow(const AggregateModel& model, const BehaviourSpec& spec,
                              const std::vector<SpellCondition>& conditions, double t,
                              const TimeGrid& grid, const PaymentSpec& payments,
                              const std::optional<Exercise>& exercise,
                              const CashflowOptions& options) {
  std::vector<int> states;
  for (const auto& c : conditions) states.push_back(c.state);
  ScaledProblem sp = prepare_scaled(model, spec, payments, states, t, grid, exercise);
  std::vector<SpellState> spells;
  for (const auto& c : conditions)
    spells.push_back(spell_state(sp.model, c.state, t, c.duration, grid));
  CashFlowTable table = expected_cashflow_spells(sp.model, spells, t, grid, sp.payments, options);
  if (sp.factor != 1.0) scale_table(table, sp.factor);
  return table;
}

CashFlowTable scaled_cashflow(const AggregateModel& model, const BehaviourSpec& spec,
                              const History& history, double t, const TimeGrid& grid,
                              const PaymentSpec& payments,
                              const std::optional<Exercise>& exercise,
                              const CashflowOptions& options) {
  ScaledProblem sp =
      prepare_scaled(model, spec, payments, {history.last_state()}, t, grid, exercise);
  CashFlowTable table =
      expected_cashflow_general(sp.model, history, t, grid, sp.payments, options);
  if (sp.factor != 1.0) scale_table(table, sp.factor);
  return table;
}

BehaviourSpec behaviour_from_json(const nlohmann::json& doc, int macrostates,
                                  const std::string& pointer) {
  if (!doc.is_object()) throw SchemaError(pointer, "must be an object");
  BehaviourSpec spec;
  auto list = [&](const char* name, std::vector<int>& out) {
    if (!doc.contains(name)) throw SchemaError(pointer, std::string("missing field '") + name + "'");
    const auto& v = doc.at(name);
    const std::string p = pointer + "/" + name;
    if (!v.is_array()) throw SchemaError(p, "must be an array of macrostates");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer() || v[i].get<int>() < 1 || v[i].get<int>() > macrostates)
        throw SchemaError(p + "/" + std::to_string(i),
                          "must be a macrostate between 1 and " + std::to_string(macrostates));
      out.push_back(v[i].get<int>() - 1);
    }
  };
  list("J0", spec.before);
  list("J1", spec.after);
  if (doc.contains("rho")) {
    const auto& arr = doc.at("rho");
    if (!arr.is_array()) throw SchemaError(pointer + "/rho", "must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = pointer + "/rho/" + std::to_string(i);
      const auto& e = arr[i];
      if (!e.is_object()) throw SchemaError(p, "must be an object");
      int jk[2];
      const char* names[2] = {"from", "to"};
      for (int q = 0; q < 2; ++q) {
        if (!e.contains(names[q]))
          throw SchemaError(p, std::string("missing field '") + names[q] + "'");
        const auto& v = e.at(names[q]);
        if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > macrostates)
          throw SchemaError(p + "/" + names[q], "must be a macrostate between 1 and " +
                                                    std::to_string(macrostates));
        jk[q] = v.get<int>() - 1;
      }
      if (!e.contains("value")) throw SchemaError(p, "missing field 'value'");
      spec.rho[{jk[0], jk[1]}] = ScalarFunction::from_json(e.at("value"), p + "/value");
    }
  }
  return spec;
}

nlohmann::json behaviour_to_json(const BehaviourSpec& spec) {
  nlohmann::json doc;
  std::vector<int> b, a;
  for (int j : spec.before) b.push_back(j + 1);
  for (int j : spec.after) a.push_back(j + 1);
  doc["J0"] = b;
  doc["J1"] = a;
  nlohmann::json rho = nlohmann::json::array();
  for (const auto& [jk, f] : spec.rho)
    rho.push_back({{"from", jk.first + 1}, {"to", jk.second + 1}, {"value", f.to_json()}});
  doc["rho"] = std::move(rho);
  return doc;
}

}  // namespace aggmark
