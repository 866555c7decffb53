#include "aggmark/model_io.hpp"

#include "aggmark/error.hpp"

namespace aggmark {

namespace {

using nlohmann::json;

const json& field(const json& doc, const std::string& ptr, const char* name) {
  if (!doc.is_object()) throw SchemaError(ptr, "must be an object");
  if (!doc.contains(name))
    throw SchemaError(ptr, std::string("missing field '") + name + "'");
  return doc.at(name);
}

int int_value(const json& v, const std::string& ptr) {
  if (!v.is_number_integer()) throw SchemaError(ptr, "must be an integer");
  return v.get<int>();
}

int macro_label(const json& v, const std::string& ptr, int J) {
  const int j = int_value(v, ptr);
  if (j < 1 || j > J)
    throw SchemaError(ptr, "macrostate must be between 1 and " + std::to_string(J));
  return j - 1;
}

IntensityEntry entry_from_json(const json& v, const std::string& ptr,
                               bool diagonal) {
  if (v.is_string()) {
    if (v.get<std::string>() != "complement")
      throw SchemaError(ptr, "only the string \"complement\" is accepted");
    if (!diagonal) throw SchemaError(ptr, "\"complement\" is only allowed on the diagonal");
    return IntensityEntry::complement();
  }
  ScalarFunction f = ScalarFunction::from_json(v, ptr);
  if (f.is_zero()) return IntensityEntry::none();
  return IntensityEntry::of(std::move(f));
}

json entry_to_json(const IntensityEntry& e) {
  switch (e.kind) {
    case IntensityEntry::Kind::zero:
      return 0;
    case IntensityEntry::Kind::complement:
      return "complement";
    case IntensityEntry::Kind::function:
      break;
  }
  return e.function.to_json();
}

std::vector<ScalarFunction> function_array(const json& v, const std::string& ptr,
                                           int expected) {
  if (!v.is_array()) throw SchemaError(ptr, "must be an array");
  if (static_cast<int>(v.size()) != expected)
    throw SchemaError(ptr, "must have " + std::to_string(expected) + " entries");
  std::vector<ScalarFunction> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(ScalarFunction::from_json(v[i], ptr + "/" + std::to_string(i)));
  return out;
}

}  // namespace

AggregateModel model_from_json(const json& doc, const std::string& pointer) {
  const auto& ms = field(doc, pointer, "macrostates");
  int J = 0;
  std::vector<std::string> names;
  if (ms.is_number_integer()) {
    J = ms.get<int>();
  } else if (ms.is_array()) {
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (!ms[i].is_string())
        throw SchemaError(pointer + "/macrostates/" + std::to_string(i), "must be a string");
      names.push_back(ms[i].get<std::string>());
    }
    J = static_cast<int>(names.size());
  } else {
    throw SchemaError(pointer + "/macrostates", "must be an integer or an array of names");
  }
  if (J < 1) throw SchemaError(pointer + "/macrostates", "need at least one macrostate");

  const auto& mc = field(doc, pointer, "micro_counts");
  const std::string mc_ptr = pointer + "/micro_counts";
  if (!mc.is_array() || static_cast<int>(mc.size()) != J)
    throw SchemaError(mc_ptr, "must be an array with one count per macrostate");
  std::vector<int> counts;
  for (std::size_t i = 0; i < mc.size(); ++i) {
    const int c = int_value(mc[i], mc_ptr + "/" + std::to_string(i));
    if (c < 1) throw SchemaError(mc_ptr + "/" + std::to_string(i), "must be positive");
    counts.push_back(c);
  }
  std::vector<int> offsets(J, 0);
  int dbar = 0;
  for (int j = 0; j < J; ++j) {
    offsets[j] = dbar;
    dbar += counts[j];
  }

  const auto& ini = field(doc, pointer, "initial");
  const std::string ini_ptr = pointer + "/initial";
  if (!ini.is_array() || static_cast<int>(ini.size()) != counts[0])
    throw SchemaError(ini_ptr, "must be an array of d_1 = " + std::to_string(counts[0]) +
                                   " probabilities");
  std::vector<double> initial;
  for (std::size_t i = 0; i < ini.size(); ++i) {
    if (!ini[i].is_number())
      throw SchemaError(ini_ptr + "/" + std::to_string(i), "must be a number");
    initial.push_back(ini[i].get<double>());
  }

  EntryGrid entries(dbar, std::vector<IntensityEntry>(dbar));
  std::vector<std::vector<bool>> seen(J, std::vector<bool>(J, false));
  bool explicit_jumps = false;
  if (doc.contains("blocks")) {
    const auto& blocks = doc.at("blocks");
    const std::string bptr = pointer + "/blocks";
    if (!blocks.is_array()) throw SchemaError(bptr, "must be an array");
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const std::string p = bptr + "/" + std::to_string(b);
      const auto& blk = blocks[b];
      const int j = macro_label(field(blk, p, "from"), p + "/from", J);
      const int k = macro_label(field(blk, p, "to"), p + "/to", J);
      if (seen[j][k]) throw SchemaError(p, "duplicate block");
      seen[j][k] = true;
      if (j != k) explicit_jumps = true;
      const auto& rows = field(blk, p, "entries");
      const std::string ep = p + "/entries";
      if (!rows.is_array() || static_cast<int>(rows.size()) != counts[j])
        throw SchemaError(ep, "must have " + std::to_string(counts[j]) + " rows");
      for (int a = 0; a < counts[j]; ++a) {
        const std::string rp = ep + "/" + std::to_string(a);
        if (!rows[a].is_array() || static_cast<int>(rows[a].size()) != counts[k])
          throw SchemaError(rp, "must have " + std::to_string(counts[k]) + " entries");
        for (int c = 0; c < counts[k]; ++c)
          entries[offsets[j] + a][offsets[k] + c] = entry_from_json(
              rows[a][c], rp + "/" + std::to_string(c), j == k && a == c);
      }
    }
  } else if (!doc.contains("reset")) {
    throw SchemaError(pointer, "missing field 'blocks'");
  }

  std::optional<ResetStructure> reset;
  if (doc.contains("reset")) {
    const auto& rdoc = doc.at("reset");
    const std::string rptr = pointer + "/reset";
    if (!rdoc.is_object()) throw SchemaError(rptr, "must be an object");
    ResetStructure rs;
    rs.beta.assign(J, std::vector<std::vector<ScalarFunction>>(J));
    rs.pi.assign(J, {});
    if (rdoc.contains("beta")) {
      const auto& bl = rdoc.at("beta");
      if (!bl.is_array()) throw SchemaError(rptr + "/beta", "must be an array");
      for (std::size_t i = 0; i < bl.size(); ++i) {
        const std::string p = rptr + "/beta/" + std::to_string(i);
        const int j = macro_label(field(bl[i], p, "from"), p + "/from", J);
        const int k = macro_label(field(bl[i], p, "to"), p + "/to", J);
        if (j == k) throw SchemaError(p, "beta needs from != to");
        if (!rs.beta[j][k].empty()) throw SchemaError(p, "duplicate beta entry");
        rs.beta[j][k] = function_array(field(bl[i], p, "rates"), p + "/rates", counts[j]);
      }
    }
    if (rdoc.contains("pi")) {
      const auto& pl = rdoc.at("pi");
      if (!pl.is_array()) throw SchemaError(rptr + "/pi", "must be an array");
      for (std::size_t i = 0; i < pl.size(); ++i) {
        const std::string p = rptr + "/pi/" + std::to_string(i);
        const int k = macro_label(field(pl[i], p, "state"), p + "/state", J);
        if (!rs.pi[k].empty()) throw SchemaError(p, "duplicate pi entry");
        rs.pi[k] = function_array(field(pl[i], p, "weights"), p + "/weights", counts[k]);
      }
    }
    for (int k = 0; k < J; ++k)
      if (rs.pi[k].empty() && counts[k] == 1) rs.pi[k] = {ScalarFunction::constant(1.0)};
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < J; ++k)
        if (!rs.beta[j][k].empty() && rs.pi[k].empty())
          throw SchemaError(rptr + "/pi", "missing weights for macrostate " +
                                              std::to_string(k + 1));
    reset = std::move(rs);
  }

  try {
    if (reset && !explicit_jumps) {
      std::vector<EntryGrid> diag;
      for (int j = 0; j < J; ++j) {
        EntryGrid blk(counts[j], std::vector<IntensityEntry>(counts[j]));
        for (int a = 0; a < counts[j]; ++a)
          for (int c = 0; c < counts[j]; ++c)
            blk[a][c] = entries[offsets[j] + a][offsets[j] + c];
        diag.push_back(std::move(blk));
      }
      AggregateModel m = AggregateModel::build_from_reset(counts, std::move(diag),
                                                          std::move(*reset), initial);
      m.set_names(names);
      return m;
    }
    AggregateModel m(counts, std::move(entries), initial, std::move(reset));
    m.set_names(names);
    return m;
  } catch (const DomainError& e) {
    throw SchemaError(pointer, e.what());
  }
}

json model_to_json(const AggregateModel& model) {
  const int J = model.macrostates();
  json doc;
  if (model.names().empty())
    doc["macrostates"] = J;
  else
    doc["macrostates"] = model.names();
  doc["micro_counts"] = model.micro_counts();
  doc["initial"] = std::vector<double>(model.initial().data(),
                                       model.initial().data() + model.initial().size());
  json blocks = json::array();
  const auto& e = model.entries();
  for (int j = 0; j < J; ++j)
    for (int k = 0; k < J; ++k) {
      if (j != k && model.blocks_from_reset()) continue;
      if (model.block_is_zero(j, k)) continue;
      json rows = json::array();
      for (int a = 0; a < model.micro_count(j); ++a) {
        json row = json::array();
        for (int c = 0; c < model.micro_count(k); ++c)
          row.push_back(entry_to_json(e[model.offset(j) + a][model.offset(k) + c]));
        rows.push_back(std::move(row));
      }
      blocks.push_back({{"from", j + 1}, {"to", k + 1}, {"entries", std::move(rows)}});
    }
  doc["blocks"] = std::move(blocks);
  if (model.has_reset()) {
    const auto& rs = model.reset();
    json beta = json::array();
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < J; ++k) {
        if (rs.beta[j][k].empty()) continue;
        json rates = json::array();
        for (const auto& f : rs.beta[j][k]) rates.push_back(f.to_json());
        beta.push_back({{"from", j + 1}, {"to", k + 1}, {"rates", std::move(rates)}});
      }
    json pi = json::array();
    for (int k = 0; k < J; ++k) {
      if (rs.pi[k].empty()) continue;
      json w = json::array();
      for (const auto& f : rs.pi[k]) w.push_back(f.to_json());
      pi.push_back({{"state", k + 1}, {"weights", std::move(w)}});
    }
    doc["reset"] = {{"beta", std::move(beta)}, {"pi", std::move(pi)}};
  }
  return doc;
}

}  // namespace aggmark
