#include "aggmark/payments.hpp"

#include <algorithm>
#include <cmath>

#include "aggmark/error.hpp"

namespace aggmark {

namespace {

void merge(std::vector<double>& out, const std::vector<double>& more) {
  out.insert(out.end(), more.begin(), more.end());
}

void sort_unique(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

PaymentFunction::PaymentFunction(std::vector<Term> terms) {
  for (auto& t : terms)
    if (!t.time.is_zero() && !t.duration.is_zero()) terms_.push_back(std::move(t));
}

PaymentFunction PaymentFunction::of_time(ScalarFunction f) {
  return PaymentFunction({{std::move(f), ScalarFunction::constant(1.0)}});
}

PaymentFunction PaymentFunction::separable(ScalarFunction time,
                                           ScalarFunction duration) {
  return PaymentFunction({{std::move(time), std::move(duration)}});
}

double PaymentFunction::operator()(double s, double z) const {
  double v = 0.0;
  for (const auto& t : terms_) v += t.time(s) * t.duration(z);
  return v;
}

double PaymentFunction::time_part(double s) const {
  double v = 0.0;
  for (const auto& t : terms_) {
    auto c = t.duration.constant_value();
    if (!c) throw MisuseError("payment depends on duration");
    v += t.time(s) * *c;
  }
  return v;
}

bool PaymentFunction::depends_on_duration() const {
  for (const auto& t : terms_)
    if (!t.duration.constant_value()) return true;
  return false;
}

std::vector<double> PaymentFunction::time_breakpoints() const {
  std::vector<double> out;
  for (const auto& t : terms_) merge(out, t.time.breakpoints());
  sort_unique(out);
  return out;
}

std::vector<double> PaymentFunction::duration_breakpoints() const {
  std::vector<double> out;
  for (const auto& t : terms_) merge(out, t.duration.breakpoints());
  sort_unique(out);
  return out;
}

PaymentFunction operator+(const PaymentFunction& a, const PaymentFunction& b) {
  std::vector<PaymentFunction::Term> terms = a.terms_;
  terms.insert(terms.end(), b.terms_.begin(), b.terms_.end());
  return PaymentFunction(std::move(terms));
}

PaymentSpec PaymentSpec::zero(int macrostates, double horizon,
                              ScalarFunction interest) {
  PaymentSpec p;
  p.sojourn.assign(macrostates, {});
  p.transition.assign(macrostates, std::vector<PaymentFunction>(macrostates));
  p.horizon = horizon;
  p.interest = std::move(interest);
  return p;
}

double PaymentSpec::sojourn_rate(int j, double s, double z) const {
  if (s > horizon) return 0.0;
  return sojourn[j](s, z);
}

double PaymentSpec::transition_payment(int j, int k, double s, double z) const {
  if (s > horizon || j == k) return 0.0;
  return transition[j][k](s, z);
}

bool PaymentSpec::duration_independent() const {
  for (const auto& f : sojourn)
    if (f.depends_on_duration()) return false;
  for (const auto& row : transition)
    for (const auto& f : row)
      if (f.depends_on_duration()) return false;
  return true;
}

bool PaymentSpec::is_zero() const {
  for (const auto& f : sojourn)
    if (!f.is_zero()) return false;
  for (const auto& row : transition)
    for (const auto& f : row)
      if (!f.is_zero()) return false;
  return true;
}

std::vector<double> PaymentSpec::time_breakpoints() const {
  std::vector<double> out{horizon};
  for (const auto& f : sojourn) merge(out, f.time_breakpoints());
  for (const auto& row : transition)
    for (const auto& f : row) merge(out, f.time_breakpoints());
  merge(out, interest.breakpoints());
  sort_unique(out);
  return out;
}

std::vector<double> PaymentSpec::duration_breakpoints() const {
  std::vector<double> out;
  for (const auto& f : sojourn) merge(out, f.duration_breakpoints());
  for (const auto& row : transition)
    for (const auto& f : row) merge(out, f.duration_breakpoints());
  sort_unique(out);
  return out;
}

double PaymentSpec::discount(double a, double b) const {
  if (a == b) return 1.0;
  return std::exp(-interest.integral(a, b));
}

PaymentSpec PaymentSpec::extended(int macrostates) const {
  const int J = this->macrostates();
  if (macrostates < J) throw DomainError("cannot shrink a payment spec");
  PaymentSpec p = *this;
  p.sojourn.resize(macrostates);
  p.transition.resize(macrostates);
  for (auto& row : p.transition) row.resize(macrostates);
  return p;
}

void PaymentSpec::check(int macrostates) const {
  if (this->macrostates() != macrostates)
    throw ValidationError("payment spec covers " + std::to_string(this->macrostates()) +
                          " macrostates, model has " + std::to_string(macrostates));
  if (static_cast<int>(transition.size()) != macrostates)
    throw ValidationError("transition payment table has the wrong size");
  for (const auto& row : transition)
    if (static_cast<int>(row.size()) != macrostates)
      throw ValidationError("transition payment table has the wrong size");
  if (!std::isfinite(horizon)) throw ValidationError("payment horizon must be finite");
  if (declared_duration_independent && *declared_duration_independent) {
    // sample a few (s, z) pairs; any spread in z contradicts the flag
    const double zs[] = {0.0, 0.1, 0.5, 1.0, 2.5, 7.0, 20.0};
    for (int i = 0; i < 8; ++i) {
      const double s = horizon * (0.2 + 0.1 * i);
      auto flat = [&](const PaymentFunction& f) {
        const double v0 = f(s, zs[0]);
        for (double z : zs)
          if (std::abs(f(s, z) - v0) > 1e-14 * std::max(1.0, std::abs(v0))) return false;
        return true;
      };
      for (const auto& f : sojourn)
        if (!flat(f))
          throw ValidationError("payments declared duration independent vary with duration");
      for (const auto& row : transition)
        for (const auto& f : row)
          if (!flat(f))
            throw ValidationError("payments declared duration independent vary with duration");
    }
  }
}

PaymentSpec operator+(const PaymentSpec& a, const PaymentSpec& b) {
  if (a.macrostates() != b.macrostates())
    throw DomainError("payment specs cover different macrostates");
  if (a.horizon != b.horizon) throw DomainError("payment specs have different horizons");
  if (!(a.interest == b.interest))
    throw DomainError("payment specs have different interest");
  PaymentSpec out = a;
  for (int j = 0; j < a.macrostates(); ++j) {
    out.sojourn[j] = a.sojourn[j] + b.sojourn[j];
    for (int k = 0; k < a.macrostates(); ++k)
      out.transition[j][k] = a.transition[j][k] + b.transition[j][k];
  }
  out.declared_duration_independent.reset();
  return out;
}

namespace {

using nlohmann::json;

int label(const json& doc, const std::string& ptr, const char* name, int J) {
  if (!doc.contains(name))
    throw SchemaError(ptr, std::string("missing field '") + name + "'");
  const auto& v = doc.at(name);
  if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > J)
    throw SchemaError(ptr + "/" + name,
                      "must be a macrostate between 1 and " + std::to_string(J));
  return v.get<int>() - 1;
}

PaymentFunction::Term term_from_json(const json& doc, const std::string& ptr) {
  PaymentFunction::Term t{ScalarFunction::constant(1.0), ScalarFunction::constant(1.0)};
  if (doc.contains("time")) t.time = ScalarFunction::from_json(doc.at("time"), ptr + "/time");
  if (doc.contains("duration"))
    t.duration = ScalarFunction::from_json(doc.at("duration"), ptr + "/duration");
  return t;
}

PaymentFunction function_from_json(const json& doc, const std::string& ptr) {
  if (!doc.is_object()) throw SchemaError(ptr, "must be an object");
  if (doc.contains("terms")) {
    const auto& ts = doc.at("terms");
    if (!ts.is_array()) throw SchemaError(ptr + "/terms", "must be an array");
    std::vector<PaymentFunction::Term> terms;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const std::string p = ptr + "/terms/" + std::to_string(i);
      if (!ts[i].is_object()) throw SchemaError(p, "must be an object");
      terms.push_back(term_from_json(ts[i], p));
    }
    return PaymentFunction(std::move(terms));
  }
  return PaymentFunction({term_from_json(doc, ptr)});
}

json function_to_json(const PaymentFunction& f) {
  json terms = json::array();
  for (const auto& t : f.terms())
    terms.push_back({{"time", t.time.to_json()}, {"duration", t.duration.to_json()}});
  return terms;
}

}  // namespace

PaymentSpec payments_from_json(const json& doc, int macrostates,
                               const std::string& pointer) {
  if (!doc.is_object()) throw SchemaError(pointer, "must be an object");
  if (!doc.contains("horizon")) throw SchemaError(pointer, "missing field 'horizon'");
  if (!doc.at("horizon").is_number())
    throw SchemaError(pointer + "/horizon", "must be a number");
  ScalarFunction r;
  if (doc.contains("interest"))
    r = ScalarFunction::from_json(doc.at("interest"), pointer + "/interest");
  PaymentSpec p = PaymentSpec::zero(macrostates, doc.at("horizon").get<double>(), r);
  if (doc.contains("sojourn")) {
    const auto& arr = doc.at("sojourn");
    if (!arr.is_array()) throw SchemaError(pointer + "/sojourn", "must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ptr = pointer + "/sojourn/" + std::to_string(i);
      if (!arr[i].is_object()) throw SchemaError(ptr, "must be an object");
      const int j = label(arr[i], ptr, "state", macrostates);
      p.sojourn[j] = p.sojourn[j] + function_from_json(arr[i], ptr);
    }
  }
  if (doc.contains("transition")) {
    const auto& arr = doc.at("transition");
    if (!arr.is_array()) throw SchemaError(pointer + "/transition", "must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ptr = pointer + "/transition/" + std::to_string(i);
      if (!arr[i].is_object()) throw SchemaError(ptr, "must be an object");
      const int j = label(arr[i], ptr, "from", macrostates);
      const int k = label(arr[i], ptr, "to", macrostates);
      if (j == k) throw SchemaError(ptr, "transition payment needs from != to");
      p.transition[j][k] = p.transition[j][k] + function_from_json(arr[i], ptr);
    }
  }
  if (doc.contains("duration_independent")) {
    const auto& v = doc.at("duration_independent");
    if (!v.is_boolean())
      throw SchemaError(pointer + "/duration_independent", "must be a boolean");
    p.declared_duration_independent = v.get<bool>();
  }
  try {
    p.check(macrostates);
  } catch (const ValidationError& e) {
    throw SchemaError(pointer, e.what());
  }
  return p;
}

json payments_to_json(const PaymentSpec& spec) {
  json doc;
  doc["horizon"] = spec.horizon;
  doc["interest"] = spec.interest.to_json();
  json soj = json::array();
  for (int j = 0; j < spec.macrostates(); ++j)
    if (!spec.sojourn[j].is_zero())
      soj.push_back({{"state", j + 1}, {"terms", function_to_json(spec.sojourn[j])}});
  json tr = json::array();
  for (int j = 0; j < spec.macrostates(); ++j)
    for (int k = 0; k < spec.macrostates(); ++k)
      if (!spec.transition[j][k].is_zero())
        tr.push_back({{"from", j + 1},
                      {"to", k + 1},
                      {"terms", function_to_json(spec.transition[j][k])}});
  doc["sojourn"] = std::move(soj);
  doc["transition"] = std::move(tr);
  if (spec.declared_duration_independent)
    doc["duration_independent"] = *spec.declared_duration_independent;
  return doc;
}

}  // namespace aggmark
