#include "aggmark/catalogue.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <variant>

#include "aggmark/error.hpp"

namespace aggmark {

namespace {

struct Constant {
  double value;
};
struct Linear {
  double intercept;
  double slope;
};
struct GompertzMakeham {
  double a;
  double b;
  double c;
};
struct Logistic {
  double lower;
  double upper;
  double midpoint;
  double scale;
};
struct PiecewiseConstant {
  std::vector<double> knots;
  std::vector<double> values;
  bool left_continuous;
};
struct Sum {
  std::vector<ScalarFunction> terms;
};
struct Product {
  std::vector<ScalarFunction> factors;
};
struct Affine {
  double offset;
  double factor;
  ScalarFunction of;
};

double softplus(double y) {
  return y > 0.0 ? y + std::log1p(std::exp(-y)) : std::log1p(std::exp(y));
}

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGaussNodes = {
    0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
    0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {
    0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
    0.2369268850561891, 0.2369268850561891};

template <class F>
double gauss_panels(const F& f, double a, double b, int panels) {
  double total = 0.0;
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double half = 0.5 * width;
    const double mid = lo + half;
    for (std::size_t i = 0; i < kGaussNodes.size(); ++i)
      total += kGaussWeights[i] * f(mid + half * kGaussNodes[i]);
  }
  return total * 0.5 * width;
}

void require_finite(double v, const std::string& pointer, const char* field) {
  if (!std::isfinite(v))
    throw SchemaError(pointer + "/" + field, "must be a finite number");
}

double number_field(const nlohmann::json& doc, const std::string& pointer,
                    const char* field) {
  if (!doc.contains(field))
    throw SchemaError(pointer, std::string("missing field '") + field + "'");
  const auto& v = doc.at(field);
  if (!v.is_number())
    throw SchemaError(pointer + "/" + field, "must be a number");
  const double x = v.get<double>();
  require_finite(x, pointer, field);
  return x;
}

std::vector<double> number_array(const nlohmann::json& doc,
                                 const std::string& pointer,
                                 const char* field) {
  if (!doc.contains(field) || !doc.at(field).is_array())
    throw SchemaError(pointer + "/" + field, "must be an array of numbers");
  std::vector<double> out;
  std::size_t i = 0;
  for (const auto& v : doc.at(field)) {
    if (!v.is_number())
      throw SchemaError(pointer + "/" + field + "/" + std::to_string(i),
                        "must be a number");
    out.push_back(v.get<double>());
    ++i;
  }
  return out;
}

}  // namespace

struct ScalarFunction::Node {
  std::variant<Constant, Linear, GompertzMakeham, Logistic, PiecewiseConstant,
               Sum, Product, Affine>
      data;
};

ScalarFunction::ScalarFunction()
    : node_(std::make_shared<const Node>(Node{Constant{0.0}})) {}

ScalarFunction::ScalarFunction(std::shared_ptr<const Node> node)
    : node_(std::move(node)) {}

ScalarFunction ScalarFunction::constant(double value) {
  return ScalarFunction(std::make_shared<const Node>(Node{Constant{value}}));
}

ScalarFunction ScalarFunction::linear(double intercept, double slope) {
  return ScalarFunction(
      std::make_shared<const Node>(Node{Linear{intercept, slope}}));
}

ScalarFunction ScalarFunction::gompertz_makeham(double a, double b, double c) {
  if (!(c > 0.0)) throw DomainError("gompertz_makeham: base c must be positive");
  return ScalarFunction(
      std::make_shared<const Node>(Node{GompertzMakeham{a, b, c}}));
}

ScalarFunction ScalarFunction::logistic(double lower, double upper,
                                        double midpoint, double scale) {
  if (!(scale > 0.0)) throw DomainError("logistic: scale must be positive");
  return ScalarFunction(std::make_shared<const Node>(
      Node{Logistic{lower, upper, midpoint, scale}}));
}

ScalarFunction ScalarFunction::piecewise_constant(std::vector<double> knots,
                                                  std::vector<double> values,
                                                  bool left_continuous) {
  if (values.size() != knots.size() + 1)
    throw DomainError("piecewise_constant: need exactly one more value than knots");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i] > knots[i - 1]))
      throw DomainError("piecewise_constant: knots must be strictly increasing");
  return ScalarFunction(std::make_shared<const Node>(Node{
      PiecewiseConstant{std::move(knots), std::move(values), left_continuous}}));
}

ScalarFunction ScalarFunction::sum(std::vector<ScalarFunction> terms) {
  if (terms.empty()) return ScalarFunction();
  if (terms.size() == 1) return terms.front();
  return ScalarFunction(std::make_shared<const Node>(Node{Sum{std::move(terms)}}));
}

ScalarFunction ScalarFunction::product(std::vector<ScalarFunction> factors) {
  if (factors.empty()) return constant(1.0);
  if (factors.size() == 1) return factors.front();
  return ScalarFunction(
      std::make_shared<const Node>(Node{Product{std::move(factors)}}));
}

ScalarFunction ScalarFunction::affine(double offset, double factor,
                                      ScalarFunction of) {
  return ScalarFunction(
      std::make_shared<const Node>(Node{Affine{offset, factor, std::move(of)}}));
}

ScalarFunction ScalarFunction::step_after(double threshold) {
  return piecewise_constant({threshold}, {0.0, 1.0}, true);
}

ScalarFunction ScalarFunction::step_before(double threshold) {
  return piecewise_constant({threshold}, {1.0, 0.0}, false);
}

double ScalarFunction::operator()(double x) const {
  return std::visit(
      [x](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, Linear>) {
          return n.intercept + n.slope * x;
        } else if constexpr (std::is_same_v<T, GompertzMakeham>) {
          return n.a + n.b * std::pow(n.c, x);
        } else if constexpr (std::is_same_v<T, Logistic>) {
          return n.lower +
                 (n.upper - n.lower) / (1.0 + std::exp(-(x - n.midpoint) / n.scale));
        } else if constexpr (std::is_same_v<T, PiecewiseConstant>) {
          const auto it =
              n.left_continuous
                  ? std::lower_bound(n.knots.begin(), n.knots.end(), x)
                  : std::upper_bound(n.knots.begin(), n.knots.end(), x);
          return n.values[static_cast<std::size_t>(it - n.knots.begin())];
        } else if constexpr (std::is_same_v<T, Sum>) {
          double s = 0.0;
          for (const auto& f : n.terms) s += f(x);
          return s;
        } else if constexpr (std::is_same_v<T, Product>) {
          double p = 1.0;
          for (const auto& f : n.factors) {
            p *= f(x);
            if (p == 0.0) break;
          }
          return p;
        } else {
          return n.offset + n.factor * n.of(x);
        }
      },
      node_->data);
}

double ScalarFunction::integral(double a, double b) const {
  if (a == b) return 0.0;
  if (a > b) return -integral(b, a);
  return std::visit(
      [&](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return n.value * (b - a);
        } else if constexpr (std::is_same_v<T, Linear>) {
          return n.intercept * (b - a) + 0.5 * n.slope * (b * b - a * a);
        } else if constexpr (std::is_same_v<T, GompertzMakeham>) {
          const double log_c = std::log(n.c);
          const double tail = log_c == 0.0
                                  ? n.b * (b - a)
                                  : n.b * (std::pow(n.c, b) - std::pow(n.c, a)) / log_c;
          return n.a * (b - a) + tail;
        } else if constexpr (std::is_same_v<T, Logistic>) {
          const double ya = (a - n.midpoint) / n.scale;
          const double yb = (b - n.midpoint) / n.scale;
          return n.lower * (b - a) +
                 (n.upper - n.lower) * n.scale * (softplus(yb) - softplus(ya));
        } else if constexpr (std::is_same_v<T, PiecewiseConstant>) {
          double total = 0.0;
          double lo = a;
          std::size_t i = static_cast<std::size_t>(
              std::upper_bound(n.knots.begin(), n.knots.end(), a) - n.knots.begin());
          while (lo < b) {
            const double hi = i < n.knots.size() ? std::min(b, n.knots[i]) : b;
            total += n.values[i] * (hi - lo);
            lo = hi;
            ++i;
          }
          return total;
        } else if constexpr (std::is_same_v<T, Sum>) {
          double s = 0.0;
          for (const auto& f : n.terms) s += f.integral(a, b);
          return s;
        } else if constexpr (std::is_same_v<T, Product>) {
          std::vector<double> cuts{a};
          for (double p : breakpoints())
            if (p > a && p < b) cuts.push_back(p);
          cuts.push_back(b);
          double total = 0.0;
          for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            total += gauss_panels(*this, cuts[i], cuts[i + 1], 32);
          return total;
        } else {
          return n.offset * (b - a) + n.factor * n.of.integral(a, b);
        }
      },
      node_->data);
}

std::vector<double> ScalarFunction::breakpoints() const {
  std::vector<double> out;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, PiecewiseConstant>) {
          out = n.knots;
        } else if constexpr (std::is_same_v<T, Sum>) {
          for (const auto& f : n.terms) {
            auto b = f.breakpoints();
            out.insert(out.end(), b.begin(), b.end());
          }
        } else if constexpr (std::is_same_v<T, Product>) {
          for (const auto& f : n.factors) {
            auto b = f.breakpoints();
            out.insert(out.end(), b.begin(), b.end());
          }
        } else if constexpr (std::is_same_v<T, Affine>) {
          out = n.of.breakpoints();
        }
      },
      node_->data);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ScalarFunction::Kind ScalarFunction::kind() const {
  return static_cast<Kind>(node_->data.index());
}

std::optional<double> ScalarFunction::constant_value() const {
  if (const auto* c = std::get_if<Constant>(&node_->data)) return c->value;
  if (const auto* p = std::get_if<PiecewiseConstant>(&node_->data)) {
    if (std::all_of(p->values.begin(), p->values.end(),
                    [&](double v) { return v == p->values.front(); }))
      return p->values.front();
  }
  if (const auto* a = std::get_if<Affine>(&node_->data)) {
    if (a->factor == 0.0) return a->offset;
    if (auto inner = a->of.constant_value()) return a->offset + a->factor * *inner;
  }
  if (const auto* l = std::get_if<Linear>(&node_->data))
    if (l->slope == 0.0) return l->intercept;
  if (const auto* pr = std::get_if<Product>(&node_->data)) {
    double v = 1.0;
    for (const auto& f : pr->factors) {
      auto c = f.constant_value();
      if (c && *c == 0.0) return 0.0;
      if (!c) return std::nullopt;
      v *= *c;
    }
    return v;
  }
  if (const auto* s = std::get_if<Sum>(&node_->data)) {
    double v = 0.0;
    for (const auto& f : s->terms) {
      auto c = f.constant_value();
      if (!c) return std::nullopt;
      v += *c;
    }
    return v;
  }
  return std::nullopt;
}

bool ScalarFunction::is_zero() const {
  auto c = constant_value();
  return c && *c == 0.0;
}

nlohmann::json ScalarFunction::to_json() const {
  using nlohmann::json;
  return std::visit(
      [](const auto& n) -> json {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return json{{"type", "constant"}, {"value", n.value}};
        } else if constexpr (std::is_same_v<T, Linear>) {
          return json{{"type", "linear"}, {"intercept", n.intercept}, {"slope", n.slope}};
        } else if constexpr (std::is_same_v<T, GompertzMakeham>) {
          return json{{"type", "gompertz_makeham"}, {"a", n.a}, {"b", n.b}, {"c", n.c}};
        } else if constexpr (std::is_same_v<T, Logistic>) {
          return json{{"type", "logistic"},   {"lower", n.lower},
                      {"upper", n.upper},     {"midpoint", n.midpoint},
                      {"scale", n.scale}};
        } else if constexpr (std::is_same_v<T, PiecewiseConstant>) {
          json j{{"type", "piecewise_constant"}, {"knots", n.knots}, {"values", n.values}};
          if (n.left_continuous) j["left_continuous"] = true;
          return j;
        } else if constexpr (std::is_same_v<T, Sum>) {
          json terms = json::array();
          for (const auto& f : n.terms) terms.push_back(f.to_json());
          return json{{"type", "sum"}, {"terms", terms}};
        } else if constexpr (std::is_same_v<T, Product>) {
          json factors = json::array();
          for (const auto& f : n.factors) factors.push_back(f.to_json());
          return json{{"type", "product"}, {"factors", factors}};
        } else {
          return json{{"type", "affine"},
                      {"offset", n.offset},
                      {"factor", n.factor},
                      {"of", n.of.to_json()}};
        }
      },
      node_->data);
}

ScalarFunction ScalarFunction::from_json(const nlohmann::json& doc,
                                         const std::string& pointer) {
  if (doc.is_number()) {
    const double v = doc.get<double>();
    if (!std::isfinite(v)) throw SchemaError(pointer, "must be a finite number");
    return constant(v);
  }
  if (!doc.is_object())
    throw SchemaError(pointer, "function must be a number or an object with a 'type'");
  if (!doc.contains("type") || !doc.at("type").is_string())
    throw SchemaError(pointer, "missing string field 'type'");
  const std::string type = doc.at("type").get<std::string>();
  try {
    if (type == "constant") return constant(number_field(doc, pointer, "value"));
    if (type == "linear")
      return linear(number_field(doc, pointer, "intercept"),
                    number_field(doc, pointer, "slope"));
    if (type == "gompertz_makeham")
      return gompertz_makeham(number_field(doc, pointer, "a"),
                              number_field(doc, pointer, "b"),
                              number_field(doc, pointer, "c"));
    if (type == "logistic")
      return logistic(number_field(doc, pointer, "lower"),
                      number_field(doc, pointer, "upper"),
                      number_field(doc, pointer, "midpoint"),
                      number_field(doc, pointer, "scale"));
    if (type == "piecewise_constant") {
      bool left = false;
      if (doc.contains("left_continuous")) {
        if (!doc.at("left_continuous").is_boolean())
          throw SchemaError(pointer + "/left_continuous", "must be a boolean");
        left = doc.at("left_continuous").get<bool>();
      }
      return piecewise_constant(number_array(doc, pointer, "knots"),
                                number_array(doc, pointer, "values"), left);
    }
    if (type == "sum" || type == "product") {
      const char* field = type == "sum" ? "terms" : "factors";
      if (!doc.contains(field) || !doc.at(field).is_array())
        throw SchemaError(pointer + "/" + field, "must be an array of functions");
      std::vector<ScalarFunction> parts;
      std::size_t i = 0;
      for (const auto& item : doc.at(field))
        parts.push_back(from_json(item, pointer + "/" + field + "/" + std::to_string(i++)));
      return type == "sum" ? sum(std::move(parts)) : product(std::move(parts));
    }
    if (type == "affine") {
      if (!doc.contains("of")) throw SchemaError(pointer, "missing field 'of'");
      return affine(number_field(doc, pointer, "offset"),
                    number_field(doc, pointer, "factor"),
                    from_json(doc.at("of"), pointer + "/of"));
    }
  } catch (const DomainError& e) {
    throw SchemaError(pointer, e.what());
  }
  throw SchemaError(pointer + "/type", "unknown function type '" + type + "'");
}

bool operator==(const ScalarFunction& a, const ScalarFunction& b) {
  return a.to_json() == b.to_json();
}

}  // namespace aggmark
