#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggmark/cashflow.hpp"
#include "aggmark/error.hpp"
#include "aggmark/model.hpp"
#include "aggmark/payments.hpp"
#include "aggmark/phb.hpp"

namespace aggmark::cli {

/// Bad configuration; `where()` is "file:line" when known.
class ConfigError : public Error {
 public:
  ConfigError(std::string where, const std::string& message)
      : Error(where.empty() ? message : where + ": " + message), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

struct GridSpec {
  double start = 0.0;
  double end = 0.0;
  int steps = 0;
  int substeps = TimeGrid::kDefaultSubsteps;

  TimeGrid build() const { return TimeGrid::uniform(start, end, steps, substeps); }
};

struct BehaviourBlock {
  BehaviourSpec spec;
  std::optional<Exercise> exercise;
};

struct SimulationSpec {
  std::size_t paths = 10000;
  std::uint64_t seed = 1;
  /// Cash-flow bin edges; empty means five bins on the output grid.
  std::vector<double> bins;
  /// Test hook: multiplies every intensity of the simulated model.
  double corrupt_intensity_factor = 1.0;
};

struct Overrides {
  std::optional<int> grid_steps;
  std::optional<int> substeps;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<std::string> out;
};

/// Everything a run needs, resolved. The valuation time is the grid start.
struct RunConfig {
  std::string path;
  std::string hash;
  nlohmann::json effective;  // config with files inlined and overrides applied
  std::optional<AggregateModel> model;
  /// Payments with the horizon cut to the grid end when the grid stops early.
  PaymentSpec payments;
  double declared_horizon = 0.0;
  GridSpec grid;
  std::vector<SpellCondition> conditioning;
  std::optional<BehaviourBlock> behaviour;
  std::optional<SimulationSpec> simulation;
  std::string output_dir;
  CashflowOptions options;

  double valuation_time() const { return grid.start; }
};

/// Reads and checks a run configuration. Throws ConfigError for schema
/// problems (with file and line) and ValidationError for invalid models.
RunConfig load_config(const std::string& path, const Overrides& overrides = {});

/// 1-based line of the value at `pointer` in JSON `text`; 0 if not found.
int line_of_pointer(std::string_view text, const std::string& pointer);

/// 1-based line containing byte `offset`.
int line_of_offset(std::string_view text, std::size_t offset);

}  // namespace aggmark::cli
