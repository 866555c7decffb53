#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "aggmark/model.hpp"

namespace aggmark {

/// Model document:
///   macrostates   integer J, or array of J names
///   micro_counts  array of J positive integers
///   initial       array of d_1 probabilities
///   blocks        array of {from, to, entries}; entries is a d_from x d_to
///                 array whose cells are 0, a number, a catalogue function or
///                 "complement" (diagonal cells only)
///   reset         optional {beta: [{from, to, rates}], pi: [{state, weights}]}
/// Macrostates are 1-based in documents. With `reset` present, jump blocks
/// may be omitted and are then generated from beta and pi.
/// Errors are SchemaError with a JSON pointer relative to `pointer`.
AggregateModel model_from_json(const nlohmann::json& doc,
                               const std::string& pointer = "");
nlohmann::json model_to_json(const AggregateModel& model);

}  // namespace aggmark
