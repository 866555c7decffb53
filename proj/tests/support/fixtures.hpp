#pragma once

#include <vector>

#include "aggmark/model.hpp"
#include "aggmark/payments.hpp"
#include "aggmark/phb.hpp"

namespace fixtures {

using aggmark::AggregateModel;
using aggmark::PaymentSpec;
using aggmark::ScalarFunction;

// Gompertz-Makeham active mortality and disability onset.
ScalarFunction active_mortality();
ScalarFunction disability_onset();

// Active (1) / disabled (d2 microstates) / dead (1), reset jumps.
// d2 = 1, 2 or 3.
AggregateModel disability_model(int d2);

// Waiting-period annuity: rate 1 in the disabled state once the spell is
// longer than 3 months, until age 65. Interest 2%.
PaymentSpec waiting_period_annuity();

// Three-state Markov chain (all d_j = 1): active, disabled, dead.
AggregateModel flat_chain();
// Term insurance on the flat chain: premium in active, disability annuity,
// death sum from active and disabled. Horizon 65.
PaymentSpec term_insurance();

// Two macrostates with two microstates each; jump blocks are not rank one.
AggregateModel two_block_model();
// Reset model with moderate rates on [0, 10].
AggregateModel busy_reset_model();

// Active (2 microstates), free policy, dead.
AggregateModel free_policy_model();
PaymentSpec free_policy_payments();
aggmark::BehaviourSpec free_policy_behaviour(bool time_varying);

// Single macrostate with two microstates feeding an absorbing state.
AggregateModel two_phase_model();

// Random generator with off-diagonal entries in [0, scale).
// 8 microstates (3 active, 4 disabled, dead) and duration-independent payments.
AggregateModel eight_state_model();
PaymentSpec eight_state_payments();

aggmark::Matrix random_generator(int d, double scale, unsigned seed);

}  // namespace fixtures
