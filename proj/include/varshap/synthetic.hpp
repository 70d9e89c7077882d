#pragma once

#include <cstdint>
#include <string>

#include "varshap/dataset.hpp"

namespace varshap {

// Built-in generators: two-feature targets with closed-form attribution
// oracles, used by the verification suite and the `synth` subcommand.
//
//   pairwise_independence : X1,X2 Rademacher +-1, T = X1*X2. Each feature is
//                           pairwise independent of T yet jointly determines it.
//   nonlinearity          : X1,X2 ~ N(0,1), T = (2*X1 + 2*X2)^2.
//   non_additive          : X1,X2 ~ N(0,1), T = X1*X2.
//   rank_deficiency       : latent A,B ~ N(0,1); X1 = 0.1A + B, X2 = 0.1A - B,
//                           T = A (= 5*X1 + 5*X2 exactly).
enum class ExampleId {
  pairwise_independence,
  nonlinearity,
  non_additive,
  rank_deficiency,
};

ExampleId parse_example_id(const std::string& name);   // throws on unknown name
std::string example_id_name(ExampleId id);

struct SyntheticSpec {
  ExampleId example_id = ExampleId::nonlinearity;
  int n = 10000;
  uint64_t seed = 1;
};

// Features are named X1, X2; the target column is named T.
// Deterministic given the seed.
Dataset generate_synthetic(const SyntheticSpec& spec);

// Closed-form population quantities for the generators above.
//   sigma2_T : variance of T
//   L_X1/L_X2: single-feature variance reduction under the unrestricted
//              conditional expectation
//   L_X1X2   : joint variance reduction (unrestricted)
//   Lr_X1X2  : joint variance reduction of the best additive (GAM) predictor
//   phi_I    : complex-interaction share, Lr_X1X2 - L_X1X2 (reported negative)
enum class OracleQuantity { sigma2_T, L_X1, L_X2, L_X1X2, Lr_X1X2, phi_I };

OracleQuantity parse_oracle_quantity(const std::string& name);
std::string oracle_quantity_name(OracleQuantity q);

// Throws when the quantity has no closed form for the example (none currently).
double analytic_oracle(ExampleId id, OracleQuantity quantity);

}  // namespace varshap
