#include "varshap/synthetic.hpp"

#include <stdexcept>

#include "varshap/rng.hpp"

namespace varshap {

ExampleId parse_example_id(const std::string& name) {
  if (name == "pairwise_independence") return ExampleId::pairwise_independence;
  if (name == "nonlinearity") return ExampleId::nonlinearity;
  if (name == "non_additive") return ExampleId::non_additive;
  if (name == "rank_deficiency") return ExampleId::rank_deficiency;
  throw std::runtime_error("unknown synthetic example '" + name + "'");
}

std::string example_id_name(ExampleId id) {
  switch (id) {
    case ExampleId::pairwise_independence: return "pairwise_independence";
    case ExampleId::nonlinearity: return "nonlinearity";
    case ExampleId::non_additive: return "non_additive";
    case ExampleId::rank_deficiency: return "rank_deficiency";
  }
  throw std::runtime_error("unknown example id");
}

OracleQuantity parse_oracle_quantity(const std::string& name) {
  if (name == "sigma2_T") return OracleQuantity::sigma2_T;
  if (name == "L_X1") return OracleQuantity::L_X1;
  if (name == "L_X2") return OracleQuantity::L_X2;
  if (name == "L_X1X2") return OracleQuantity::L_X1X2;
  if (name == "Lr_X1X2") return OracleQuantity::Lr_X1X2;
  if (name == "phi_I") return OracleQuantity::phi_I;
  throw std::runtime_error("unknown oracle quantity '" + name + "'");
}

std::string oracle_quantity_name(OracleQuantity q) {
  switch (q) {
    case OracleQuantity::sigma2_T: return "sigma2_T";
    case OracleQuantity::L_X1: return "L_X1";
    case OracleQuantity::L_X2: return "L_X2";
    case OracleQuantity::L_X1X2: return "L_X1X2";
    case OracleQuantity::Lr_X1X2: return "Lr_X1X2";
    case OracleQuantity::phi_I: return "phi_I";
  }
  throw std::runtime_error("unknown oracle quantity");
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 1) throw std::runtime_error("generate_synthetic: n must be >= 1");
  CounterRng rng(spec.seed);

  Dataset data;
  data.feature_names = {"X1", "X2"};
  data.target_name = "T";
  data.columns.assign(2, {});
  data.columns[0].reserve(spec.n);
  data.columns[1].reserve(spec.n);
  data.target.reserve(spec.n);

  for (int i = 0; i < spec.n; ++i) {
    double x1, x2, t;
    switch (spec.example_id) {
      case ExampleId::pairwise_independence:
        x1 = rng.next_sign();
        x2 = rng.next_sign();
        t = x1 * x2;
        break;
      case ExampleId::nonlinearity: {
        x1 = rng.next_normal();
        x2 = rng.next_normal();
        double z = 2.0 * x1 + 2.0 * x2;
        t = z * z;
        break;
      }
      case ExampleId::non_additive:
        x1 = rng.next_normal();
        x2 = rng.next_normal();
        t = x1 * x2;
        break;
      case ExampleId::rank_deficiency: {
        double a = rng.next_normal();
        double b = rng.next_normal();
        x1 = 0.1 * a + b;
        x2 = 0.1 * a - b;
        t = a;
        break;
      }
      default:
        throw std::runtime_error("generate_synthetic: unknown example id");
    }
    data.columns[0].push_back(x1);
    data.columns[1].push_back(x2);
    data.target.push_back(t);
  }
  return data;
}

double analytic_oracle(ExampleId id, OracleQuantity quantity) {
  // Population values; derivations live with the generator definitions:
  //  pairwise_independence: T = X1*X2 of Rademacher signs -> var 1, singles
  //    carry nothing, jointly exact, and no additive model does better than
  //    the mean.
  //  nonlinearity: Z = 2X1+2X2 ~ N(0,8); var(Z^2) = 2*8^2 = 128.
  //    E[T|X1] = 4X1^2 + 4 -> L = 16*var(X1^2) = 32; additive part
  //    4X1^2+4X2^2 leaves residual 8X1X2 with var 64.
  //  non_additive: T = X1*X2 of independent standard normals -> var 1,
  //    conditional means vanish singly, additive fit explains nothing.
  //  rank_deficiency: T = A, X1 = .1A+B, X2 = .1A-B ->
  //    E[T|Xi] = (0.1/1.01)Xi, L_single = 0.01/1.01; T = 5X1+5X2 exactly, so
  //    the joint fit is perfect and already additive.
  const double rank_single = 0.01 / 1.01;
  switch (id) {
    case ExampleId::pairwise_independence:
      switch (quantity) {
        case OracleQuantity::sigma2_T: return 1.0;
        case OracleQuantity::L_X1: return 0.0;
        case OracleQuantity::L_X2: return 0.0;
        case OracleQuantity::L_X1X2: return 1.0;
        case OracleQuantity::Lr_X1X2: return 0.0;
        case OracleQuantity::phi_I: return -1.0;
      }
      break;
    case ExampleId::nonlinearity:
      switch (quantity) {
        case OracleQuantity::sigma2_T: return 128.0;
        case OracleQuantity::L_X1: return 32.0;
        case OracleQuantity::L_X2: return 32.0;
        case OracleQuantity::L_X1X2: return 128.0;
        case OracleQuantity::Lr_X1X2: return 64.0;
        case OracleQuantity::phi_I: return -64.0;
      }
      break;
    case ExampleId::non_additive:
      switch (quantity) {
        case OracleQuantity::sigma2_T: return 1.0;
        case OracleQuantity::L_X1: return 0.0;
        case OracleQuantity::L_X2: return 0.0;
        case OracleQuantity::L_X1X2: return 1.0;
        case OracleQuantity::Lr_X1X2: return 0.0;
        case OracleQuantity::phi_I: return -1.0;
      }
      break;
    case ExampleId::rank_deficiency:
      switch (quantity) {
        case OracleQuantity::sigma2_T: return 1.0;
        case OracleQuantity::L_X1: return rank_single;
        case OracleQuantity::L_X2: return rank_single;
        case OracleQuantity::L_X1X2: return 1.0;
        case OracleQuantity::Lr_X1X2: return 1.0;
        case OracleQuantity::phi_I: return 0.0;
      }
      break;
  }
  throw std::runtime_error("analytic_oracle: quantity not defined for example");
}

}  // namespace varshap
