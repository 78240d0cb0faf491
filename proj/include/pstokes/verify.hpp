#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pstokes/field.hpp"
#include "pstokes/solver.hpp"
#include "pstokes/stress.hpp"

namespace pstokes {

// One measured estimate: both sides evaluated with the same midpoint
// quadrature, the parameters needed to reproduce the run, and ladder context
// whose meaning depends on the id (per-level ratios for scans, distribution
// samples for the layer-cake check). The constants in the continuous bounds
// are not explicit, so every "<=" is reported as a ratio; drivers decide
// what counts as stable.
struct EstimateReport {
  std::string id;  // mt1 | mt2 | ns-p | ns-2 | layer-cake | korn | embedding
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;      // lhs / rhs
  double p = 0.0;          // growth exponent of the stress law
  double q = 0.0;          // integrability of the forcing
  double eps = 0.0;        // duality gap p' - q, or the layer-cake exponent
  double h = 0.0;
  double forcing_a = 0.0;  // singular-forcing exponent, stamped by the driver
  std::vector<double> ladder;
  std::vector<std::pair<std::string, double>> extra;
};

double conjugate_exponent(double p);  // p' = p/(p-1)

// Gradient and pressure bound in the duality range q <= p':
//   int |grad u|^{q(p-1)} + |pi|^q  <=  c (int |f|^q + 1).
// extra: the two left-side terms separately.
EstimateReport verify_mt1(const Solution& sol, const TensorField& f, const GridDomain& dom,
                          double p, double q);

// Weighted companion at the same q, with omega = M(|f| chi + 1)^{q-p'} from
// the maximal operator and the dual weight omega' = omega^{-1/(p-1)}:
//   int |grad u|^p omega + int |pi|^p omega'  <=  c (int |f|^q + 1).
// extra also carries the pointwise Young bridge
//   int |grad u|^{q(p-1)}  <=  int |grad u|^p omega + int M(|f| chi + 1)^q,
// an exact inequality whose measured ratio must not exceed one.
EstimateReport verify_mt2(const Solution& sol, const TensorField& f, const GridDomain& dom,
                          double p, double q);

// Growth exponent of the convective bounds: s 2/(p-2) for 2 < p <= 3, then
// max{s p/(p-2), (p-3)/(p-2)}. Requires p > 2 and s >= 0.
double alpha(double s, double p);

// Combined bound for the convective system. Shear-thickening power laws pair
//   int |pi|^q + |pi|^p + |grad u|^{q(p-1)} + |grad u|^p omega
// against (int |f|^q + 1)^{1/(p-2) + alpha((p'-q)/q)}. The crossover law sits
// at p = 2 where the right side is a constant with no usable power law, so
// that branch fixes rhs = 1 and tracks the left side alone; boundedness along
// approximation ladders is the criterion. Throws for a power law with p <= 2
// and for user stress maps.
EstimateReport verify_ns_estimate(const Solution& sol, const TensorField& f, const GridDomain& dom,
                                  const StressModel& model, double q);

// Fubini identity behind the weighted bounds: with
// F(lambda) = int_{Mg <= lambda} |eps u|^p,
//   int_0^inf lambda^{-1-eps} F(lambda) dlambda
//     = (1/eps) int |eps u|^p (Mg)^{-eps}.
// Mg takes finitely many values, so the left side is integrated in closed
// form on each segment of the log-spaced lambda ladder refined by those
// values; the reported discrepancy is then pure roundoff and stays at that
// floor under ladder refinement. ladder holds F at the log nodes, spanning
// [min Mg / 100, max Mg * 100]. Requires eps > 0 and g bounded below by a
// positive constant.
EstimateReport layer_cake_identity(const VectorField& u, const ScalarField& g,
                                   const GridDomain& dom, double p, double eps,
                                   int lambda_nodes = 400);

// Empirical lower bound for the Korn constant sup |grad u|_{p,w} / |eps u|_{p,w}
// over zero-trace fields: a seeded ensemble of smoothed random fields, pure
// gradients (ratio one), and rigid rotations cut off at the walls (ratio
// above one). Deterministic for a fixed seed.
double korn_constant(const GridDomain& dom, double p, const ScalarField* weight = nullptr,
                     int samples = 32, std::uint64_t seed = 0x6b6f726eULL);

// Sobolev embedding ratio in three dimensions, p* = 3p/(3-p) for 1 < p < 3:
//   (int |u|^{p*} omega)^{1/p*} / (int |grad u|^p omega^{(3-p)/3})^{1/p},
// plus the weighted Poincare ratio with the plain mean over the domain.
// extra records the Muckenhoupt class p*/p' + 1 with the measured constant of
// omega, and both printed forms of the admissibility exponent for weights
// M(...)^{q-p'}: the one solving the defining equation,
// (p'-q)(3-p)/3 * p'/p*, and the simplified quotient (p'-q)/(p'-1); the two
// agree only at p = 3/2.
EstimateReport embedding_check(const VectorField& u, const GridDomain& dom, double p,
                               const ScalarField& omega, double q);

// Stability scan over the duality gap. For each q the forcing ladder is
// solved level by level and the estimate ratio recorded: the mt1 ratio, or
// the left side of the convective bound for the crossover law when
// with_convection is set. A row is stable when every level solved and the
// finite ratios stay within a factor two; eps0 is the largest gap p' - q
// among stable rows. Rows keep the order of q_grid; levels the order of
// k_levels. Failed solves are recorded in note, never thrown.
struct ScanRow {
  double q = 0.0;
  double gap = 0.0;             // p' - q
  std::vector<double> ratios;   // one per ladder level, nan for failed solves
  double spread = 0.0;          // max/min over finite ratios
  bool stable = false;
  std::string note;
};
struct ScanTable {
  double p = 0.0;
  double eps0 = 0.0;
  std::vector<ScanRow> rows;
};
ScanTable scan_epsilon0(const StressModel& model, const GridDomain& dom, const TensorField& f,
                        const std::vector<double>& k_levels, const std::vector<double>& q_grid,
                        const SolverConfig& cfg = {}, bool with_convection = false);

// Fixed-column renderings. CSV columns:
//   id,p,q,eps,h,forcing_a,lhs,rhs,ratio,ladder,extra
// with ladder semicolon-joined and extra as semicolon-joined key=value pairs;
// JSON mirrors the same fields per report (non-finite values become null).
std::string reports_csv(const std::vector<EstimateReport>& reports);
std::string reports_json(const std::vector<EstimateReport>& reports);
std::string scan_csv(const ScanTable& table);

}  // namespace pstokes
