#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>

#include "finslerlab/beta.hpp"
#include "finslerlab/riemann.hpp"

namespace finslerlab {

// r_ij = c a_ij + d b_i b_j + b_i theta_j + theta_i b_j with theta_i b^i = 0
struct Decomposition {
    double c = 0, d = 0;
    Vector theta;
    double residual = 0; // max_ij of the reconstruction defect
};

// throws RankDeficient when b vanishes; c is still recovered and carried by the exception
Decomposition extract_decomposition(const ChartFrame& f, const BetaTensors& bt);

// c, d and their gradients c_k = c_{|k}, d_k at one point
struct ScalarField {
    double c = 0, d = 0;
    Vector dc, dd;
    bool exact = false; // false when the gradients come from a difference stencil
};

inline constexpr double stencil_step = 1e-4;
// relative accuracy of stencil gradients; thresholds of residuals that use them are raised to this
inline constexpr double stencil_accuracy = 1e-5;

// exact jets of c_expr/d_expr when the spec has them, otherwise extraction on a central stencil of
// step stencil_step * scale; throws MissingScalars when neither source is available
ScalarField scalar_field(const MetricSpec& spec, const Vector& x, double scale = 1.0);

using ResidualMap = std::map<std::string, double>;

struct PointData {
    const ChartFrame& frame;
    const AlphaCurvature& ac;
    const BetaTensors& bt;
    const Decomposition& dec;
    const ScalarField& sf;
    const Vector& y;
};

// Ricci-flat characterization; keys
//   ric00, r00, si0: the three defining conditions
//   c0, s0|b, si0|i: the three conditions they imply, X, Y, Z: the sufficiency quantities
//   theta: b^2 theta_0 + 3 s_0; bi*si0: b^2 s_i0 + beta s_i - s_0 b_i; t00, t0, tii: the t contractions
//   ric0, ric: the b-contractions of Ric against their closed forms
//   ric0_jet, ric_jet: the same closed forms against y-jets of the ric00 right-hand side
ResidualMap check_einstein(const PointData& p);

// vanishing flag curvature; keys rik, rij, sij, r00 (direct) and r00_from_rij (contraction of rij);
// when rij and sij pass, also sik|0, si0|k, si0|0, dk_skew and s0|k
ResidualMap check_flag(const PointData& p);

// conformal beta; keys d, sij, c2_mu_b2, sectional, ricci; throws InputError for mu > 0
ResidualMap check_conformal(const PointData& p, double mu);

// the metric a' = b^4 a with the 1-form b' = b b_i; keys ric00, bij, tau_i.
// throws HypothesisNotMet when the ricci-flat conditions fail above hypothesis_tol
ResidualMap check_deformation_remark(const PointData& p, double hypothesis_tol = 1e-6);

// least-squares K in FRic00 = (n-1) K F^2 over samples
double fit_einstein_constant(int n, std::span<const double> fric00, std::span<const double> f2);

}
