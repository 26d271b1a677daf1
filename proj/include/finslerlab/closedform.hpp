#pragma once

#include <string>
#include <vector>

#include "finslerlab/beta.hpp"
#include "finslerlab/coefficients.hpp"

namespace finslerlab {

// b, alpha, beta at a sample; construction enforces the domain guards
struct CoefficientContext {
    int n = 0;
    double b = 0, alpha = 0, beta = 0;
};

CoefficientContext make_context(const BetaTensors& bt, const Vector& y);

struct MatrixTerm {
    std::string name, block;
    Matrix value;
};

struct ClosedRiemann {
    Matrix FR;    // FR(i,k) = FR^i_k
    Matrix alpha; // R^i_k of alpha
    std::vector<MatrixTerm> terms;
};

struct ScalarTerm {
    std::string name, block;
    double value = 0;
};

struct ClosedRicci {
    double FRic00 = 0;
    double alpha = 0; // Ric_00 of alpha
    std::vector<ScalarTerm> terms;
};

ClosedRiemann closed_riemann(const CoefficientSet& set, const BetaTensors& bt, const AlphaCurvature& ac,
                             const Vector& y);
ClosedRicci closed_ricci(const CoefficientSet& set, const BetaTensors& bt, const AlphaCurvature& ac,
                         const Vector& y);
// FRic_00 of the closed Riemann tensor through exact y-jets of its trace
double closed_ricci_from_trace(const CoefficientSet& set, const BetaTensors& bt, const AlphaCurvature& ac,
                               const Vector& y);

struct RatIrrat {
    double rat = 0, irrat = 0;
    std::vector<ScalarTerm> rat_terms, irrat_terms;
};

RatIrrat rat_irrat(const CoefficientSet& set, const BetaTensors& bt, const AlphaCurvature& ac, const Vector& y,
                   double K);

// b^4 (b^2 Rat - beta Irrat) = (b^2 alpha^2 - beta^2) Poly1 + (b^4 r00 - 2 b^2 beta r0 + beta^2 r)^2 Poly2
// literal: Poly1, Poly2 as tabulated; divisibility: the left side minus the Poly2 term is
// (b^2 alpha^2 - beta^2) times the tabulated quotient
enum class Poly12Form { literal, divisibility };

double poly12_residual(const CoefficientSet& set, const BetaTensors& bt, const AlphaCurvature& ac, const Vector& y,
                       double K, Poly12Form form);

// compensated sum in descending magnitude order
double neumaier_sum(std::vector<double> terms);

}
