#pragma once

#include <string>

#include "finslerlab/riemann.hpp"
#include "finslerlab/taylor.hpp"

namespace finslerlab {

struct CurvatureBundle {
    double F = 0;
    Matrix g, ginv;
    Vector G;
    Matrix FR;        // FR(i,k) = FR^i_k
    bool has_ricci = false;
    Matrix FRic;      // Akbar-Zadeh Ricci tensor
    double FRic00 = 0;
    Vector Fy;        // F_{y^k}
    double domain_margin = 0;
};

struct GuardReport {
    double alpha = 0, b2 = 0, margin = 0;
    bool ok = false;
    std::string reason;
};

inline constexpr double guard_alpha = 1e-9;
inline constexpr double guard_b2 = 1e-12;
inline constexpr double guard_margin = 1e-3;

GuardReport check_guards(Family family, const ChartFrame& f, const Vector& y);
// throws GuardViolation when the sample is outside the admissible cone
void require_guards(Family family, const ChartFrame& f, const Vector& y);

double finsler_norm(Family family, const ChartFrame& f, const Vector& y);

// F^2 as a Taylor jet in (dx, dy) around (x, y), x-degree <= 2, total degree <= order
TaylorJet f2_jet(Family family, const ChartFrame& f, const Vector& y, int order);

// Berwald and Akbar-Zadeh curvature from exact jets of F^2
CurvatureBundle berwald(Family family, const ChartFrame& f, const Vector& y, bool ricci = true);

std::pair<Matrix, Matrix> fundamental_tensor(Family family, const ChartFrame& f, const Vector& y);

struct FlagResidual {
    double tensor = 0; // max_ik |FR - K(F^2 delta - F y^i F_k)| / F^2
    double ricci = 0;  // |FRic00 - (n-1) K F^2| / F^2
};

FlagResidual flag_constancy_residual(const CurvatureBundle& c, const Vector& y, double K);

}
