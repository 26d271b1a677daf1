#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finslerlab/expr.hpp"
#include "finslerlab/jet2.hpp"
#include "finslerlab/tensor.hpp"

namespace finslerlab {

enum class Family { singular_square, square, riemannian_only };

std::string_view family_name(Family f);
Family family_from_name(std::string_view s);

// sampling domain: the cube |x_i| <= box, optionally intersected with |x| <= ball
struct Region {
    double box = 0.5;
    std::optional<double> ball;
};

struct MetricSpec {
    int n = 0;
    Family family = Family::singular_square;
    std::vector<Expression> a;  // n*n, (i,j) and (j,i) share one tree
    std::vector<Expression> b;
    Params params;
    std::optional<Expression> c_expr, d_expr;
    Region region;

    const Expression& a_at(int i, int j) const { return a[i * n + j]; }
};

// a is given as its upper triangle or as a full symmetric matrix of strings
MetricSpec make_spec(int n, Family family, const std::vector<std::vector<std::string>>& a,
                     const std::vector<std::string>& b, Params params = {},
                     std::optional<std::string> c_expr = {}, std::optional<std::string> d_expr = {});

struct ChartFrame {
    int n = 0;
    Vector x;
    Matrix a;      // a_ij
    T3 da;         // da(i,j,k) = d_k a_ij
    T4 dda;        // dda(i,j,k,l) = d_k d_l a_ij
    Vector b;      // b_i
    Matrix db;     // db(i,j) = d_j b_i
    T3 ddb;        // ddb(i,j,k) = d_j d_k b_i
    Matrix ainv;   // a^ij
    Vector bup;    // b^i
    double b2 = 0; // b_i b^i
    T3 gamma;      // gamma(i,j,k) = Gamma^i_jk
    T4 dgamma;     // dgamma(i,j,k,l) = d_l Gamma^i_jk
    std::vector<Jet2> a_jets, b_jets;
    std::shared_ptr<const MetricSpec> spec; // source expressions; empty for frames built from jets
};

ChartFrame frame_from_jets(const Vector& x, std::vector<Jet2> a_jets, std::vector<Jet2> b_jets);
ChartFrame assemble_chart(const MetricSpec& spec, const Vector& x);

// b2 = a^ij b_i b_j as an x-jet
Jet2 b2_jet(const ChartFrame& f);

enum class Convention { standard, flipped };

struct AlphaCurvature {
    int n = 0;
    T4 R4;      // R4(i,j,k,l) = R^i_jkl
    T4 Rlow;    // Rlow(k,m,i,j) = R_kmij = a_mp R^p_kij
    Matrix Rik; // R^i_k(y)
    Matrix ric; // Ric_jl = R^m_jml
    double ric00 = 0;
    Matrix ainv;

    // R_kmij X^k Y^m Z^i W^j
    double R(const Vector& X, const Vector& Y, const Vector& Z, const Vector& W) const;
    // M(i,k) = a^im R_{u m k w}
    Matrix raised(const Vector& u, const Vector& w) const;
    // R^i_k b^k
    Vector R_b(const Vector& bup) const { return Rik * bup; }
};

AlphaCurvature alpha_curvature(const ChartFrame& f, const Vector& y, Convention conv = Convention::standard);

struct CovariantB {
    Matrix bij; // b_{i|j}
    T3 bijk;    // b_{i|j|k}
};

CovariantB covariant_b(const ChartFrame& f);

double alpha_norm(const ChartFrame& f, const Vector& y);

}
