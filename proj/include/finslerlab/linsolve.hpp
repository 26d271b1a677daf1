#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "finslerlab/error.hpp"
#include "finslerlab/jet2.hpp"

namespace finslerlab {

// Gaussian elimination with partial pivoting on the value part.
// A is n x n row-major; works for double and Jet2.
template <class S>
std::vector<S> solve(std::vector<S> A, std::vector<S> rhs) {
    int n = static_cast<int>(rhs.size());
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(value_of(A[r * n + c])) > std::abs(value_of(A[piv * n + c]))) piv = r;
        if (value_of(A[piv * n + c]) == 0.0) throw DomainError("singular linear system");
        if (piv != c) {
            for (int k = 0; k < n; ++k) std::swap(A[c * n + k], A[piv * n + k]);
            std::swap(rhs[c], rhs[piv]);
        }
        S inv = 1.0 / A[c * n + c];
        for (int r = c + 1; r < n; ++r) {
            S f = A[r * n + c] * inv;
            for (int k = c + 1; k < n; ++k) A[r * n + k] -= f * A[c * n + k];
            rhs[r] -= f * rhs[c];
        }
    }
    std::vector<S> x(rhs);
    for (int r = n - 1; r >= 0; --r) {
        S s = rhs[r];
        for (int k = r + 1; k < n; ++k) s -= A[r * n + k] * x[k];
        x[r] = s / A[r * n + r];
    }
    return x;
}

}
