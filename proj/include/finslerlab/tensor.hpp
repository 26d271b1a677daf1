#pragma once

#include <vector>

namespace finslerlab {

// dense rank-3 and rank-4 arrays over 0..n-1, row-major
class T3 {
public:
    T3() = default;
    explicit T3(int n) : n_(n), d_(static_cast<std::size_t>(n) * n * n, 0.0) {}
    int n() const { return n_; }
    double& operator()(int i, int j, int k) { return d_[(i * n_ + j) * n_ + k]; }
    double operator()(int i, int j, int k) const { return d_[(i * n_ + j) * n_ + k]; }
    T3& operator*=(double s) {
        for (double& v : d_) v *= s;
        return *this;
    }

private:
    int n_ = 0;
    std::vector<double> d_;
};

class T4 {
public:
    T4() = default;
    explicit T4(int n) : n_(n), d_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}
    int n() const { return n_; }
    double& operator()(int i, int j, int k, int l) { return d_[((i * n_ + j) * n_ + k) * n_ + l]; }
    double operator()(int i, int j, int k, int l) const { return d_[((i * n_ + j) * n_ + k) * n_ + l]; }
    T4& operator*=(double s) {
        for (double& v : d_) v *= s;
        return *this;
    }

private:
    int n_ = 0;
    std::vector<double> d_;
};

}
