#include "finslerlab/taylor.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <unordered_map>

namespace finslerlab {

namespace {

std::mutex cache_mutex;
std::map<std::pair<int, int>, std::unique_ptr<Layout>> cache;

void enumerate(int vars, int n, int order, std::vector<int>& cur, int var, int xd, int td,
               std::vector<std::vector<int>>& out) {
    if (var == vars) {
        out.push_back(cur);
        return;
    }
    for (int e = 0; td + e <= order && (var >= n || xd + e <= 2); ++e) {
        cur[var] = e;
        enumerate(vars, n, order, cur, var + 1, var < n ? xd + e : xd, td + e, out);
    }
    cur[var] = 0;
}

}

std::uint64_t Layout::key(const std::vector<int>& e) const {
    std::uint64_t k = 0;
    for (int v = 0; v < 2 * n_; ++v) k |= static_cast<std::uint64_t>(e[v]) << (4 * v);
    return k;
}

Layout::Layout(int n, int order) : n_(n), order_(order) {
    if (n < 1 || n > 8 || order < 0 || order > 15) throw Error("unsupported jet layout");
    int vars = 2 * n;
    std::vector<std::vector<int>> mons;
    std::vector<int> cur(vars, 0);
    enumerate(vars, n, order, cur, 0, 0, 0, mons);
    auto deg = [&](const std::vector<int>& e, int from, int to) {
        return std::accumulate(e.begin() + from, e.begin() + to, 0);
    };
    std::stable_sort(mons.begin(), mons.end(), [&](const auto& a, const auto& b) {
        int ta = deg(a, 0, vars), tb = deg(b, 0, vars);
        if (ta != tb) return ta < tb;
        return a > b;
    });
    int size = static_cast<int>(mons.size());
    exps_.resize(static_cast<std::size_t>(size) * vars);
    xdeg_.resize(size);
    tdeg_.resize(size);
    keys_.reserve(size);
    std::unordered_map<std::uint64_t, int> index;
    for (int m = 0; m < size; ++m) {
        for (int v = 0; v < vars; ++v) exps_[m * vars + v] = static_cast<std::uint8_t>(mons[m][v]);
        xdeg_[m] = deg(mons[m], 0, n);
        tdeg_[m] = deg(mons[m], 0, vars);
        keys_.emplace_back(key(mons[m]), m);
        index[keys_.back().first] = m;
    }
    degree_end_.assign(order + 1, 0);
    for (int t = 0; t <= order; ++t)
        degree_end_[t] = static_cast<int>(std::count_if(tdeg_.begin(), tdeg_.end(), [&](int d) { return d <= t; }));

    up_.assign(static_cast<std::size_t>(vars) * size, -1);
    for (int m = 0; m < size; ++m) {
        for (int v = 0; v < vars; ++v) {
            std::vector<int> e = mons[m];
            ++e[v];
            auto it = index.find(key(e));
            if (e[v] <= 15 && it != index.end()) up_[v * size + m] = it->second;
        }
    }

    std::vector<std::vector<std::pair<int, int>>> by_result(size);
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            if (tdeg_[i] + tdeg_[j] > order || xdeg_[i] + xdeg_[j] > 2) continue;
            std::vector<int> e(vars);
            for (int v = 0; v < vars; ++v) e[v] = mons[i][v] + mons[j][v];
            by_result[index.at(key(e))].emplace_back(i, j);
        }
    }
    pair_start_.assign(size + 1, 0);
    for (int r = 0; r < size; ++r) pair_start_[r + 1] = pair_start_[r] + static_cast<int>(by_result[r].size());
    pair_i_.reserve(pair_start_[size]);
    pair_j_.reserve(pair_start_[size]);
    for (const auto& list : by_result) {
        for (auto [i, j] : list) {
            pair_i_.push_back(i);
            pair_j_.push_back(j);
        }
    }
    std::sort(keys_.begin(), keys_.end());
}

int Layout::find(const std::vector<int>& e) const {
    for (int v = 0; v < 2 * n_; ++v)
        if (e[v] < 0 || e[v] > 15) return -1;
    std::uint64_t k = key(e);
    auto it = std::lower_bound(keys_.begin(), keys_.end(), std::make_pair(k, -1));
    return it != keys_.end() && it->first == k ? it->second : -1;
}

const Layout& layout(int n, int order) {
    {
        std::lock_guard lock(cache_mutex);
        auto it = cache.find({n, order});
        if (it != cache.end()) return *it->second;
    }
    auto fresh = std::make_unique<Layout>(n, order);
    std::lock_guard lock(cache_mutex);
    auto [it, inserted] = cache.emplace(std::make_pair(n, order), std::move(fresh));
    return *it->second;
}

template <class K>
BasicTaylorJet<K>::BasicTaylorJet(const Layout& L, K c)
    : L_(&L), c_(L.size(), K(0.0)), xvalid_(2), tvalid_(L.order()) {
    c_[0] = c;
}

template <class K>
BasicTaylorJet<K> BasicTaylorJet<K>::from_x_jet(const Layout& L, const Jet2& j) {
    BasicTaylorJet t(L, K(j.value));
    int n = L.n();
    std::vector<int> e(2 * n, 0);
    for (int k = 0; k < n; ++k) {
        e[k] = 1;
        if (int m = L.find(e); m >= 0) t.c_[m] = K(j.grad[k]);
        e[k] = 2;
        if (int m = L.find(e); m >= 0) t.c_[m] = K(0.5 * j.hess(k, k));
        e[k] = 0;
        for (int l = k + 1; l < n; ++l) {
            e[k] = e[l] = 1;
            if (int m = L.find(e); m >= 0) t.c_[m] = K(j.hess(k, l));
            e[k] = e[l] = 0;
        }
    }
    t.xvalid_ = 2;
    return t;
}

template <class K>
BasicTaylorJet<K> BasicTaylorJet<K>::y_variable(const Layout& L, int k, double y0) {
    BasicTaylorJet t(L, K(y0));
    std::vector<int> e(2 * L.n(), 0);
    e[L.n() + k] = 1;
    if (int m = L.find(e); m >= 0) t.c_[m] = K(1.0);
    return t;
}

template <class K>
BasicTaylorJet<K> BasicTaylorJet<K>::x_variable(const Layout& L, int k, double x0) {
    BasicTaylorJet t(L, K(x0));
    std::vector<int> e(2 * L.n(), 0);
    e[k] = 1;
    if (int m = L.find(e); m >= 0) t.c_[m] = K(1.0);
    return t;
}

template <class K>
BasicTaylorJet<K> BasicTaylorJet<K>::lift(const Layout& L, const BasicTaylorJet& j) {
    const Layout& S = *j.L_;
    BasicTaylorJet t(L);
    std::vector<int> e(2 * L.n());
    for (int m = 0; m < S.size(); ++m) {
        for (int v = 0; v < 2 * L.n(); ++v) e[v] = S.exponent(m, v);
        if (int r = L.find(e); r >= 0) t.c_[r] = j.c_[m];
    }
    t.xvalid_ = std::min(j.xvalid_, 2);
    t.tvalid_ = j.tvalid_ >= S.order() ? L.order() : j.tvalid_;
    t.clip();
    return t;
}

template <class K>
void BasicTaylorJet<K>::clip() {
    for (int m = 0; m < L_->size(); ++m)
        if (L_->xdeg(m) > xvalid_ || L_->tdeg(m) > tvalid_) c_[m] = K(0.0);
}

template <class K>
BasicTaylorJet<K>& BasicTaylorJet<K>::operator+=(const BasicTaylorJet& o) {
    for (std::size_t m = 0; m < c_.size(); ++m) c_[m] += o.c_[m];
    xvalid_ = std::min(xvalid_, o.xvalid_);
    tvalid_ = std::min(tvalid_, o.tvalid_);
    clip();
    return *this;
}

template <class K>
BasicTaylorJet<K>& BasicTaylorJet<K>::operator-=(const BasicTaylorJet& o) {
    for (std::size_t m = 0; m < c_.size(); ++m) c_[m] -= o.c_[m];
    xvalid_ = std::min(xvalid_, o.xvalid_);
    tvalid_ = std::min(tvalid_, o.tvalid_);
    clip();
    return *this;
}

template <class K>
BasicTaylorJet<K>& BasicTaylorJet<K>::operator*=(const K& s) {
    for (K& v : c_) v *= s;
    return *this;
}

template <class K>
BasicTaylorJet<K> BasicTaylorJet<K>::derivative(int var) const {
    const Layout& L = *L_;
    BasicTaylorJet r(L);
    for (int m = 0; m < L.size(); ++m) {
        int u = L.up(var, m);
        if (u >= 0) r.c_[m] = K(L.exponent(m, var) + 1.0) * c_[u];
    }
    r.xvalid_ = var < L.n() ? xvalid_ - 1 : xvalid_;
    r.tvalid_ = tvalid_ - 1;
    r.clip();
    return r;
}

template <class K>
Jet2 BasicTaylorJet<K>::y_jet() const {
    const Layout& L = *L_;
    int n = L.n();
    if (tvalid_ < 2 || xvalid_ < 0) throw Error("jet too short for a y-Hessian");
    Jet2 j(n, to_double(c_[0]));
    std::vector<int> e(2 * n, 0);
    for (int k = 0; k < n; ++k) {
        e[n + k] = 1;
        j.grad[k] = to_double(c_[L.find(e)]);
        e[n + k] = 2;
        j.hess(k, k) = 2.0 * to_double(c_[L.find(e)]);
        e[n + k] = 0;
        for (int l = k + 1; l < n; ++l) {
            e[n + k] = e[n + l] = 1;
            j.hess(k, l) = j.hess(l, k) = to_double(c_[L.find(e)]);
            e[n + k] = e[n + l] = 0;
        }
    }
    return j;
}

template <class K>
BasicTaylorJet<K> multiply(const BasicTaylorJet<K>& a, const BasicTaylorJet<K>& b, int xcap, int tcap) {
    const Layout& L = *a.L_;
    BasicTaylorJet<K> r(L);
    r.xvalid_ = std::min({a.xvalid_, b.xvalid_, xcap});
    r.tvalid_ = std::min({a.tvalid_, b.tvalid_, tcap});
    if (r.xvalid_ < 0 || r.tvalid_ < 0) return r;
    int end = L.end_of_degree(std::min(r.tvalid_, L.order()));
    const K* ac = a.c_.data();
    const K* bc = b.c_.data();
    for (int m = 0; m < end; ++m) {
        if (L.xdeg(m) > r.xvalid_) continue;
        K s(0.0);
        for (int p = L.pair_begin(m); p < L.pair_end(m); ++p) s += ac[L.pair_lhs(p)] * bc[L.pair_rhs(p)];
        r.c_[m] = s;
    }
    return r;
}

template <class K>
BasicTaylorJet<K> compose(const BasicTaylorJet<K>& u, const std::vector<K>& series) {
    BasicTaylorJet<K> h = u;
    h.c_[0] = K(0.0);
    BasicTaylorJet<K> r(*u.L_, series.empty() ? K(0.0) : series[0]);
    r.xvalid_ = u.xvalid_;
    r.tvalid_ = u.tvalid_;
    int top = std::min<int>(static_cast<int>(series.size()) - 1, std::min(u.tvalid_, u.L_->order()));
    BasicTaylorJet<K> p = h;
    for (int k = 1; k <= top; ++k) {
        for (std::size_t m = 0; m < r.c_.size(); ++m) r.c_[m] += series[k] * p.c_[m];
        if (k < top) p = multiply(p, h);
    }
    r.clip();
    return r;
}

template <class K>
BasicTaylorJet<K> sqrt(const BasicTaylorJet<K>& u) {
    using std::sqrt;
    K u0 = u.value();
    if (!(to_double(u0) > 0.0)) throw DomainError("square root of a non-positive jet");
    int order = u.layout().order();
    std::vector<K> s(order + 1);
    K binom(1.0), root = sqrt(u0), scale(1.0);
    for (int k = 0; k <= order; ++k) {
        s[k] = root * binom * scale;
        binom *= K(0.5 - k) / K(k + 1.0);
        scale /= u0;
    }
    return compose(u, s);
}

template <class K>
BasicTaylorJet<K> reciprocal(const BasicTaylorJet<K>& u) {
    K u0 = u.value();
    if (to_double(u0) == 0.0) throw DomainError("division by zero");
    int order = u.layout().order();
    std::vector<K> s(order + 1);
    K v = K(1.0) / u0, step = K(-1.0) / u0;
    for (int k = 0; k <= order; ++k) {
        s[k] = v;
        v *= step;
    }
    return compose(u, s);
}

#define FINSLERLAB_TAYLOR_INSTANCES(K)                                                                  \
    template class BasicTaylorJet<K>;                                                                  \
    template BasicTaylorJet<K> multiply(const BasicTaylorJet<K>&, const BasicTaylorJet<K>&, int, int); \
    template BasicTaylorJet<K> compose(const BasicTaylorJet<K>&, const std::vector<K>&);               \
    template BasicTaylorJet<K> sqrt(const BasicTaylorJet<K>&);                                         \
    template BasicTaylorJet<K> reciprocal(const BasicTaylorJet<K>&);

FINSLERLAB_TAYLOR_INSTANCES(double)
FINSLERLAB_TAYLOR_INSTANCES(DDouble)

#undef FINSLERLAB_TAYLOR_INSTANCES

}
