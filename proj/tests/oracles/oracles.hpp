#pragma once

// Independent reference implementations used by the tests. They work on plain
// loops over arc lists and dense matrices and share no code with the library
// beyond the Tensor and Arc containers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <utility>
#include <vector>

#include "dpgcnn/graph.hpp"
#include "dpgcnn/tensor.hpp"

namespace oracle {

using dpgcnn::Arc;
using dpgcnn::Tensor;
using Edge = std::pair<std::size_t, std::size_t>;

/// Dual edges {a, b} (a < b, indices into `arcs`) by testing every pair.
inline std::set<Edge> chain_dual(const std::vector<Arc>& arcs) {
    std::set<Edge> out;
    for (std::size_t a = 0; a < arcs.size(); ++a) {
        for (std::size_t b = a + 1; b < arcs.size(); ++b) {
            const Arc x = arcs[a];
            const Arc y = arcs[b];
            // y enters x's tail or leaves x's head (or the same from y's side)
            if (y.dst == x.src || y.src == x.dst) out.insert({a, b});
        }
    }
    return out;
}

inline std::set<Edge> fan_dual(const std::vector<Arc>& arcs) {
    std::set<Edge> out;
    for (std::size_t a = 0; a < arcs.size(); ++a) {
        for (std::size_t b = a + 1; b < arcs.size(); ++b) {
            if (arcs[a].src == arcs[b].src || arcs[a].dst == arcs[b].dst) out.insert({a, b});
        }
    }
    return out;
}

/// Line graph of an undirected edge list: edges sharing an endpoint.
inline std::size_t line_graph_edges(const std::vector<Edge>& edges) {
    std::size_t count = 0;
    for (std::size_t a = 0; a < edges.size(); ++a) {
        for (std::size_t b = a + 1; b < edges.size(); ++b) {
            const auto [p, q] = edges[a];
            const auto [r, s] = edges[b];
            if (p == r || p == s || q == r || q == s) ++count;
        }
    }
    return count;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    Tensor c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline double leaky(double x) { return x > 0.0 ? x : 0.2 * x; }
inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

/// Softmax of `logits` in place.
inline void softmax(std::vector<double>& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double& v : logits) z += (v = std::exp(v - m));
    for (double& v : logits) v /= z;
}

/// Dot of row r of `h` with attention entries [offset, offset + h.cols()).
inline double dot_row(const Tensor& h, std::size_t r, const Tensor& a, std::size_t offset) {
    double s = 0.0;
    for (std::size_t c = 0; c < h.cols(); ++c) s += h(r, c) * a[offset + c];
    return s;
}

/// One GAT head: receiver i aggregates over arcs (j, i).
///   e_ij = leaky(a[:q'] . h_i + a[q':] . h_j), alpha = softmax over j,
///   out_i = elu(sum_j alpha_ij h_j), h = x W.
/// `alpha` receives the coefficients in arc order if non-null.
inline Tensor gat_head(const Tensor& x, const Tensor& w, const Tensor& a, const std::vector<Arc>& arcs,
                       std::size_t n, std::vector<double>* alpha = nullptr) {
    const Tensor h = matmul(x, w);
    const std::size_t q = w.cols();
    Tensor out(n, q);
    if (alpha) alpha->assign(arcs.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> in;
        for (std::size_t e = 0; e < arcs.size(); ++e)
            if (arcs[e].dst == i) in.push_back(e);
        if (in.empty()) continue;
        std::vector<double> s;
        for (std::size_t e : in) s.push_back(leaky(dot_row(h, i, a, 0) + dot_row(h, arcs[e].src, a, q)));
        softmax(s);
        for (std::size_t k = 0; k < in.size(); ++k) {
            if (alpha) (*alpha)[in[k]] = s[k];
            for (std::size_t c = 0; c < q; ++c) out(i, c) += s[k] * h(arcs[in[k]].src, c);
        }
        for (std::size_t c = 0; c < q; ++c) out(i, c) = elu(out(i, c));
    }
    return out;
}

/// Dual convolution, one head, chain or fan adjacency given explicitly:
///   g_u = [x_src(u), x_dst(u)] W, e_uv = leaky(a[:q'] . g_u + a[q':] . g_v),
///   out_u = relu(sum_v softmax(e_u.)_v g_v) over dual neighbors v.
inline Tensor dual_head(const Tensor& x, const Tensor& w, const Tensor& a, const std::vector<Arc>& arcs,
                        const std::set<Edge>& dual_edges) {
    const std::size_t m = arcs.size();
    const std::size_t q = x.cols();
    Tensor in(m, 2 * q);
    for (std::size_t u = 0; u < m; ++u)
        for (std::size_t c = 0; c < q; ++c) {
            in(u, c) = x(arcs[u].src, c);
            in(u, q + c) = x(arcs[u].dst, c);
        }
    const Tensor g = matmul(in, w);
    const std::size_t out_w = w.cols();
    std::vector<std::vector<std::size_t>> nb(m);
    for (const auto& [u, v] : dual_edges) {
        nb[u].push_back(v);
        nb[v].push_back(u);
    }
    Tensor out(m, out_w);
    for (std::size_t u = 0; u < m; ++u) {
        if (nb[u].empty()) continue;
        std::sort(nb[u].begin(), nb[u].end());
        std::vector<double> s;
        for (std::size_t v : nb[u]) s.push_back(leaky(dot_row(g, u, a, 0) + dot_row(g, v, a, out_w)));
        softmax(s);
        for (std::size_t k = 0; k < nb[u].size(); ++k)
            for (std::size_t c = 0; c < out_w; ++c) out(u, c) += s[k] * g(nb[u][k], c);
        for (std::size_t c = 0; c < out_w; ++c) out(u, c) = std::max(0.0, out(u, c));
    }
    return out;
}

/// Primal convolution scored by edge features `f` (row = arc id):
///   alpha_ij = softmax_j leaky(a . f_(j,i)), out_i = elu(sum_j alpha_ij x_j W).
inline Tensor primal_head(const Tensor& x, const Tensor& w, const Tensor& a, const Tensor& f,
                          const std::vector<Arc>& arcs, std::size_t n) {
    const Tensor h = matmul(x, w);
    Tensor out(n, w.cols());
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> in;
        for (std::size_t e = 0; e < arcs.size(); ++e)
            if (arcs[e].dst == i) in.push_back(e);
        if (in.empty()) continue;
        std::vector<double> s;
        for (std::size_t e : in) s.push_back(leaky(dot_row(f, e, a, 0)));
        softmax(s);
        for (std::size_t k = 0; k < in.size(); ++k)
            for (std::size_t c = 0; c < w.cols(); ++c) out(i, c) += s[k] * h(arcs[in[k]].src, c);
        for (std::size_t c = 0; c < w.cols(); ++c) out(i, c) = elu(out(i, c));
    }
    return out;
}

/// One diffusion step: out_i = sum over arcs (j, i) of alpha_(j,i) t_j.
inline Tensor diffuse(const Tensor& t, const std::vector<double>& alpha, const std::vector<Arc>& arcs, std::size_t n) {
    Tensor out(n, t.cols());
    for (std::size_t e = 0; e < arcs.size(); ++e)
        for (std::size_t c = 0; c < t.cols(); ++c) out(arcs[e].dst, c) += alpha[e] * t(arcs[e].src, c);
    return out;
}

/// Per-receiver softmax of arc logits.
inline std::vector<double> softmax_by_receiver(const std::vector<double>& logits, const std::vector<Arc>& arcs,
                                               std::size_t n) {
    std::vector<double> alpha(arcs.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> in;
        for (std::size_t e = 0; e < arcs.size(); ++e)
            if (arcs[e].dst == i) in.push_back(e);
        if (in.empty()) continue;
        std::vector<double> s;
        for (std::size_t e : in) s.push_back(logits[e]);
        softmax(s);
        for (std::size_t k = 0; k < in.size(); ++k) alpha[in[k]] = s[k];
    }
    return alpha;
}

}  // namespace oracle
