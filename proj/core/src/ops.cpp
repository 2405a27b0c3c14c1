#include "dpgcnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dpgcnn/error.hpp"

namespace dpgcnn {

namespace {

void require(bool ok, ErrorCode code, const std::string& what) {
    if (!ok) fail(code, what);
}

std::string shapes(const char* op, const Tensor& a, const Tensor& b) {
    return std::string(op) + ": " + a.shape_string() + " vs " + b.shape_string();
}

void check_indices(index_span index, std::size_t bound, const char* op) {
    for (std::size_t k = 0; k < index.size(); ++k) {
        if (index[k] >= bound) {
            fail(ErrorCode::index_out_of_range, std::string(op) + ": index " + std::to_string(index[k]) +
                                                    " at position " + std::to_string(k) + " >= " +
                                                    std::to_string(bound));
        }
    }
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    const std::size_t n = x.size();
    const double* xp = x.data();
    double* yp = y.data();
    for (std::size_t i = 0; i < n; ++i) yp[i] += alpha * xp[i];
}

inline double dot(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

}  // namespace

Var matmul(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    require(A.cols() == B.rows(), ErrorCode::shape_mismatch, shapes("matmul", A, B));
    Tensor C(A.rows(), B.cols());
    // Skipping exact zeros keeps sparse bag-of-words inputs cheap and does not
    // change any result.
    for (std::size_t i = 0; i < A.rows(); ++i) {
        auto c_row = C.row(i);
        for (std::size_t k = 0; k < A.cols(); ++k) {
            const double aik = A(i, k);
            if (aik != 0.0) axpy(aik, B.row(k), c_row);
        }
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return a.tape().record(OpKind::matmul, std::move(C), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& dC = t.grad(self);
        const Tensor& A = t.value(ia);
        const Tensor& B = t.value(ib);
        if (t.requires_grad(ia)) {
            Tensor& dA = t.grad_slot(ia);
            for (std::size_t i = 0; i < A.rows(); ++i) {
                const auto dc_row = dC.row(i);
                for (std::size_t k = 0; k < A.cols(); ++k) dA(i, k) += dot(dc_row, B.row(k));
            }
        }
        if (t.requires_grad(ib)) {
            Tensor& dB = t.grad_slot(ib);
            for (std::size_t i = 0; i < A.rows(); ++i) {
                const auto dc_row = dC.row(i);
                for (std::size_t k = 0; k < A.cols(); ++k) {
                    const double aik = A(i, k);
                    if (aik != 0.0) axpy(aik, dc_row, dB.row(k));
                }
            }
        }
    });
}

Var add(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    require(A.same_shape(B), ErrorCode::shape_mismatch, shapes("add", A, B));
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C[i] += B[i];
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return a.tape().record(OpKind::add, std::move(C), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        for (std::size_t id : {ia, ib}) {
            if (!t.requires_grad(id)) continue;
            Tensor& d = t.grad_slot(id);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
        }
    });
}

Var add_bias(Var a, Var bias) {
    const Tensor& A = a.value();
    const Tensor& b = bias.value();
    require(b.rows() == 1 && b.cols() == A.cols(), ErrorCode::shape_mismatch, shapes("add_bias", A, b));
    Tensor C = A;
    for (std::size_t r = 0; r < C.rows(); ++r) axpy(1.0, b.row(0), C.row(r));
    const std::size_t ia = a.id();
    const std::size_t ib = bias.id();
    return a.tape().record(OpKind::add_bias, std::move(C), {a, bias}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ia)) {
            Tensor& d = t.grad_slot(ia);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
        }
        if (t.requires_grad(ib)) {
            Tensor& d = t.grad_slot(ib);
            for (std::size_t r = 0; r < g.rows(); ++r) axpy(1.0, g.row(r), d.row(0));
        }
    });
}

Var scale(Var a, double factor) {
    Tensor C = a.value();
    for (std::size_t i = 0; i < C.size(); ++i) C[i] *= factor;
    const std::size_t ia = a.id();
    return a.tape().record(OpKind::scale, std::move(C), {a}, [ia, factor](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& d = t.grad_slot(ia);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * g[i];
    });
}

Var concat_cols(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    require(A.rows() == B.rows(), ErrorCode::shape_mismatch, shapes("concat_cols", A, B));
    const std::size_t ca = A.cols();
    const std::size_t cb = B.cols();
    Tensor C(A.rows(), ca + cb);
    for (std::size_t r = 0; r < A.rows(); ++r) {
        std::copy(A.row(r).begin(), A.row(r).end(), C.row(r).begin());
        std::copy(B.row(r).begin(), B.row(r).end(), C.row(r).begin() + static_cast<std::ptrdiff_t>(ca));
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return a.tape().record(OpKind::concat_cols, std::move(C), {a, b}, [ia, ib, ca, cb](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ia)) {
            Tensor& d = t.grad_slot(ia);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                for (std::size_t c = 0; c < ca; ++c) d(r, c) += g(r, c);
            }
        }
        if (t.requires_grad(ib)) {
            Tensor& d = t.grad_slot(ib);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                for (std::size_t c = 0; c < cb; ++c) d(r, c) += g(r, ca + c);
            }
        }
    });
}

Var row_slice(Var a, std::size_t begin, std::size_t count) {
    const Tensor& A = a.value();
    require(begin + count <= A.rows(), ErrorCode::index_out_of_range,
            "row_slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) + ") of " +
                A.shape_string());
    const std::size_t c = A.cols();
    Tensor C(count, c);
    std::copy(A.values().begin() + static_cast<std::ptrdiff_t>(begin * c),
              A.values().begin() + static_cast<std::ptrdiff_t>((begin + count) * c), C.values().begin());
    const std::size_t ia = a.id();
    return a.tape().record(OpKind::row_slice, std::move(C), {a}, [ia, begin, c](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& d = t.grad_slot(ia);
        for (std::size_t i = 0; i < g.size(); ++i) d[begin * c + i] += g[i];
    });
}

Var gather_rows(Var a, index_span index) {
    const Tensor& A = a.value();
    check_indices(index, A.rows(), "gather_rows");
    const std::size_t c = A.cols();
    Tensor C(index.size(), c);
    for (std::size_t k = 0; k < index.size(); ++k) {
        std::copy(A.row(index[k]).begin(), A.row(index[k]).end(), C.row(k).begin());
    }
    const std::size_t ia = a.id();
    std::vector<std::uint32_t> idx(index.begin(), index.end());
    return a.tape().record(OpKind::gather_rows, std::move(C), {a},
                           [ia, idx = std::move(idx)](Tape& t, std::size_t self) {
                               const Tensor& g = t.grad(self);
                               Tensor& d = t.grad_slot(ia);
                               for (std::size_t k = 0; k < idx.size(); ++k) axpy(1.0, g.row(k), d.row(idx[k]));
                           });
}

Var segment_sum(Var a, index_span segments, std::size_t segment_count) {
    const Tensor& A = a.value();
    require(segments.size() == A.rows(), ErrorCode::shape_mismatch,
            "segment_sum: " + std::to_string(segments.size()) + " segment ids for " + A.shape_string());
    check_indices(segments, segment_count, "segment_sum");
    Tensor C(segment_count, A.cols());
    for (std::size_t k = 0; k < segments.size(); ++k) axpy(1.0, A.row(k), C.row(segments[k]));
    const std::size_t ia = a.id();
    std::vector<std::uint32_t> seg(segments.begin(), segments.end());
    return a.tape().record(OpKind::segment_sum, std::move(C), {a},
                           [ia, seg = std::move(seg)](Tape& t, std::size_t self) {
                               const Tensor& g = t.grad(self);
                               Tensor& d = t.grad_slot(ia);
                               for (std::size_t k = 0; k < seg.size(); ++k) axpy(1.0, g.row(seg[k]), d.row(k));
                           });
}

Var segment_softmax(Var logits, index_span segments, std::size_t segment_count) {
    const Tensor& L = logits.value();
    require(L.cols() == 1 && segments.size() == L.rows(), ErrorCode::shape_mismatch,
            "segment_softmax: logits " + L.shape_string() + " with " + std::to_string(segments.size()) +
                " segment ids");
    check_indices(segments, segment_count, "segment_softmax");
    std::vector<double> seg_max(segment_count, -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < segments.size(); ++k) seg_max[segments[k]] = std::max(seg_max[segments[k]], L[k]);
    std::vector<double> seg_sum(segment_count, 0.0);
    Tensor P(L.rows(), 1);
    for (std::size_t k = 0; k < segments.size(); ++k) {
        P[k] = std::exp(L[k] - seg_max[segments[k]]);
        seg_sum[segments[k]] += P[k];
    }
    for (std::size_t k = 0; k < segments.size(); ++k) P[k] /= seg_sum[segments[k]];

    const std::size_t il = logits.id();
    std::vector<std::uint32_t> seg(segments.begin(), segments.end());
    return logits.tape().record(
        OpKind::segment_softmax, std::move(P), {logits},
        [il, seg = std::move(seg), segment_count](Tape& t, std::size_t self) {
            // dL_k = p_k * (g_k - sum_{j in seg} p_j g_j)
            const Tensor& g = t.grad(self);
            const Tensor& p = t.value(self);
            std::vector<double> inner(segment_count, 0.0);
            for (std::size_t k = 0; k < seg.size(); ++k) inner[seg[k]] += p[k] * g[k];
            Tensor& d = t.grad_slot(il);
            for (std::size_t k = 0; k < seg.size(); ++k) d[k] += p[k] * (g[k] - inner[seg[k]]);
        });
}

Var scale_rows(Var weights, Var a) {
    const Tensor& W = weights.value();
    const Tensor& A = a.value();
    require(W.cols() == 1 && W.rows() == A.rows(), ErrorCode::shape_mismatch, shapes("scale_rows", W, A));
    Tensor C = A;
    for (std::size_t r = 0; r < C.rows(); ++r) {
        for (double& v : C.row(r)) v *= W[r];
    }
    const std::size_t iw = weights.id();
    const std::size_t ia = a.id();
    return a.tape().record(OpKind::scale_rows, std::move(C), {weights, a}, [iw, ia](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& W = t.value(iw);
        const Tensor& A = t.value(ia);
        if (t.requires_grad(iw)) {
            Tensor& d = t.grad_slot(iw);
            for (std::size_t r = 0; r < A.rows(); ++r) d[r] += dot(g.row(r), A.row(r));
        }
        if (t.requires_grad(ia)) {
            Tensor& d = t.grad_slot(ia);
            for (std::size_t r = 0; r < A.rows(); ++r) axpy(W[r], g.row(r), d.row(r));
        }
    });
}

Var attend(Var weights, Var values, index_span segments, index_span sources, std::size_t segment_count) {
    const Tensor& W = weights.value();
    const Tensor& V = values.value();
    require(W.cols() == 1 && W.rows() == segments.size() && segments.size() == sources.size(),
            ErrorCode::shape_mismatch,
            "attend: weights " + W.shape_string() + ", " + std::to_string(segments.size()) + " segments, " +
                std::to_string(sources.size()) + " sources");
    check_indices(segments, segment_count, "attend");
    check_indices(sources, V.rows(), "attend");
    Tensor C(segment_count, V.cols());
    for (std::size_t e = 0; e < segments.size(); ++e) axpy(W[e], V.row(sources[e]), C.row(segments[e]));

    const std::size_t iw = weights.id();
    const std::size_t iv = values.id();
    std::vector<std::uint32_t> seg(segments.begin(), segments.end());
    std::vector<std::uint32_t> src(sources.begin(), sources.end());
    return weights.tape().record(
        OpKind::attend, std::move(C), {weights, values},
        [iw, iv, seg = std::move(seg), src = std::move(src)](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& W = t.value(iw);
            const Tensor& V = t.value(iv);
            if (t.requires_grad(iw)) {
                Tensor& d = t.grad_slot(iw);
                for (std::size_t e = 0; e < seg.size(); ++e) d[e] += dot(g.row(seg[e]), V.row(src[e]));
            }
            if (t.requires_grad(iv)) {
                Tensor& d = t.grad_slot(iv);
                for (std::size_t e = 0; e < seg.size(); ++e) axpy(W[e], g.row(seg[e]), d.row(src[e]));
            }
        });
}

namespace {

template <typename Fwd, typename Deriv>
Var elementwise(Var a, OpKind kind, Fwd fwd, Deriv deriv) {
    Tensor C = a.value();
    for (std::size_t i = 0; i < C.size(); ++i) C[i] = fwd(C[i]);
    const std::size_t ia = a.id();
    return a.tape().record(kind, std::move(C), {a}, [ia, deriv](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& x = t.value(ia);
        const Tensor& y = t.value(self);
        Tensor& d = t.grad_slot(ia);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * deriv(x[i], y[i]);
    });
}

}  // namespace

Var leaky_relu(Var a, double slope) {
    return elementwise(
        a, OpKind::leaky_relu, [slope](double x) { return x >= 0.0 ? x : slope * x; },
        [slope](double x, double) { return x >= 0.0 ? 1.0 : slope; });
}

Var elu(Var a) {
    return elementwise(
        a, OpKind::elu, [](double x) { return x >= 0.0 ? x : std::expm1(x); },
        [](double x, double y) { return x >= 0.0 ? 1.0 : y + 1.0; });
}

Var relu(Var a) {
    return elementwise(
        a, OpKind::relu, [](double x) { return x >= 0.0 ? x : 0.0; },
        [](double x, double) { return x >= 0.0 ? 1.0 : 0.0; });
}

Var dropout(Var a, double keep_prob, Rng& rng, bool training) {
    require(keep_prob > 0.0 && keep_prob <= 1.0, ErrorCode::invalid_config,
            "dropout keep probability " + std::to_string(keep_prob) + " outside (0, 1]");
    if (!training || keep_prob == 1.0) return a;
    const Tensor& A = a.value();
    Tensor mask(A.rows(), A.cols());
    Tensor C(A.rows(), A.cols());
    const double inv = 1.0 / keep_prob;
    for (std::size_t i = 0; i < A.size(); ++i) {
        mask[i] = rng.uniform() < keep_prob ? inv : 0.0;
        C[i] = A[i] * mask[i];
    }
    const std::size_t ia = a.id();
    return a.tape().record(OpKind::dropout, std::move(C), {a}, [ia, mask = std::move(mask)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& d = t.grad_slot(ia);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * mask[i];
    });
}

Var sum(Var a) {
    double total = 0.0;
    for (double v : a.value().values()) total += v;
    const std::size_t ia = a.id();
    return a.tape().record(OpKind::sum, Tensor(1, 1, total), {a}, [ia](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        Tensor& d = t.grad_slot(ia);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g;
    });
}

Var masked_softmax_cross_entropy(Var logits, std::span<const int> labels, index_span mask) {
    const Tensor& L = logits.value();
    require(labels.size() == L.rows(), ErrorCode::shape_mismatch,
            "cross_entropy: " + std::to_string(labels.size()) + " labels for logits " + L.shape_string());
    if (mask.empty()) fail(ErrorCode::empty_mask, "cross-entropy over an empty row set");
    check_indices(mask, L.rows(), "cross_entropy");
    const std::size_t classes = L.cols();

    Tensor probs(mask.size(), classes);
    double loss = 0.0;
    for (std::size_t k = 0; k < mask.size(); ++k) {
        const auto row = L.row(mask[k]);
        const int label = labels[mask[k]];
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            fail(ErrorCode::index_out_of_range, "cross_entropy: label " + std::to_string(label) + " of row " +
                                                    std::to_string(mask[k]) + " with " +
                                                    std::to_string(classes) + " classes");
        }
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            probs(k, c) = std::exp(row[c] - mx);
            z += probs(k, c);
        }
        for (std::size_t c = 0; c < classes; ++c) probs(k, c) /= z;
        loss += -(row[static_cast<std::size_t>(label)] - mx - std::log(z));
    }
    const double inv_m = 1.0 / static_cast<double>(mask.size());
    loss *= inv_m;

    const std::size_t il = logits.id();
    std::vector<std::uint32_t> rows(mask.begin(), mask.end());
    std::vector<int> targets;
    targets.reserve(mask.size());
    for (std::uint32_t r : mask) targets.push_back(labels[r]);
    return logits.tape().record(
        OpKind::cross_entropy, Tensor(1, 1, loss), {logits},
        [il, inv_m, rows = std::move(rows), targets = std::move(targets), probs = std::move(probs)](
            Tape& t, std::size_t self) {
            const double g = t.grad(self)[0] * inv_m;
            Tensor& d = t.grad_slot(il);
            for (std::size_t k = 0; k < rows.size(); ++k) {
                auto drow = d.row(rows[k]);
                for (std::size_t c = 0; c < drow.size(); ++c) {
                    const double indicator = static_cast<int>(c) == targets[k] ? 1.0 : 0.0;
                    drow[c] += g * (probs(k, c) - indicator);
                }
            }
        });
}

}  // namespace dpgcnn
