#pragma once

#include <cstdint>
#include <span>

#include "dpgcnn/rng.hpp"
#include "dpgcnn/tape.hpp"

namespace dpgcnn {

using index_span = std::span<const std::uint32_t>;

Var matmul(Var a, Var b);
Var add(Var a, Var b);
/// Adds a 1 x c row vector to every row of `a`.
Var add_bias(Var a, Var bias);
Var scale(Var a, double factor);
Var concat_cols(Var a, Var b);
/// Rows [begin, begin + count) of `a`.
Var row_slice(Var a, std::size_t begin, std::size_t count);

/// Row k of the result is row index[k] of `a`; backward scatter-adds.
Var gather_rows(Var a, index_span index);

/// Row s of the result sums the rows of `a` whose segment id is s. Empty
/// segments give zero rows.
Var segment_sum(Var a, index_span segments, std::size_t segment_count);

/// Softmax of an m x 1 column within each segment, stabilized by the
/// per-segment maximum.
Var segment_softmax(Var logits, index_span segments, std::size_t segment_count);

/// Multiplies row e of `a` by weights[e] (weights is m x 1).
Var scale_rows(Var weights, Var a);

/// Attention-weighted neighborhood sum:
///   out[segments[e]] += weights[e] * values[sources[e]]
/// Equivalent to segment_sum(scale_rows(weights, gather_rows(values, sources)))
/// without materializing the gathered rows.
Var attend(Var weights, Var values, index_span segments, index_span sources, std::size_t segment_count);

inline constexpr double default_leaky_slope = 0.2;

/// Derivatives at 0 use the positive branch.
Var leaky_relu(Var a, double slope = default_leaky_slope);
Var elu(Var a);
Var relu(Var a);

/// Inverted dropout: in training each entry survives with probability
/// `keep_prob` and is scaled by 1/keep_prob; otherwise identity.
Var dropout(Var a, double keep_prob, Rng& rng, bool training);

/// Sum of all entries, as a 1 x 1 tensor.
Var sum(Var a);

/// Mean over `mask` rows of -log softmax(logits[row])[labels[row]].
Var masked_softmax_cross_entropy(Var logits, std::span<const int> labels, index_span mask);

}  // namespace dpgcnn
