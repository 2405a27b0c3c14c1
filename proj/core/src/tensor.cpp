#include "dpgcnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpgcnn/error.hpp"

namespace dpgcnn {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
        fail(ErrorCode::shape_mismatch, "tensor " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                                            " given " + std::to_string(values_.size()) + " values");
    }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> values;
    values.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) fail(ErrorCode::shape_mismatch, "ragged rows");
        values.insert(values.end(), row.begin(), row.end());
    }
    return Tensor(r, c, std::move(values));
}

Tensor Tensor::column(std::span<const double> values) {
    return Tensor(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace dpgcnn
