#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dpgcnn {

enum class ErrorCode {
    index_out_of_range,
    duplicate_arc,
    mode_requires_undirected,
    shape_mismatch,
    empty_mask,
    non_scalar_loss,
    empty_neighborhood,
    non_finite_value,
    malformed_line,
    inconsistent_width,
    overlapping_splits,
    unknown_id,
    too_few_edges,
    diverged_loss,
    io_error,
    invalid_config,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace dpgcnn
