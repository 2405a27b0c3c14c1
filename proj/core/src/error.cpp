#include "dpgcnn/error.hpp"

namespace dpgcnn {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::index_out_of_range: return "IndexOutOfRange";
        case ErrorCode::duplicate_arc: return "DuplicateArc";
        case ErrorCode::mode_requires_undirected: return "ModeRequiresUndirected";
        case ErrorCode::shape_mismatch: return "ShapeMismatch";
        case ErrorCode::empty_mask: return "EmptyMask";
        case ErrorCode::non_scalar_loss: return "NonScalarLoss";
        case ErrorCode::empty_neighborhood: return "EmptyNeighborhood";
        case ErrorCode::non_finite_value: return "NonFiniteValue";
        case ErrorCode::malformed_line: return "MalformedLine";
        case ErrorCode::inconsistent_width: return "InconsistentWidth";
        case ErrorCode::overlapping_splits: return "OverlappingSplits";
        case ErrorCode::unknown_id: return "UnknownId";
        case ErrorCode::too_few_edges: return "TooFewEdges";
        case ErrorCode::diverged_loss: return "DivergedLoss";
        case ErrorCode::io_error: return "IoError";
        case ErrorCode::invalid_config: return "InvalidConfig";
    }
    return "Unknown";
}

void fail(ErrorCode code, const std::string& message) {
    throw Error(code, std::string(to_string(code)) + ": " + message);
}

}  // namespace dpgcnn
