#include "rme/types.hpp"

namespace rme {

const char* error_category_name(ErrorCategory cat) {
    switch (cat) {
        case ErrorCategory::Io: return "io";
        case ErrorCategory::Parse: return "parse";
        case ErrorCategory::Config: return "config";
        case ErrorCategory::Data: return "data";
        case ErrorCategory::Numeric: return "numeric";
        case ErrorCategory::Invalid: return "invalid";
        case ErrorCategory::Internal: return "internal";
    }
    return "internal";
}

}  // namespace rme
