#include "trajscope/error.hpp"

namespace trajscope {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid-input";
        case ErrorKind::RangeError: return "range-error";
        case ErrorKind::OrientationError: return "orientation-error";
        case ErrorKind::CorruptDecomposition: return "corrupt-decomposition";
        case ErrorKind::EmptyBand: return "empty-band";
        case ErrorKind::CalibrationError: return "calibration-error";
        case ErrorKind::InvalidSchedule: return "invalid-schedule";
        case ErrorKind::SchemaError: return "schema-error";
        case ErrorKind::IoError: return "io-error";
    }
    return "error";
}

}  // namespace trajscope
