#include "coretest/errors.hpp"

namespace coretest {

const char* to_string(ErrKind kind) {
    switch (kind) {
        case ErrKind::ImageTooLarge: return "image too large";
        case ErrKind::AddressOutOfRange: return "address out of range";
        case ErrKind::ConflictingControl: return "conflicting control";
        case ErrKind::StateHalted: return "machine halted";
        case ErrKind::UnknownSite: return "unknown fault site";
        case ErrKind::WidthMismatch: return "width mismatch";
        case ErrKind::UnknownMacro: return "unknown macro";
        case ErrKind::ArityMismatch: return "arity mismatch";
        case ErrKind::ZeroClock: return "zero clock";
    }
    return "error";
}

}  // namespace coretest
