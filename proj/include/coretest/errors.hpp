#pragma once

#include <stdexcept>
#include <string>

namespace coretest {

enum class ErrKind {
    ImageTooLarge,
    AddressOutOfRange,
    ConflictingControl,
    StateHalted,
    UnknownSite,
    WidthMismatch,
    UnknownMacro,
    ArityMismatch,
    ZeroClock,
};

const char* to_string(ErrKind kind);

class SimError : public std::runtime_error {
public:
    SimError(ErrKind kind, const std::string& msg)
        : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

    ErrKind kind() const { return kind_; }

private:
    ErrKind kind_;
};

}  // namespace coretest
