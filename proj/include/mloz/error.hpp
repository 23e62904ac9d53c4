#pragma once

#include <stdexcept>
#include <string>

namespace mloz {

// Failure classes. Enum values double as process exit codes, so they must
// stay distinct and nonzero.
enum class Errc : int {
    config = 2,   // bad user input: options, config files, incompatible requests
    data = 3,     // bad content: malformed files, shape mismatches, NaN payloads
    numeric = 4,  // computation cannot proceed: singular beyond fallback, non-finite state
    io = 5,       // filesystem and stream failures
    usage = 64,   // command line cannot be interpreted at all
};

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, std::string msg) {
    throw Error(code, std::move(msg));
}

inline void require(bool ok, Errc code, const std::string& msg) {
    if (!ok) {
        fail(code, msg);
    }
}

}  // namespace mloz
