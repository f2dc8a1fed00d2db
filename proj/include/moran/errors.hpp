#pragma once

#include <stdexcept>
#include <string>

namespace moran {

enum class Errc {
    InvalidParameter,
    NoPrimeInWindow,
    OutOfRange,
    ScheduleTooShort,
    NotCoprime,
    EvenPrime,
    TailNotCertifiable,
    InvalidRange,
    TooLarge,
    CounterexampleFound,
    NotWellDistributed,
    InvalidInterval,
    NotInSupport,
    GaugeTooSmall,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc c, const std::string& what)
        : std::runtime_error(std::string(errc_name(c)) + ": " + what), code_(c) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc c, const std::string& what) { throw Error(c, what); }

}  // namespace moran
