#include "moran/errors.hpp"

namespace moran {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::InvalidParameter: return "InvalidParameter";
        case Errc::NoPrimeInWindow: return "NoPrimeInWindow";
        case Errc::OutOfRange: return "OutOfRange";
        case Errc::ScheduleTooShort: return "ScheduleTooShort";
        case Errc::NotCoprime: return "NotCoprime";
        case Errc::EvenPrime: return "EvenPrime";
        case Errc::TailNotCertifiable: return "TailNotCertifiable";
        case Errc::InvalidRange: return "InvalidRange";
        case Errc::TooLarge: return "TooLarge";
        case Errc::CounterexampleFound: return "CounterexampleFound";
        case Errc::NotWellDistributed: return "NotWellDistributed";
        case Errc::InvalidInterval: return "InvalidInterval";
        case Errc::NotInSupport: return "NotInSupport";
        case Errc::GaugeTooSmall: return "GaugeTooSmall";
    }
    return "Unknown";
}

}  // namespace moran
